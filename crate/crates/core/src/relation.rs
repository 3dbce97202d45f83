//! Binary relations, partitions and a union-find.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary relation on `{0, .., n-1}` stored as a dense bit matrix.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "RelDoc", try_from = "RelDoc")]
pub struct BinRel {
    n: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RelDoc {
    size: usize,
    pairs: Vec<(usize, usize)>,
}

impl From<BinRel> for RelDoc {
    fn from(r: BinRel) -> Self {
        RelDoc {
            size: r.n,
            pairs: r.pairs().collect(),
        }
    }
}

impl TryFrom<RelDoc> for BinRel {
    type Error = Error;
    fn try_from(doc: RelDoc) -> Result<Self> {
        BinRel::from_pairs(doc.size, doc.pairs)
    }
}

impl BinRel {
    pub fn empty(n: usize) -> Self {
        let words_per_row = n.div_ceil(64).max(1);
        BinRel {
            n,
            words_per_row,
            bits: vec![0; words_per_row * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = BinRel::empty(n);
        for a in 0..n {
            r.insert(a, a);
        }
        r
    }

    pub fn full(n: usize) -> Self {
        let mut r = BinRel::empty(n);
        for a in 0..n {
            for b in 0..n {
                r.insert(a, b);
            }
        }
        r
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(n: usize, pairs: I) -> Result<Self> {
        let mut r = BinRel::empty(n);
        for (a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::ElementOutOfRange {
                    element: a.max(b),
                    size: n,
                });
            }
            r.insert(a, b);
        }
        Ok(r)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words_per_row + b / 64] >> (b % 64) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, a: usize, b: usize) {
        self.bits[a * self.words_per_row + b / 64] |= 1 << (b % 64);
    }

    fn row(&self, a: usize) -> &[u64] {
        &self.bits[a * self.words_per_row..(a + 1) * self.words_per_row]
    }

    /// Pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |a| (0..self.n).filter(move |&b| self.contains(a, b)).map(move |b| (a, b)))
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    fn same_size(&self, other: &BinRel) -> Result<()> {
        if self.n != other.n {
            return Err(Error::UniverseMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn union(&self, other: &BinRel) -> Result<BinRel> {
        self.same_size(other)?;
        let mut out = self.clone();
        out.bits.iter_mut().zip(&other.bits).for_each(|(x, y)| *x |= y);
        Ok(out)
    }

    pub fn intersection(&self, other: &BinRel) -> Result<BinRel> {
        self.same_size(other)?;
        let mut out = self.clone();
        out.bits.iter_mut().zip(&other.bits).for_each(|(x, y)| *x &= y);
        Ok(out)
    }

    /// Relational product `{(a, c) : ∃b. (a, b) ∈ self, (b, c) ∈ other}`.
    pub fn compose(&self, other: &BinRel) -> Result<BinRel> {
        self.same_size(other)?;
        let mut out = BinRel::empty(self.n);
        let w = self.words_per_row;
        for a in 0..self.n {
            for b in 0..self.n {
                if self.contains(a, b) {
                    let src = other.row(b);
                    let dst = &mut out.bits[a * w..(a + 1) * w];
                    dst.iter_mut().zip(src).for_each(|(x, y)| *x |= y);
                }
            }
        }
        Ok(out)
    }

    pub fn is_subset(&self, other: &BinRel) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(x, y)| x & !y == 0)
    }

    pub fn is_equivalence(&self) -> bool {
        (0..self.n).all(|a| self.contains(a, a))
            && self.pairs().all(|(a, b)| self.contains(b, a))
            && self.compose(self).map(|c| c.is_subset(self)).unwrap_or(false)
    }

    pub fn to_partition(&self) -> Option<Partition> {
        if !self.is_equivalence() {
            return None;
        }
        let block_of = (0..self.n)
            .map(|a| (0..=a).find(|&b| self.contains(a, b)).unwrap_or(a))
            .collect();
        Some(Partition { block_of })
    }

    /// First pair in row-major order lying in exactly one of the two relations.
    pub fn first_difference(&self, other: &BinRel) -> Option<(usize, usize)> {
        if self.n != other.n {
            return None;
        }
        (0..self.n)
            .flat_map(|a| (0..self.n).map(move |b| (a, b)))
            .find(|&(a, b)| self.contains(a, b) != other.contains(a, b))
    }
}

impl fmt::Debug for BinRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

/// An equivalence relation given by the least element of each block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    block_of: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Partition::from_block_of(v)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.block_of
    }
}

impl Partition {
    pub fn identity(n: usize) -> Self {
        Partition {
            block_of: (0..n).collect(),
        }
    }

    pub fn full(n: usize) -> Self {
        Partition { block_of: vec![0; n] }
    }

    /// Validates a canonical block-representative vector.
    pub fn from_block_of(block_of: Vec<usize>) -> Result<Self> {
        for (x, &r) in block_of.iter().enumerate() {
            if r > x || block_of[r] != r {
                return Err(Error::Format(format!(
                    "block vector is not canonical at element {x}"
                )));
            }
        }
        Ok(Partition { block_of })
    }

    /// The equivalence relation generated by `pairs`.
    pub fn generated_by<I: IntoIterator<Item = (usize, usize)>>(n: usize, pairs: I) -> Self {
        let mut uf = UnionFind::new(n);
        for (a, b) in pairs {
            uf.union(a, b);
        }
        uf.into_partition()
    }

    pub fn size(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self) -> &[usize] {
        &self.block_of
    }

    #[inline]
    pub fn related(&self, a: usize, b: usize) -> bool {
        self.block_of[a] == self.block_of[b]
    }

    pub fn num_blocks(&self) -> usize {
        self.block_of.iter().enumerate().filter(|(x, &r)| *x == r).count()
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.size()];
        for (x, &r) in self.block_of.iter().enumerate() {
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(x);
        }
        out
    }

    pub fn to_relation(&self) -> BinRel {
        let n = self.size();
        let mut r = BinRel::empty(n);
        for a in 0..n {
            for b in 0..n {
                if self.related(a, b) {
                    r.insert(a, b);
                }
            }
        }
        r
    }

    /// `self ⊆ other` as relations.
    pub fn refines(&self, other: &Partition) -> bool {
        self.size() == other.size()
            && (0..self.size()).all(|x| other.related(x, self.block_of[x]))
    }

    pub fn meet(&self, other: &Partition) -> Partition {
        let n = self.size();
        let mut first: std::collections::HashMap<(usize, usize), usize> = Default::default();
        let block_of = (0..n)
            .map(|x| *first.entry((self.block_of[x], other.block_of[x])).or_insert(x))
            .collect();
        Partition { block_of }
    }

    /// Pairs `(x, rep(x))` for every non-representative `x`; generates the partition.
    pub fn spanning_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.block_of
            .iter()
            .enumerate()
            .filter(|(x, r)| *x != **r)
            .map(|(x, &r)| (r, x))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks = self.blocks();
        for (i, b) in blocks.iter().enumerate() {
            if i > 0 {
                write!(f, "|")?;
            }
            let s: Vec<String> = b.iter().map(|x| x.to_string()).collect();
            write!(f, "{}", s.join(","))?;
        }
        Ok(())
    }
}

/// Union-find with path halving and union by rank.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when `a` and `b` were in different classes.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }

    pub fn into_partition(mut self) -> Partition {
        let n = self.parent.len();
        let mut least = vec![usize::MAX; n];
        let mut block_of = vec![0; n];
        for (x, slot) in block_of.iter_mut().enumerate() {
            let r = self.find(x);
            if least[r] == usize::MAX {
                least[r] = x;
            }
            *slot = least[r];
        }
        Partition { block_of }
    }
}
