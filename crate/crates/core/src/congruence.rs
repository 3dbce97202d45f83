//! Congruence generation with derivation chains, congruence lattices, and the
//! operations of the relation algebra `Rel(A)`: `∩`, `∨` (congruence
//! generated by the union), `∘`, and the tensor `⊗`.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::algebra::{advance, FiniteAlgebra};
use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::relation::{BinRel, Partition, UnionFind};
use crate::term::Polynomial;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Reason {
    Seed(usize),
    /// `(u, v) = (f(.., x, ..), f(.., y, ..))` where `(x, y)` is edge `parent`.
    Translate {
        op: usize,
        position: usize,
        fillers: Vec<usize>,
        parent: usize,
    },
}

/// One successful union during congruence generation.
#[derive(Debug, Clone, PartialEq, Eq)]
struct MergeEdge {
    u: usize,
    v: usize,
    reason: Reason,
}

/// The least congruence containing a seed set, with the merge log needed to
/// explain any of its pairs.
#[derive(Debug, Clone)]
pub struct CongruenceGeneration {
    pub partition: Partition,
    seeds: Vec<(usize, usize)>,
    edges: Vec<MergeEdge>,
}

/// The least congruence of `a` containing `seeds`.
pub fn theta(a: &FiniteAlgebra, seeds: &[(usize, usize)]) -> Result<Partition> {
    Ok(generate(a, seeds)?.partition)
}

/// Congruence generation keeping the merge log.
///
/// Union-find seeded with the pairs; every successful union `(x, y)` is
/// queued, and processing it merges `f(.., x, ..)` with `f(.., y, ..)` for
/// every basic operation, argument position and filler tuple.
pub fn generate(a: &FiniteAlgebra, seeds: &[(usize, usize)]) -> Result<CongruenceGeneration> {
    let n = a.size();
    for &(x, y) in seeds {
        a.check_element(x)?;
        a.check_element(y)?;
    }
    let mut uf = UnionFind::new(n);
    let mut edges: Vec<MergeEdge> = Vec::new();
    let mut queue = VecDeque::new();
    for (s, &(x, y)) in seeds.iter().enumerate() {
        if uf.union(x, y) {
            queue.push_back(edges.len());
            edges.push(MergeEdge {
                u: x,
                v: y,
                reason: Reason::Seed(s),
            });
        }
    }
    let sig = a.signature();
    'work: while let Some(ei) = queue.pop_front() {
        if edges.len() + 1 == n {
            break;
        }
        let (x, y) = (edges[ei].u, edges[ei].v);
        for (op, sym) in sig.symbols().iter().enumerate() {
            let k = sym.arity;
            if k == 0 {
                continue;
            }
            let mut fillers = vec![0; k - 1];
            let mut args_x = vec![0; k];
            let mut args_y = vec![0; k];
            loop {
                for position in 0..k {
                    let mut f = fillers.iter();
                    for slot in 0..k {
                        if slot == position {
                            args_x[slot] = x;
                            args_y[slot] = y;
                        } else {
                            let c = *f.next().expect("k-1 fillers");
                            args_x[slot] = c;
                            args_y[slot] = c;
                        }
                    }
                    let (u, v) = (a.apply(op, &args_x), a.apply(op, &args_y));
                    if uf.union(u, v) {
                        queue.push_back(edges.len());
                        edges.push(MergeEdge {
                            u,
                            v,
                            reason: Reason::Translate {
                                op,
                                position,
                                fillers: fillers.clone(),
                                parent: ei,
                            },
                        });
                        if edges.len() + 1 == n {
                            break 'work;
                        }
                    }
                }
                if !advance(&mut fillers, n) {
                    break;
                }
            }
        }
    }
    Ok(CongruenceGeneration {
        partition: uf.into_partition(),
        seeds: seeds.to_vec(),
        edges,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

/// One link of a Maltsev chain: `from = witness(e')`, `to = witness(g')`,
/// where `(e', g')` is the generator pair read in `direction`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStep {
    pub from: usize,
    pub to: usize,
    pub seed_index: usize,
    pub generator: (usize, usize),
    pub direction: Direction,
    pub witness: Polynomial,
}

impl ChainStep {
    pub fn oriented_generator(&self) -> (usize, usize) {
        match self.direction {
            Direction::Forward => self.generator,
            Direction::Reverse => (self.generator.1, self.generator.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationChain {
    pub endpoints: (usize, usize),
    pub steps: Vec<ChainStep>,
}

impl DerivationChain {
    /// Replays the chain in `a` against `seeds`: links compose, endpoints match,
    /// every generator is a seed, and every witness maps its generator pair
    /// onto the link.
    pub fn validate(&self, a: &FiniteAlgebra, seeds: &[(usize, usize)]) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCertificate(msg));
        let (start, end) = self.endpoints;
        if self.steps.is_empty() {
            return if start == end {
                Ok(())
            } else {
                bad(format!("empty chain between distinct elements {start} and {end}"))
            };
        }
        let mut at = start;
        for (i, step) in self.steps.iter().enumerate() {
            if step.from != at {
                return bad(format!("step {i} starts at {} instead of {at}", step.from));
            }
            if seeds.get(step.seed_index) != Some(&step.generator) {
                return bad(format!("step {i} cites a generator that is not seed {}", step.seed_index));
            }
            let (e, g) = step.oriented_generator();
            let lhs = a.eval_term(&step.witness.term, &step.witness.env(e))?;
            let rhs = a.eval_term(&step.witness.term, &step.witness.env(g))?;
            if lhs != step.from || rhs != step.to {
                return bad(format!(
                    "step {i}: witness maps ({e}, {g}) to ({lhs}, {rhs}), not ({}, {})",
                    step.from, step.to
                ));
            }
            if step.witness.term.var_bound() > step.witness.constants.len() + 1 {
                return bad(format!("step {i}: witness has unassigned constant slots"));
            }
            at = step.to;
        }
        if at != end {
            return bad(format!("chain ends at {at} instead of {end}"));
        }
        Ok(())
    }
}

impl CongruenceGeneration {
    fn edge_polynomial(&self, a: &FiniteAlgebra, ei: usize) -> (usize, Polynomial) {
        match &self.edges[ei].reason {
            Reason::Seed(s) => (*s, Polynomial::identity()),
            Reason::Translate {
                op,
                position,
                fillers,
                parent,
            } => {
                let (s, inner) = self.edge_polynomial(a, *parent);
                let outer = Polynomial::translation(a.signature().name(*op), *position, fillers);
                (s, outer.compose(&inner))
            }
        }
    }

    /// A Maltsev chain from `from` to `to`, or `NotDerivable`.
    pub fn chain(&self, a: &FiniteAlgebra, from: usize, to: usize) -> Result<DerivationChain> {
        let n = self.partition.size();
        if from >= n || to >= n {
            return Err(Error::ElementOutOfRange {
                element: from.max(to),
                size: n,
            });
        }
        if !self.partition.related(from, to) {
            return Err(Error::NotDerivable(from, to));
        }
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (ei, e) in self.edges.iter().enumerate() {
            adjacency[e.u].push(ei);
            adjacency[e.v].push(ei);
        }
        // the merge edges form a forest, so the BFS path is the unique path
        let mut via: Vec<Option<usize>> = vec![None; n];
        let mut visited = vec![false; n];
        visited[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            if x == to {
                break;
            }
            for &ei in &adjacency[x] {
                let e = &self.edges[ei];
                let y = if e.u == x { e.v } else { e.u };
                if !visited[y] {
                    visited[y] = true;
                    via[y] = Some(ei);
                    queue.push_back(y);
                }
            }
        }
        let mut path = Vec::new();
        let mut x = to;
        while x != from {
            let ei = via[x].expect("related elements are connected in the merge forest");
            let e = &self.edges[ei];
            let prev = if e.v == x { e.u } else { e.v };
            path.push((ei, prev, x));
            x = prev;
        }
        path.reverse();
        let steps = path
            .into_iter()
            .map(|(ei, x, y)| {
                let (seed_index, witness) = self.edge_polynomial(a, ei);
                let e = &self.edges[ei];
                let direction = if e.u == x {
                    Direction::Forward
                } else {
                    Direction::Reverse
                };
                ChainStep {
                    from: x,
                    to: y,
                    seed_index,
                    generator: self.seeds[seed_index],
                    direction,
                    witness,
                }
            })
            .collect();
        Ok(DerivationChain {
            endpoints: (from, to),
            steps,
        })
    }
}

/// A derivation chain showing `(from, to) ∈ Θ^A(seeds)`.
pub fn extract_chain(
    a: &FiniteAlgebra,
    seeds: &[(usize, usize)],
    from: usize,
    to: usize,
) -> Result<DerivationChain> {
    generate(a, seeds)?.chain(a, from, to)
}

/// Block compatibility of `p` with every basic operation.
pub fn is_congruence(a: &FiniteAlgebra, p: &Partition) -> bool {
    if p.size() != a.size() {
        return false;
    }
    let n = a.size();
    let pairs: Vec<(usize, usize)> = p.spanning_pairs().collect();
    for (op, sym) in a.signature().symbols().iter().enumerate() {
        let k = sym.arity;
        if k == 0 {
            continue;
        }
        let mut fillers = vec![0; k - 1];
        let mut args = vec![0; k];
        loop {
            for position in 0..k {
                for &(x, y) in &pairs {
                    let mut f = fillers.iter();
                    for (slot, arg) in args.iter_mut().enumerate() {
                        *arg = if slot == position { x } else { *f.next().unwrap() };
                    }
                    let u = a.apply(op, &args);
                    args[position] = y;
                    if !p.related(u, a.apply(op, &args)) {
                        return false;
                    }
                }
            }
            if !advance(&mut fillers, n) {
                break;
            }
        }
    }
    true
}

/// Join of two congruences.
pub fn join(a: &FiniteAlgebra, x: &Partition, y: &Partition) -> Result<Partition> {
    let seeds: Vec<(usize, usize)> = x.spanning_pairs().chain(y.spanning_pairs()).collect();
    theta(a, &seeds)
}

/// The congruence lattice in canonical order: by rank (`n - #blocks`), then
/// lexicographically by block-representative vector. `Δ` is first, `∇` last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConLattice {
    pub congruences: Vec<Partition>,
    /// `leq[i][j]` iff congruence `i` is contained in congruence `j`.
    pub leq: Vec<Vec<bool>>,
    index: HashMap<Partition, usize>,
}

impl ConLattice {
    fn from_set(mut congruences: Vec<Partition>) -> Self {
        congruences.sort_by(|p, q| {
            (p.size() - p.num_blocks(), p.block_of()).cmp(&(q.size() - q.num_blocks(), q.block_of()))
        });
        let leq = congruences
            .iter()
            .map(|p| congruences.iter().map(|q| p.refines(q)).collect())
            .collect();
        let index = congruences.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        ConLattice {
            congruences,
            leq,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.congruences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.congruences.is_empty()
    }

    pub fn index_of(&self, p: &Partition) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn bottom(&self) -> &Partition {
        &self.congruences[0]
    }

    pub fn top(&self) -> &Partition {
        self.congruences.last().expect("nonempty lattice")
    }

    /// Index of the join; the set is closed, so it is always present.
    pub fn join_index(&self, i: usize, j: usize) -> usize {
        (0..self.len())
            .filter(|&k| self.leq[i][k] && self.leq[j][k])
            .find(|&k| (0..self.len()).all(|m| !(self.leq[i][m] && self.leq[j][m]) || self.leq[k][m]))
            .expect("congruence lattice has joins")
    }

    pub fn meet_index(&self, i: usize, j: usize) -> usize {
        self.index_of(&self.congruences[i].meet(&self.congruences[j]))
            .expect("meet of congruences is a congruence")
    }

    /// Covering pairs `(i, j)`: `i < j` with nothing strictly between.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let lt = |i: usize, j: usize| i != j && self.leq[i][j];
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if lt(i, j) && !(0..n).any(|k| lt(i, k) && lt(k, j)) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// All congruences of `a`: principal congruences closed under joins, plus `Δ`.
pub fn con(a: &FiniteAlgebra, bounds: &Bounds) -> Result<ConLattice> {
    let n = a.size();
    if n > bounds.con_universe {
        return Err(Error::SizeBound {
            what: "congruence lattice universe",
            size: n as u128,
            bound: bounds.con_universe as u128,
        });
    }
    let mut seen: HashMap<Partition, ()> = HashMap::new();
    let mut list = vec![Partition::identity(n)];
    seen.insert(list[0].clone(), ());
    let mut principals = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            let p = theta(a, &[(x, y)])?;
            if seen.insert(p.clone(), ()).is_none() {
                list.push(p.clone());
                principals.push(p);
            }
        }
    }
    let mut i = 0;
    while i < list.len() {
        for p in &principals {
            let j = join(a, &list[i], p)?;
            if seen.insert(j.clone(), ()).is_none() {
                list.push(j);
            }
        }
        i += 1;
    }
    Ok(ConLattice::from_set(list))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelOp {
    Meet,
    Join,
    Compose,
}

/// The operations of `Rel(A)`. Join is `Θ^A(α ∪ β)` and accepts arbitrary relations.
pub fn rel_combine(op: RelOp, a: &FiniteAlgebra, x: &BinRel, y: &BinRel) -> Result<BinRel> {
    for r in [x, y] {
        if r.size() != a.size() {
            return Err(Error::UniverseMismatch {
                left: r.size(),
                right: a.size(),
            });
        }
    }
    match op {
        RelOp::Meet => x.intersection(y),
        RelOp::Compose => x.compose(y),
        RelOp::Join => {
            let seeds: Vec<(usize, usize)> = x.pairs().chain(y.pairs()).collect();
            Ok(theta(a, &seeds)?.to_relation())
        }
    }
}

/// `α ⊗ β = {((a,b),(c,d)) : (a,c) ∈ α, (b,d) ∈ β}` on the squared universe,
/// pairs encoded row-major.
pub fn tensor(x: &BinRel, y: &BinRel) -> Result<BinRel> {
    if x.size() != y.size() {
        return Err(Error::UniverseMismatch {
            left: x.size(),
            right: y.size(),
        });
    }
    let n = x.size();
    let mut out = BinRel::empty(n * n);
    for (a, c) in x.pairs() {
        for (b, d) in y.pairs() {
            out.insert(a * n + b, c * n + d);
        }
    }
    Ok(out)
}

/// `λ(α) = α ⊗ α`.
pub fn lambda(x: &BinRel) -> BinRel {
    tensor(x, x).expect("same universe")
}

/// `λ` on a partition; the result is again a partition.
pub fn lambda_partition(p: &Partition) -> Partition {
    lambda(&p.to_relation())
        .to_partition()
        .expect("tensor of equivalences is an equivalence")
}
