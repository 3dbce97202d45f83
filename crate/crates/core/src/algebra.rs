//! Finite algebras given by operation tables.
//!
//! The universe of an algebra of size `n` is always `{0, .., n-1}`. An
//! operation of arity `k` is stored as a flat row-major table of length
//! `n^k`: the argument tuple `(a_1, .., a_k)` sits at `Σ a_i · n^(k-i)`.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::bounds::{checked_pow, Bounds};
use crate::error::{Error, Result};
use crate::term::{Assignment, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

/// An ordered list of operation symbols. Order is significant: it fixes
/// table order in algebras and tie-breaking in every enumeration.
#[derive(Debug, Clone, Default)]
pub struct Signature {
    symbols: Vec<Symbol>,
    index: HashMap<String, usize>,
}

impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols
    }
}

impl Eq for Signature {}

impl Signature {
    pub fn new<S: Into<String>>(symbols: Vec<(S, usize)>) -> Result<Self> {
        let mut sig = Signature::default();
        for (name, arity) in symbols {
            sig.push(name.into(), arity)?;
        }
        Ok(sig)
    }

    pub fn empty() -> Self {
        Signature::default()
    }

    pub fn push(&mut self, name: String, arity: usize) -> Result<usize> {
        if name.is_empty() || name.bytes().any(|b| b.is_ascii_whitespace() || b == b'(' || b == b')') {
            return Err(Error::InvalidAlgebra(format!("bad symbol name `{name}`")));
        }
        if self.index.contains_key(&name) {
            return Err(Error::InvalidAlgebra(format!("duplicate symbol `{name}`")));
        }
        let idx = self.symbols.len();
        self.index.insert(name.clone(), idx);
        self.symbols.push(Symbol { name, arity });
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.symbols[idx].name
    }

    pub fn arity(&self, idx: usize) -> usize {
        self.symbols[idx].arity
    }

    pub fn max_arity(&self) -> usize {
        self.symbols.iter().map(|s| s.arity).max().unwrap_or(0)
    }
}

/// Row-major index of `tuple` over a universe of size `n`.
pub fn encode(tuple: &[usize], n: usize) -> usize {
    tuple.iter().fold(0, |acc, &a| acc * n + a)
}

/// Inverse of [`encode`] for tuples of length `len`.
pub fn decode(mut index: usize, n: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % n;
        index /= n;
    }
    out
}

/// Steps `tuple` to its row-major successor; returns false after the last tuple.
pub(crate) fn advance(tuple: &mut [usize], n: usize) -> bool {
    for slot in tuple.iter_mut().rev() {
        *slot += 1;
        if *slot < n {
            return true;
        }
        *slot = 0;
    }
    false
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteAlgebra {
    size: usize,
    signature: Signature,
    tables: Vec<Vec<usize>>,
}

impl FiniteAlgebra {
    pub fn new(size: usize, signature: Signature, tables: Vec<Vec<usize>>) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidAlgebra("universe must be nonempty".into()));
        }
        if tables.len() != signature.len() {
            return Err(Error::InvalidAlgebra(format!(
                "{} table(s) for {} symbol(s)",
                tables.len(),
                signature.len()
            )));
        }
        for (sym, table) in signature.symbols().iter().zip(&tables) {
            let want = checked_pow(size, sym.arity);
            if table.len() as u128 != want {
                return Err(Error::InvalidAlgebra(format!(
                    "table of `{}` has length {}, expected {}",
                    sym.name,
                    table.len(),
                    want
                )));
            }
            if let Some(&bad) = table.iter().find(|&&v| v >= size) {
                return Err(Error::InvalidAlgebra(format!(
                    "table of `{}` contains {} outside 0..{}",
                    sym.name, bad, size
                )));
            }
        }
        Ok(FiniteAlgebra {
            size,
            signature,
            tables,
        })
    }

    /// Convenience constructor from `(name, arity, table)` triples.
    pub fn from_ops<S: Into<String>>(size: usize, ops: Vec<(S, usize, Vec<usize>)>) -> Result<Self> {
        let mut sig = Signature::empty();
        let mut tables = Vec::with_capacity(ops.len());
        for (name, arity, table) in ops {
            sig.push(name.into(), arity)?;
            tables.push(table);
        }
        FiniteAlgebra::new(size, sig, tables)
    }

    /// An algebra with no operations.
    pub fn set(size: usize) -> Result<Self> {
        FiniteAlgebra::new(size, Signature::empty(), Vec::new())
    }

    /// The one-element algebra of the given signature.
    pub fn trivial(signature: &Signature) -> Self {
        let tables = vec![vec![0]; signature.len()];
        FiniteAlgebra {
            size: 1,
            signature: signature.clone(),
            tables,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn table(&self, op: usize) -> &[usize] {
        &self.tables[op]
    }

    pub fn tables(&self) -> &[Vec<usize>] {
        &self.tables
    }

    pub fn op_index(&self, name: &str) -> Result<usize> {
        self.signature
            .index_of(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    #[inline]
    pub fn apply(&self, op: usize, args: &[usize]) -> usize {
        self.tables[op][encode(args, self.size)]
    }

    /// Returns a copy with one more operation appended to the signature.
    pub fn with_operation(&self, name: &str, arity: usize, table: Vec<usize>) -> Result<Self> {
        let mut sig = self.signature.clone();
        sig.push(name.to_string(), arity)?;
        let mut tables = self.tables.clone();
        tables.push(table);
        FiniteAlgebra::new(self.size, sig, tables)
    }

    pub fn check_element(&self, a: usize) -> Result<()> {
        if a >= self.size {
            return Err(Error::ElementOutOfRange {
                element: a,
                size: self.size,
            });
        }
        Ok(())
    }

    /// Value of the term function of `t` at `env`.
    pub fn eval_term(&self, t: &Term, env: &Assignment) -> Result<usize> {
        match t {
            Term::Var(i) => {
                let v = env.get(*i).ok_or(Error::UnboundVariable(*i))?;
                self.check_element(v)?;
                Ok(v)
            }
            Term::App(f, args) => {
                let op = self.op_index(f)?;
                let arity = self.signature.arity(op);
                if arity != args.len() {
                    return Err(Error::ArityMismatch {
                        symbol: f.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                let mut idx = 0;
                for a in args {
                    idx = idx * self.size + self.eval_term(a, env)?;
                }
                Ok(self.tables[op][idx])
            }
        }
    }

    /// Full table of the `arity`-ary term function induced by `t`, in row-major
    /// order over `A^arity`.
    pub fn term_table(&self, t: &Term, arity: usize, bounds: &Bounds) -> Result<Vec<usize>> {
        let len = bounds.check_table("term function table", checked_pow(self.size, arity))?;
        self.term_table_unchecked(t, arity, len)
    }

    fn term_table_unchecked(&self, t: &Term, arity: usize, len: usize) -> Result<Vec<usize>> {
        match t {
            Term::Var(i) => {
                if *i >= arity {
                    return Err(Error::UnboundVariable(*i));
                }
                let stride = self.size.pow((arity - 1 - i) as u32);
                Ok((0..len).map(|ix| (ix / stride) % self.size).collect())
            }
            Term::App(f, args) => {
                let op = self.op_index(f)?;
                let k = self.signature.arity(op);
                if k != args.len() {
                    return Err(Error::ArityMismatch {
                        symbol: f.clone(),
                        expected: k,
                        found: args.len(),
                    });
                }
                let parts = args
                    .iter()
                    .map(|a| self.term_table_unchecked(a, arity, len))
                    .collect::<Result<Vec<_>>>()?;
                let table = &self.tables[op];
                Ok((0..len)
                    .map(|ix| table[parts.iter().fold(0, |acc, p| acc * self.size + p[ix])])
                    .collect())
            }
        }
    }

    /// Applies operation `op` pointwise to function tables of equal length.
    pub(crate) fn apply_pointwise(&self, op: usize, args: &[&[usize]], len: usize) -> Vec<usize> {
        let table = &self.tables[op];
        (0..len)
            .map(|ix| table[args.iter().fold(0, |acc, p| acc * self.size + p[ix])])
            .collect()
    }

    /// True iff every basic operation satisfies `f(x, .., x) = x`.
    ///
    /// A nullary symbol counts as idempotent only when the universe has a
    /// single element.
    pub fn is_idempotent(&self) -> bool {
        self.signature.symbols().iter().enumerate().all(|(op, sym)| {
            if sym.arity == 0 {
                return self.size == 1;
            }
            (0..self.size).all(|a| self.apply(op, &vec![a; sym.arity]) == a)
        })
    }

    /// True iff `h` commutes with every basic operation.
    pub fn is_homomorphism(&self, target: &FiniteAlgebra, h: &[usize]) -> Result<bool> {
        if self.signature != target.signature {
            return Err(Error::SignatureMismatch(
                "homomorphism between algebras of different signatures".into(),
            ));
        }
        if h.len() != self.size {
            return Err(Error::InvalidAlgebra(format!(
                "map has {} entries for a universe of size {}",
                h.len(),
                self.size
            )));
        }
        if let Some(&bad) = h.iter().find(|&&v| v >= target.size) {
            return Err(Error::ElementOutOfRange {
                element: bad,
                size: target.size,
            });
        }
        for (op, sym) in self.signature.symbols().iter().enumerate() {
            let mut args = vec![0; sym.arity];
            let mut image = vec![0; sym.arity];
            loop {
                for (dst, &a) in image.iter_mut().zip(&args) {
                    *dst = h[a];
                }
                if h[self.apply(op, &args)] != target.apply(op, &image) {
                    return Ok(false);
                }
                if !advance(&mut args, self.size) {
                    break;
                }
            }
        }
        Ok(true)
    }

    /// `A^k` with coordinatewise operations; tuples are encoded row-major.
    pub fn direct_power(&self, k: usize, bounds: &Bounds) -> Result<FiniteAlgebra> {
        if k == 0 {
            return Err(Error::InvalidAlgebra("direct power exponent must be positive".into()));
        }
        let size = bounds.check_universe("direct power", checked_pow(self.size, k))?;
        let mut tables = Vec::with_capacity(self.signature.len());
        for (op, sym) in self.signature.symbols().iter().enumerate() {
            let len = bounds.check_table("direct power table", checked_pow(size, sym.arity))?;
            let mut table = Vec::with_capacity(len);
            let mut coords = vec![0; sym.arity];
            for ix in 0..len {
                let args = decode(ix, size, sym.arity);
                let mut out = 0;
                for c in 0..k {
                    let stride = self.size.pow((k - 1 - c) as u32);
                    for (slot, &a) in coords.iter_mut().zip(&args) {
                        *slot = (a / stride) % self.size;
                    }
                    out = out * self.size + self.apply(op, &coords);
                }
                table.push(out);
            }
            tables.push(table);
        }
        FiniteAlgebra::new(size, self.signature.clone(), tables)
    }

    /// The subalgebra generated by `seeds`, relabelled to `{0, .., m-1}` in
    /// increasing order of the original elements.
    pub fn generated_subalgebra(&self, seeds: &[usize], bounds: &Bounds) -> Result<Subalgebra> {
        for &s in seeds {
            self.check_element(s)?;
        }
        let closure = close(seeds, &self.signature, bounds, |op, args: &[&usize]| {
            let args: Vec<usize> = args.iter().map(|a| **a).collect();
            self.apply(op, &args)
        })?;
        let mut order: Vec<usize> = (0..closure.elements.len()).collect();
        order.sort_by_key(|&i| closure.elements[i]);
        let subuniverse: Vec<usize> = order.iter().map(|&i| closure.elements[i]).collect();
        let terms: Vec<Term> = order.iter().map(|&i| closure.terms[i].clone()).collect();
        let mut relabel = vec![usize::MAX; self.size];
        for (new, &old) in subuniverse.iter().enumerate() {
            relabel[old] = new;
        }
        let m = subuniverse.len();
        let mut tables = Vec::with_capacity(self.signature.len());
        for (op, sym) in self.signature.symbols().iter().enumerate() {
            let len = bounds.check_table("subalgebra table", checked_pow(m, sym.arity))?;
            let mut table = Vec::with_capacity(len);
            let mut args = vec![0; sym.arity];
            for ix in 0..len {
                for (slot, &a) in args.iter_mut().zip(&decode(ix, m, sym.arity)) {
                    *slot = subuniverse[a];
                }
                table.push(relabel[self.apply(op, &args)]);
            }
            tables.push(table);
        }
        Ok(Subalgebra {
            algebra: FiniteAlgebra::new(m, self.signature.clone(), tables)?,
            subuniverse,
            terms,
        })
    }

    /// The free algebra on two generators in the variety generated by `self`,
    /// realised as the subalgebra of `A^(A×A)` generated by the two projections.
    /// The full power is never materialised.
    pub fn free_algebra_2gen(&self, bounds: &Bounds) -> Result<FreeAlgebra> {
        let n = self.size;
        let width = bounds.check_table("free algebra element", (n as u128) * (n as u128))?;
        let gx: Vec<usize> = (0..width).map(|ix| ix / n).collect();
        let gy: Vec<usize> = (0..width).map(|ix| ix % n).collect();
        let closure = close(&[gx, gy], &self.signature, bounds, |op, args: &[&Vec<usize>]| {
            let parts: Vec<&[usize]> = args.iter().map(|a| a.as_slice()).collect();
            self.apply_pointwise(op, &parts, width)
        })?;
        let elements = closure.elements;
        let m = elements.len();
        let lookup: HashMap<&[usize], usize> =
            elements.iter().enumerate().map(|(i, e)| (e.as_slice(), i)).collect();
        let mut tables = Vec::with_capacity(self.signature.len());
        for (op, sym) in self.signature.symbols().iter().enumerate() {
            let len = bounds.check_table("free algebra table", checked_pow(m, sym.arity))?;
            let mut table = Vec::with_capacity(len);
            for ix in 0..len {
                let parts: Vec<&[usize]> = decode(ix, m, sym.arity)
                    .into_iter()
                    .map(|a| elements[a].as_slice())
                    .collect();
                let value = self.apply_pointwise(op, &parts, width);
                table.push(lookup[value.as_slice()]);
            }
            tables.push(table);
        }
        let gen_y = if m == 1 { 0 } else { 1 };
        Ok(FreeAlgebra {
            algebra: FiniteAlgebra::new(m, self.signature.clone(), tables)?,
            gen_x: 0,
            gen_y,
            functions: elements,
            terms: closure.terms,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Subalgebra {
    /// Members of the subuniverse in increasing order; also the embedding
    /// from the relabelled universe into the parent.
    pub subuniverse: Vec<usize>,
    pub algebra: FiniteAlgebra,
    /// For each member, a term in the seed variables that produces it.
    pub terms: Vec<Term>,
}

impl Subalgebra {
    pub fn embed(&self, element: usize) -> usize {
        self.subuniverse[element]
    }
}

#[derive(Debug, Clone)]
pub struct FreeAlgebra {
    pub algebra: FiniteAlgebra,
    pub gen_x: usize,
    pub gen_y: usize,
    /// Each element as a binary term function of the base algebra, tabled over `A×A`.
    pub functions: Vec<Vec<usize>>,
    /// Each element as a term in `x0` (the x-generator) and `x1` (the y-generator).
    pub terms: Vec<Term>,
}

pub(crate) struct Closure<T> {
    pub elements: Vec<T>,
    pub terms: Vec<Term>,
}

/// Closes `seeds` under the operations of `sig`, with `apply` interpreting
/// them. Seeds come first (duplicates dropped), then constants, then rounds
/// of new elements in symbol order and lexicographic argument order. Each
/// element records the first term that produced it, over seed variables.
pub(crate) fn close<T, F>(seeds: &[T], sig: &Signature, bounds: &Bounds, apply: F) -> Result<Closure<T>>
where
    T: Clone + Eq + Hash,
    F: Fn(usize, &[&T]) -> T,
{
    let mut seen: HashMap<T, usize> = HashMap::new();
    let mut elements: Vec<T> = Vec::new();
    let mut terms: Vec<Term> = Vec::new();
    let mut push = |value: T, term: Term, elements: &mut Vec<T>, terms: &mut Vec<Term>| -> Result<()> {
        if seen.contains_key(&value) {
            return Ok(());
        }
        if elements.len() >= bounds.universe {
            return Err(Error::SizeBound {
                what: "generated subalgebra",
                size: elements.len() as u128 + 1,
                bound: bounds.universe as u128,
            });
        }
        seen.insert(value.clone(), elements.len());
        elements.push(value);
        terms.push(term);
        Ok(())
    };
    for (i, s) in seeds.iter().enumerate() {
        push(s.clone(), Term::Var(i), &mut elements, &mut terms)?;
    }
    for (op, sym) in sig.symbols().iter().enumerate() {
        if sym.arity == 0 {
            push(apply(op, &[]), Term::constant(sym.name.clone()), &mut elements, &mut terms)?;
        }
    }
    if elements.is_empty() {
        return Err(Error::EmptySubuniverse);
    }
    let mut done = 0;
    let mut work: u64 = 0;
    loop {
        let cur = elements.len();
        if done == cur {
            break;
        }
        for (op, sym) in sig.symbols().iter().enumerate() {
            if sym.arity == 0 {
                continue;
            }
            let mut idx = vec![0; sym.arity];
            loop {
                if idx.iter().any(|&i| i >= done) {
                    work += 1;
                    if work > bounds.enumeration {
                        return Err(Error::BudgetExceeded {
                            what: "subalgebra closure",
                            budget: bounds.enumeration,
                        });
                    }
                    let args: Vec<&T> = idx.iter().map(|&i| &elements[i]).collect();
                    let value = apply(op, &args);
                    let term = Term::App(
                        sym.name.clone(),
                        idx.iter().map(|&i| terms[i].clone()).collect(),
                    );
                    push(value, term, &mut elements, &mut terms)?;
                }
                if !advance(&mut idx, cur) {
                    break;
                }
            }
        }
        done = cur;
    }
    Ok(Closure { elements, terms })
}
