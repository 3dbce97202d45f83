//! Matrix powers `A^[n]`.
//!
//! The full matrix power has one basic operation `m_t` for every tuple
//! `t = ⟨t_1, .., t_n⟩` of `kn`-ary terms. We present it by a finite
//! generating set: every base operation lifted coordinatewise, `splice`
//! (`⟨y_1, x_2, .., x_n⟩`) and `shift` (`⟨x_2, .., x_n, x_1⟩`), plus for
//! `n = 2` the operations `arrow` (`⟨x_1, y_1⟩`), `backarrow` (`⟨x_2, y_2⟩`)
//! and `box` (`⟨x_2, x_1⟩`). [`express_m_t`] writes any `m_t` as a term over
//! this signature.

use crate::algebra::{decode, encode, FiniteAlgebra};
use crate::algebraize::{self, TransformerVerdict};
use crate::bounds::{checked_pow, Bounds};
use crate::clone::distinct_term_functions;
use crate::congruence::{self, con, is_congruence, lambda, rel_combine, RelOp};
use crate::error::{Error, Result};
use crate::relation::BinRel;
use crate::term::Term;

pub const SPLICE: &str = "splice";
pub const SHIFT: &str = "shift";
pub const ARROW: &str = "arrow";
pub const BACKARROW: &str = "backarrow";
pub const BOX: &str = "box";

/// Row-major bijection between `A^n` and `{0, .., |A|^n - 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleCodec {
    pub base: usize,
    pub exponent: usize,
}

impl TupleCodec {
    pub fn encode(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.exponent);
        encode(tuple, self.base)
    }

    pub fn decode(&self, code: usize) -> Vec<usize> {
        decode(code, self.base, self.exponent)
    }

    pub fn format(&self, code: usize) -> String {
        let parts: Vec<String> = self.decode(code).iter().map(|a| a.to_string()).collect();
        format!("<{}>", parts.join(","))
    }
}

#[derive(Debug, Clone)]
pub struct MatrixPowerAlgebra {
    pub base: FiniteAlgebra,
    pub exponent: usize,
    pub result: FiniteAlgebra,
    pub codec: TupleCodec,
}

/// An operation table of arity `arity` over some universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationTable {
    pub arity: usize,
    pub table: Vec<usize>,
}

/// `n` terms of a shared arity `k·n`, `k ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermTuple {
    k: usize,
    terms: Vec<Term>,
}

impl TermTuple {
    /// `arity` is the common arity of the terms; it must be a positive multiple of `n`.
    pub fn new(terms: Vec<Term>, arity: usize) -> Result<Self> {
        let n = terms.len();
        if n == 0 {
            return Err(Error::InvalidTerm("a term tuple needs at least one term".into()));
        }
        if arity == 0 || !arity.is_multiple_of(n) {
            return Err(Error::InvalidTerm(format!(
                "arity {arity} is not a positive multiple of {n}"
            )));
        }
        if let Some(t) = terms.iter().find(|t| t.var_bound() > arity) {
            return Err(Error::InvalidTerm(format!("{t} uses a variable beyond arity {arity}")));
        }
        Ok(TermTuple { k: arity / n, terms })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }
}

/// Builds `A^[n]` over the finite generating signature.
pub fn matrix_power(a: &FiniteAlgebra, n: usize, bounds: &Bounds) -> Result<MatrixPowerAlgebra> {
    if n == 0 {
        return Err(Error::InvalidAlgebra("matrix power exponent must be positive".into()));
    }
    let lifted = a.direct_power(n, bounds)?;
    let size = lifted.size();
    let codec = TupleCodec {
        base: a.size(),
        exponent: n,
    };
    bounds.check_table("matrix power table", (size as u128) * (size as u128))?;

    let mut extra: Vec<(&str, usize, Vec<usize>)> = Vec::new();
    type Combine<'a> = &'a dyn Fn(&[usize], &[usize]) -> Vec<usize>;
    let binary = |f: Combine| -> Vec<usize> {
        (0..size * size)
            .map(|ix| {
                let (x, y) = (codec.decode(ix / size), codec.decode(ix % size));
                codec.encode(&f(&x, &y))
            })
            .collect()
    };
    let unary = |f: &dyn Fn(&[usize]) -> Vec<usize>| -> Vec<usize> {
        (0..size).map(|ix| codec.encode(&f(&codec.decode(ix)))).collect()
    };
    extra.push((
        SPLICE,
        2,
        binary(&|x, y| {
            let mut out = x.to_vec();
            out[0] = y[0];
            out
        }),
    ));
    extra.push((
        SHIFT,
        1,
        unary(&|x| {
            let mut out = x.to_vec();
            out.rotate_left(1);
            out
        }),
    ));
    if n == 2 {
        extra.push((ARROW, 2, binary(&|x, y| vec![x[0], y[0]])));
        extra.push((BACKARROW, 2, binary(&|x, y| vec![x[1], y[1]])));
        extra.push((BOX, 1, unary(&|x| vec![x[1], x[0]])));
    }
    let mut result = lifted;
    for (name, arity, table) in extra {
        if result.signature().index_of(name).is_some() {
            return Err(Error::SignatureMismatch(format!(
                "base signature already uses the reserved name `{name}`"
            )));
        }
        result = result.with_operation(name, arity, table)?;
    }
    Ok(MatrixPowerAlgebra {
        base: a.clone(),
        exponent: n,
        result,
        codec,
    })
}

/// The table of `m_t`: component `i` of the output is `t_i` evaluated at the
/// concatenated coordinates of the `k` input tuples.
pub fn m_t_table(a: &FiniteAlgebra, n: usize, t: &TermTuple, bounds: &Bounds) -> Result<OperationTable> {
    if t.n() != n {
        return Err(Error::InvalidTerm(format!(
            "term tuple has {} components, matrix power exponent is {n}",
            t.n()
        )));
    }
    let arity = t.k * n;
    for term in &t.terms {
        term.check(a.signature())?;
    }
    let parts = t
        .terms
        .iter()
        .map(|term| a.term_table(term, arity, bounds))
        .collect::<Result<Vec<_>>>()?;
    let len = parts[0].len();
    let table = (0..len)
        .map(|ix| parts.iter().fold(0, |acc, p| acc * a.size() + p[ix]))
        .collect();
    Ok(OperationTable { arity: t.k, table })
}

impl MatrixPowerAlgebra {
    /// The term tuple whose `m_t` is the basic operation `symbol` of the
    /// finite signature. Lifted nullary operations are not of this form.
    pub fn defining_tuple(&self, symbol: &str) -> Result<TermTuple> {
        let n = self.exponent;
        let v = Term::Var;
        let terms: Vec<Term> = match symbol {
            SPLICE => (0..n).map(|i| if i == 0 { v(n) } else { v(i) }).collect(),
            SHIFT => (0..n).map(|i| v((i + 1) % n)).collect(),
            ARROW if n == 2 => vec![v(0), v(2)],
            BACKARROW if n == 2 => vec![v(1), v(3)],
            BOX if n == 2 => vec![v(1), v(0)],
            _ => {
                let op = self.base.op_index(symbol)?;
                let k = self.base.signature().arity(op);
                if k == 0 {
                    return Err(Error::InvalidTerm(format!(
                        "`{symbol}` is nullary and has no defining term tuple"
                    )));
                }
                (0..n)
                    .map(|i| Term::app(symbol, (0..k).map(|j| v(j * n + i)).collect()))
                    .collect()
            }
        };
        let k = match symbol {
            SHIFT | BOX => 1,
            SPLICE | ARROW | BACKARROW => 2,
            _ => self.base.signature().arity(self.base.op_index(symbol)?),
        };
        TermTuple::new(terms, k * n)
    }

    /// True iff some term over the finite signature of depth at most `depth`
    /// induces `op`. Running out of budget is an error, not `false`.
    pub fn is_generated_operation(&self, op: &OperationTable, depth: usize, bounds: &Bounds) -> Result<bool> {
        let want = checked_pow(self.result.size(), op.arity);
        if op.table.len() as u128 != want {
            return Err(Error::InvalidAlgebra(format!(
                "table of length {} for an operation of arity {}",
                op.table.len(),
                op.arity
            )));
        }
        if op.arity == 0 {
            let ground = distinct_term_functions(&self.result, 1, depth, bounds)?;
            return Ok(ground.iter().any(|f| f.table.iter().all(|&v| v == op.table[0])));
        }
        let fs = distinct_term_functions(&self.result, op.arity, depth, bounds)?;
        Ok(fs.iter().any(|f| f.table == op.table))
    }

    /// For `n = 2`: `arrow(u,v) = splice(shift v, u)` and
    /// `backarrow(u,v) = arrow(box u, box v)`, checked by table equality.
    pub fn verify_named_derivations(&self, bounds: &Bounds) -> Result<bool> {
        if self.exponent != 2 {
            return Ok(true);
        }
        let sig = self.result.signature();
        let arrow = Term::parse("(splice (shift x1) x0)", sig)?;
        let backarrow = Term::parse("(arrow (box x0) (box x1))", sig)?;
        let table_of = |name: &str| -> Result<Vec<usize>> {
            Ok(self.result.table(self.result.op_index(name)?).to_vec())
        };
        Ok(self.result.term_table(&arrow, 2, bounds)? == table_of(ARROW)?
            && self.result.term_table(&backarrow, 2, bounds)? == table_of(BACKARROW)?)
    }

    /// Checks `(x→y ≈ □(x→y) & x←y ≈ □(x←y)) ⇔ x ≈ y` on the matrix square.
    pub fn verify_formula_two(&self) -> Result<TransformerVerdict> {
        if self.exponent != 2 {
            return Err(Error::InvalidAlgebra("box/arrow transformers need exponent 2".into()));
        }
        let (tau, rho) = algebraize::box_transformers();
        algebraize::check_transformers(&self.result, &tau, &rho)
    }
}

/// A term over the finite signature of `A^[n]`, in variables `x0..x{k-1}`,
/// inducing `m_t`.
///
/// Each coordinate `c` of input `j` is copied to all positions (rotate it to
/// the front with `shift`, then spread it with `splice`); the lifted `t_i`
/// applied to these diagonals gives a constant tuple carrying the value of
/// `t_i`; the `n` results are then assembled one coordinate at a time.
pub fn express_m_t(n: usize, t: &TermTuple) -> Result<Term> {
    if t.n() != n {
        return Err(Error::InvalidTerm(format!(
            "term tuple has {} components, matrix power exponent is {n}",
            t.n()
        )));
    }
    let shift = |x: Term| Term::app(SHIFT, vec![x]);
    let splice = |x: Term, y: Term| Term::app(SPLICE, vec![x, y]);
    let shift_times = |mut x: Term, times: usize| {
        for _ in 0..times {
            x = shift(x);
        }
        x
    };
    let diagonal = |v: Term| {
        let mut w = v.clone();
        for _ in 1..n {
            w = splice(shift(w), v.clone());
        }
        w
    };
    let mut spread = Vec::with_capacity(t.k * n);
    for j in 0..t.k {
        for c in 0..n {
            spread.push(diagonal(shift_times(Term::Var(j), c)));
        }
    }
    let components: Vec<Term> = t.terms.iter().map(|term| term.substitute(&spread)).collect();
    let mut acc = components[n - 1].clone();
    for i in (0..n - 1).rev() {
        acc = splice(shift_times(acc, n - 1), components[i].clone());
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaCheck {
    Congruence,
    Injective,
    Meet,
    Compose,
    Join,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LambdaViolation {
    pub check: LambdaCheck,
    pub alpha: usize,
    pub beta: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LambdaReport {
    pub congruences: usize,
    pub pairs_checked: usize,
    pub violations: Vec<LambdaViolation>,
}

impl LambdaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For all congruences `α, β` of `a`: `λ(α) = α ⊗ α` is a congruence of
/// `A^[2]`, `λ` is injective, and it preserves `∩`, `∘` and `∨` (the right
/// side of `∨` computed in `A^[2]`).
pub fn verify_lambda_embedding(a: &FiniteAlgebra, bounds: &Bounds) -> Result<LambdaReport> {
    let lattice = con(a, bounds)?;
    let square = matrix_power(a, 2, bounds)?;
    let sq = &square.result;
    let rels: Vec<BinRel> = lattice.congruences.iter().map(|p| p.to_relation()).collect();
    let lifted: Vec<BinRel> = rels.iter().map(lambda).collect();
    let mut violations = Vec::new();
    let mut pairs_checked = 0;
    for (i, l) in lifted.iter().enumerate() {
        let ok = l.to_partition().is_some_and(|p| is_congruence(sq, &p));
        if !ok {
            violations.push(LambdaViolation {
                check: LambdaCheck::Congruence,
                alpha: i,
                beta: i,
            });
        }
    }
    for i in 0..rels.len() {
        for j in 0..rels.len() {
            pairs_checked += 1;
            let mut fail = |check| violations.push(LambdaViolation { check, alpha: i, beta: j });
            if i != j && lifted[i] == lifted[j] {
                fail(LambdaCheck::Injective);
            }
            let meet = rels[i].intersection(&rels[j])?;
            if lambda(&meet) != lifted[i].intersection(&lifted[j])? {
                fail(LambdaCheck::Meet);
            }
            let comp = rels[i].compose(&rels[j])?;
            if lambda(&comp) != lifted[i].compose(&lifted[j])? {
                fail(LambdaCheck::Compose);
            }
            let joined = rel_combine(RelOp::Join, a, &rels[i], &rels[j])?;
            if lambda(&joined) != rel_combine(RelOp::Join, sq, &lifted[i], &lifted[j])? {
                fail(LambdaCheck::Join);
            }
        }
    }
    Ok(LambdaReport {
        congruences: rels.len(),
        pairs_checked,
        violations,
    })
}

/// `λ` applied to every congruence of `a`; each result should be a congruence of `A^[2]`.
pub fn lifted_congruences(a: &FiniteAlgebra, bounds: &Bounds) -> Result<Vec<crate::relation::Partition>> {
    Ok(con(a, bounds)?
        .congruences
        .iter()
        .map(congruence::lambda_partition)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn b() -> Bounds {
        Bounds::default()
    }

    #[test]
    fn signature_of_square_of_a_set() {
        let m = matrix_power(&catalog::set(3), 2, &b()).unwrap();
        assert_eq!(m.result.size(), 9);
        let names: Vec<&str> = m.result.signature().symbols().iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, vec![SPLICE, SHIFT, ARROW, BACKARROW, BOX]);
    }

    #[test]
    fn first_power_is_the_algebra() {
        let b2 = catalog::boolean();
        let m = matrix_power(&b2, 1, &b()).unwrap();
        for (op, _) in b2.signature().symbols().iter().enumerate() {
            assert_eq!(m.result.table(op), b2.table(op));
        }
        let splice = m.result.op_index(SPLICE).unwrap();
        let shift = m.result.op_index(SHIFT).unwrap();
        for x in 0..2 {
            assert_eq!(m.result.apply(shift, &[x]), x);
            for y in 0..2 {
                assert_eq!(m.result.apply(splice, &[x, y]), y);
            }
        }
    }

    #[test]
    fn box_swaps_coordinates() {
        let m = matrix_power(&catalog::boolean(), 2, &b()).unwrap();
        let bx = m.result.op_index(BOX).unwrap();
        assert_eq!(m.codec.encode(&[1, 0]), 2);
        assert_eq!(m.result.apply(bx, &[2]), 1);
        assert_eq!(m.codec.format(2), "<1,0>");
    }

    #[test]
    fn reserved_names_clash() {
        let a = FiniteAlgebra::from_ops(2, vec![("box", 1, vec![0, 1])]).unwrap();
        assert!(matches!(matrix_power(&a, 2, &b()), Err(Error::SignatureMismatch(_))));
    }

    #[test]
    fn m_t_examples() {
        let a = catalog::set(3);
        let m = matrix_power(&a, 2, &b()).unwrap();
        let v = Term::Var;
        let bx = m_t_table(&a, 2, &TermTuple::new(vec![v(1), v(0)], 2).unwrap(), &b()).unwrap();
        assert_eq!(bx.table, m.result.table(m.result.op_index(BOX).unwrap()));
        let arrow = m_t_table(&a, 2, &TermTuple::new(vec![v(0), v(2)], 4).unwrap(), &b()).unwrap();
        assert_eq!(arrow.arity, 2);
        assert_eq!(arrow.table, m.result.table(m.result.op_index(ARROW).unwrap()));
        let id = m_t_table(&a, 2, &TermTuple::new(vec![v(0), v(1)], 2).unwrap(), &b()).unwrap();
        assert_eq!(id.table, (0..9).collect::<Vec<_>>());
        assert!(TermTuple::new(vec![v(0), v(1)], 3).is_err());
        assert!(TermTuple::new(vec![v(0), v(4)], 4).is_err());
    }

    #[test]
    fn basic_operations_equal_their_defining_m_t() {
        for a in [catalog::boolean(), catalog::cycle3(), catalog::set(2)] {
            for n in 1..=3 {
                let m = matrix_power(&a, n, &b()).unwrap();
                for sym in m.result.signature().symbols() {
                    if sym.arity == 0 {
                        continue;
                    }
                    let t = m.defining_tuple(&sym.name).unwrap();
                    let table = m_t_table(&a, n, &t, &b()).unwrap();
                    assert_eq!(table.arity, sym.arity);
                    assert_eq!(
                        table.table,
                        m.result.table(m.result.op_index(&sym.name).unwrap()),
                        "{} n={n}",
                        sym.name
                    );
                }
            }
        }
    }

    #[test]
    fn named_operations_derive_from_splice_and_shift() {
        for a in catalog::default_catalog() {
            let m = matrix_power(&a.algebra, 2, &b()).unwrap();
            assert!(m.verify_named_derivations(&b()).unwrap(), "{}", a.name);
        }
    }

    #[test]
    fn generation_by_search() {
        let a = catalog::set(3);
        let m = matrix_power(&a, 2, &b()).unwrap();
        let bx = OperationTable {
            arity: 1,
            table: m.result.table(m.result.op_index(BOX).unwrap()).to_vec(),
        };
        assert!(m.is_generated_operation(&bx, 1, &b()).unwrap());

        // backarrow from arrow and box alone
        let sig = crate::algebra::Signature::new(vec![(ARROW, 2), (BOX, 1)]).unwrap();
        let restricted = FiniteAlgebra::new(
            9,
            sig,
            vec![
                m.result.table(m.result.op_index(ARROW).unwrap()).to_vec(),
                bx.table.clone(),
            ],
        )
        .unwrap();
        let r = MatrixPowerAlgebra {
            result: restricted,
            ..m.clone()
        };
        let back = OperationTable {
            arity: 2,
            table: m.result.table(m.result.op_index(BACKARROW).unwrap()).to_vec(),
        };
        assert!(r.is_generated_operation(&back, 2, &b()).unwrap());

        // a table outside the clone: constant-free, non-projective
        let odd = OperationTable {
            arity: 2,
            table: (0..81).map(|ix| (ix * 7 + ix / 9) % 9).collect(),
        };
        assert!(!m.is_generated_operation(&odd, 2, &b()).unwrap());
    }

    #[test]
    fn express_m_t_reproduces_tables() {
        let bb = b();
        let v = Term::Var;
        for a in [catalog::boolean(), catalog::cycle3(), catalog::set(3)] {
            let sig = a.signature().clone();
            for n in 1..=3 {
                let m = matrix_power(&a, n, &bb).unwrap();
                let mut cases: Vec<TermTuple> = vec![TermTuple::new((0..n).map(|i| v((i + 1) % n)).collect(), n).unwrap()];
                if sig.index_of("succ").is_some() {
                    cases.push(
                        TermTuple::new(
                            (0..n).map(|i| Term::app("succ", vec![v((2 * n - 1 - i) % (2 * n))])).collect(),
                            2 * n,
                        )
                        .unwrap(),
                    );
                }
                if sig.index_of("imp").is_some() {
                    cases.push(
                        TermTuple::new(
                            (0..n)
                                .map(|i| {
                                    if i == 0 {
                                        Term::constant("one")
                                    } else {
                                        Term::app("imp", vec![v(i), v(n)])
                                    }
                                })
                                .collect(),
                            2 * n,
                        )
                        .unwrap(),
                    );
                }
                for t in cases {
                    let want = m_t_table(&a, n, &t, &bb).unwrap();
                    let term = express_m_t(n, &t).unwrap();
                    assert_eq!(m.result.term_table(&term, t.k(), &bb).unwrap(), want.table);
                }
            }
        }
    }

    #[test]
    fn lambda_examples() {
        let r = verify_lambda_embedding(&catalog::set(3), &b()).unwrap();
        assert!(r.passed());
        assert_eq!(r.congruences, 5);
        let r = verify_lambda_embedding(&catalog::set(1), &b()).unwrap();
        assert!(r.passed());
        let r = verify_lambda_embedding(&catalog::lattice2(), &b()).unwrap();
        assert!(r.passed());
        let lifted = lifted_congruences(&catalog::lattice2(), &b()).unwrap();
        assert_eq!(lifted.last().unwrap(), &crate::relation::Partition::full(4));
    }

    #[test]
    fn formula_two_holds_on_squares() {
        for a in catalog::default_catalog() {
            let m = matrix_power(&a.algebra, 2, &b()).unwrap();
            assert_eq!(m.verify_formula_two().unwrap(), TransformerVerdict::Valid, "{}", a.name);
        }
    }
}
