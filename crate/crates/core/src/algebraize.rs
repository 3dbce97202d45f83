//! Transformers `τ = {(δ_i, ε_i)}`, `ρ = {ρ_j}` and what they give:
//!
//! * the validity check of `[∀i,j δ_i(ρ_j(x,y)) ≈ ε_i(ρ_j(x,y))] ⇔ x ≈ y`,
//! * a bounded search for such transformers,
//! * the consequence relation `Γ ⊢_{K,τ} φ` and its structural laws,
//! * Maltsev-style identity schemes, checked and derived from a
//!   congruence-generation chain in the free 2-generated algebra.
//!
//! Scheme terms have arity `2 + 2nm` for `n = |τ|`, `m = |ρ|`: `x0 = x`,
//! `x1 = y`, then the `nm` slots `u_s`, then the `nm` slots `v_s`, where slot
//! `s = j·n + i` holds `δ_i(ρ_j(x,y))` (for `u`) or `ε_i(ρ_j(x,y))` (for `v`).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{advance, FiniteAlgebra, Signature};
use crate::bounds::{checked_pow, Bounds};
use crate::clone::distinct_term_functions;
use crate::congruence::{generate, Direction};
use crate::error::{Error, Result};
use crate::term::{Assignment, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransformerTau {
    pairs: Vec<(Term, Term)>,
}

impl TransformerTau {
    /// Each term may use only `x0`; constant terms are allowed.
    pub fn new(pairs: Vec<(Term, Term)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidTerm("τ must have at least one pair".into()));
        }
        for (d, e) in &pairs {
            for t in [d, e] {
                if t.var_bound() > 1 {
                    return Err(Error::InvalidTerm(format!("transformer term {t} is not unary")));
                }
            }
        }
        Ok(TransformerTau { pairs })
    }

    pub fn pairs(&self) -> &[(Term, Term)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn check(&self, sig: &Signature) -> Result<()> {
        self.pairs.iter().try_for_each(|(d, e)| {
            d.check(sig)?;
            e.check(sig)
        })
    }

    /// Whether `δ_i(v) = ε_i(v)` for every `i`.
    pub fn holds_at(&self, a: &FiniteAlgebra, v: usize) -> Result<bool> {
        let env = Assignment(vec![v]);
        for (d, e) in &self.pairs {
            if a.eval_term(d, &env)? != a.eval_term(e, &env)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransformerRho {
    terms: Vec<Term>,
}

impl TransformerRho {
    /// Each term may use only `x0` and `x1`.
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidTerm("ρ must have at least one term".into()));
        }
        if let Some(t) = terms.iter().find(|t| t.var_bound() > 2) {
            return Err(Error::InvalidTerm(format!("transformer term {t} is not binary")));
        }
        Ok(TransformerRho { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn check(&self, sig: &Signature) -> Result<()> {
        self.terms.iter().try_for_each(|t| t.check(sig))
    }
}

/// `τ = {(x, one)}`, `ρ = {x → y, y → x}` over the Boolean signature.
pub fn boolean_transformers() -> (TransformerTau, TransformerRho) {
    let (x, y) = (Term::Var(0), Term::Var(1));
    (
        TransformerTau {
            pairs: vec![(x.clone(), Term::constant("one"))],
        },
        TransformerRho {
            terms: vec![
                Term::app("imp", vec![x.clone(), y.clone()]),
                Term::app("imp", vec![y, x]),
            ],
        },
    )
}

/// `τ = {(x, box x)}`, `ρ = {arrow(x,y), backarrow(x,y)}` over a matrix square.
pub fn box_transformers() -> (TransformerTau, TransformerRho) {
    let (x, y) = (Term::Var(0), Term::Var(1));
    (
        TransformerTau {
            pairs: vec![(x.clone(), Term::app("box", vec![x.clone()]))],
        },
        TransformerRho {
            terms: vec![
                Term::app("arrow", vec![x.clone(), y.clone()]),
                Term::app("backarrow", vec![x, y]),
            ],
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum TransformerVerdict {
    Valid,
    /// `a ≠ b` satisfying the left side, or `a = b` failing it.
    Counterexample { a: usize, b: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ClassVerdict {
    Valid,
    Counterexample { algebra: usize, a: usize, b: usize },
}

/// Tables `slot s = j·n + i ↦ (δ_i(ρ_j(a,b)), ε_i(ρ_j(a,b)))` indexed by `a·|A| + b`.
struct SlotTables {
    delta: Vec<Vec<usize>>,
    epsilon: Vec<Vec<usize>>,
}

fn slot_tables(a: &FiniteAlgebra, tau: &TransformerTau, rho: &TransformerRho) -> Result<SlotTables> {
    tau.check(a.signature())?;
    rho.check(a.signature())?;
    let bounds = Bounds::default();
    let unary = |t: &Term| a.term_table(t, 1, &bounds);
    let ds = tau.pairs.iter().map(|(d, _)| unary(d)).collect::<Result<Vec<_>>>()?;
    let es = tau.pairs.iter().map(|(_, e)| unary(e)).collect::<Result<Vec<_>>>()?;
    let mut delta = Vec::new();
    let mut epsilon = Vec::new();
    for r in &rho.terms {
        let rt = a.term_table(r, 2, &bounds)?;
        for i in 0..tau.len() {
            delta.push(rt.iter().map(|&v| ds[i][v]).collect());
            epsilon.push(rt.iter().map(|&v| es[i][v]).collect());
        }
    }
    Ok(SlotTables { delta, epsilon })
}

/// Checks the transformer formula on every pair of `a`, in lexicographic order.
pub fn check_transformers(a: &FiniteAlgebra, tau: &TransformerTau, rho: &TransformerRho) -> Result<TransformerVerdict> {
    let slots = slot_tables(a, tau, rho)?;
    let n = a.size();
    for x in 0..n {
        for y in 0..n {
            let ix = x * n + y;
            let left = slots.delta.iter().zip(&slots.epsilon).all(|(d, e)| d[ix] == e[ix]);
            if left != (x == y) {
                return Ok(TransformerVerdict::Counterexample { a: x, b: y });
            }
        }
    }
    Ok(TransformerVerdict::Valid)
}

/// [`check_transformers`] on each member of `k`; members must share a signature.
pub fn check_transformers_class(
    k: &[FiniteAlgebra],
    tau: &TransformerTau,
    rho: &TransformerRho,
) -> Result<ClassVerdict> {
    shared_signature(k)?;
    for (i, a) in k.iter().enumerate() {
        if let TransformerVerdict::Counterexample { a: x, b: y } = check_transformers(a, tau, rho)? {
            return Ok(ClassVerdict::Counterexample { algebra: i, a: x, b: y });
        }
    }
    Ok(ClassVerdict::Valid)
}

fn shared_signature(k: &[FiniteAlgebra]) -> Result<&Signature> {
    let first = k
        .first()
        .ok_or_else(|| Error::InvalidAlgebra("the class K is empty".into()))?;
    if let Some((i, _)) = k.iter().enumerate().find(|(_, a)| a.signature() != first.signature()) {
        return Err(Error::SignatureMismatch(format!(
            "member {i} of K has a different signature than member 0"
        )));
    }
    Ok(first.signature())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformerWitness {
    pub tau: TransformerTau,
    pub rho: TransformerRho,
}

/// Bounded search for transformers valid in `a`.
///
/// Candidates are built from the distinct unary and binary term functions of
/// depth at most `depth`: `τ` is a set of pairs `(δ, ε)` with `δ` not after
/// `ε`, `ρ` a set of binary functions. The order is by maximal depth, then
/// `|τ|`, then `|ρ|`, then lexicographically on indices. `Ok(None)` means no
/// witness exists within these bounds; running out of budget is an error.
pub fn search_transformers(
    a: &FiniteAlgebra,
    depth: usize,
    max_i: usize,
    max_j: usize,
    bounds: &Bounds,
) -> Result<Option<TransformerWitness>> {
    if max_i == 0 || max_j == 0 {
        return Err(Error::InvalidTerm("search bounds |τ| and |ρ| must be positive".into()));
    }
    let n = a.size();
    let unary = distinct_term_functions(a, 1, depth, bounds)?;
    let binary = distinct_term_functions(a, 2, depth, bounds)?;
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for d in 0..unary.len() {
        for e in d..unary.len() {
            pairs.push((d, e, unary[d].depth.max(unary[e].depth)));
        }
    }
    // agree[p][r]: bitset over A² of (a,b) with δ_p(ρ_r(a,b)) = ε_p(ρ_r(a,b))
    let cells = n * n;
    let words = cells.div_ceil(64);
    let mut diagonal = vec![0u64; words];
    for x in 0..n {
        let ix = x * n + x;
        diagonal[ix / 64] |= 1 << (ix % 64);
    }
    let agree: Vec<Vec<Vec<u64>>> = pairs
        .iter()
        .map(|&(d, e, _)| {
            binary
                .iter()
                .map(|r| {
                    let mut bits = vec![0u64; words];
                    for (ix, &v) in r.table.iter().enumerate() {
                        if unary[d].table[v] == unary[e].table[v] {
                            bits[ix / 64] |= 1 << (ix % 64);
                        }
                    }
                    bits
                })
                .collect()
        })
        .collect();
    let covers_diagonal = |bits: &[u64]| bits.iter().zip(&diagonal).all(|(b, d)| b & d == *d);

    let mut work: u64 = 0;
    for level in 0..=depth {
        let pair_count = pairs.iter().take_while(|p| p.2 <= level).count();
        let rho_count = binary.iter().take_while(|f| f.depth <= level).count();
        for ti in 1..=max_i.min(pair_count) {
            for rj in 1..=max_j.min(rho_count) {
                let mut tau_idx: Vec<usize> = (0..ti).collect();
                loop {
                    let usable: Vec<usize> = (0..rho_count)
                        .filter(|&r| tau_idx.iter().all(|&p| covers_diagonal(&agree[p][r])))
                        .collect();
                    if usable.len() >= rj {
                        let mut pick: Vec<usize> = (0..rj).collect();
                        loop {
                            work += 1;
                            if work > bounds.enumeration {
                                return Err(Error::BudgetExceeded {
                                    what: "transformer search",
                                    budget: bounds.enumeration,
                                });
                            }
                            let rho_idx: Vec<usize> = pick.iter().map(|&k| usable[k]).collect();
                            let max_depth = tau_idx
                                .iter()
                                .map(|&p| pairs[p].2)
                                .chain(rho_idx.iter().map(|&r| binary[r].depth))
                                .max()
                                .unwrap_or(0);
                            if max_depth == level {
                                let mut acc = vec![!0u64; words];
                                for &p in &tau_idx {
                                    for &r in &rho_idx {
                                        for (w, b) in acc.iter_mut().zip(&agree[p][r]) {
                                            *w &= b;
                                        }
                                    }
                                }
                                if words > 0 {
                                    let spare = words * 64 - cells;
                                    if spare > 0 {
                                        acc[words - 1] &= !0u64 >> spare;
                                    }
                                }
                                if acc == diagonal {
                                    let tau = TransformerTau::new(
                                        tau_idx
                                            .iter()
                                            .map(|&p| (unary[pairs[p].0].term.clone(), unary[pairs[p].1].term.clone()))
                                            .collect(),
                                    )?;
                                    let rho = TransformerRho::new(rho_idx.iter().map(|&r| binary[r].term.clone()).collect())?;
                                    return Ok(Some(TransformerWitness { tau, rho }));
                                }
                            }
                            if !next_combination(&mut pick, usable.len()) {
                                break;
                            }
                        }
                    }
                    if !next_combination(&mut tau_idx, pair_count) {
                        break;
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Advances a strictly increasing index vector over `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone)]
pub struct ConsequenceQuery {
    pub algebras: Vec<FiniteAlgebra>,
    pub tau: TransformerTau,
    pub gamma: Vec<Term>,
    pub phi: Term,
    pub var_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Entailment {
    Holds,
    Countermodel { algebra: usize, assignment: Vec<usize> },
}

impl Entailment {
    pub fn holds(&self) -> bool {
        matches!(self, Entailment::Holds)
    }
}

/// Decides `Γ ⊢_{K,τ} φ` by running through every assignment of
/// `x0..x{var_count-1}` into every member of `K`.
pub fn entails(q: &ConsequenceQuery, bounds: &Bounds) -> Result<Entailment> {
    let sig = shared_signature(&q.algebras)?;
    q.tau.check(sig)?;
    for t in q.gamma.iter().chain(std::iter::once(&q.phi)) {
        t.check(sig)?;
        if t.var_bound() > q.var_count {
            return Err(Error::UnboundVariable(t.var_bound() - 1));
        }
    }
    let mut work: u64 = 0;
    for (ai, a) in q.algebras.iter().enumerate() {
        let total = checked_pow(a.size(), q.var_count);
        work = work.saturating_add(total.min(u64::MAX as u128) as u64);
        if work > bounds.assignments {
            return Err(Error::BudgetExceeded {
                what: "entailment assignments",
                budget: bounds.assignments,
            });
        }
        let mut h = vec![0; q.var_count];
        loop {
            let env = Assignment(h.clone());
            let mut premises = true;
            for g in &q.gamma {
                if !q.tau.holds_at(a, a.eval_term(g, &env)?)? {
                    premises = false;
                    break;
                }
            }
            if premises && !q.tau.holds_at(a, a.eval_term(&q.phi, &env)?)? {
                return Ok(Entailment::Countermodel {
                    algebra: ai,
                    assignment: h,
                });
            }
            if !advance(&mut h, a.size()) {
                break;
            }
        }
    }
    Ok(Entailment::Holds)
}

/// A subset of `Γ` that still entails `φ`, none of whose elements can be
/// dropped; `None` if `Γ` itself does not entail `φ`.
pub fn minimize_premises(q: &ConsequenceQuery, bounds: &Bounds) -> Result<Option<Vec<Term>>> {
    if !entails(q, bounds)?.holds() {
        return Ok(None);
    }
    let mut current = q.clone();
    let mut i = 0;
    while i < current.gamma.len() {
        let mut trial = current.clone();
        trial.gamma.remove(i);
        if entails(&trial, bounds)?.holds() {
            current = trial;
        } else {
            i += 1;
        }
    }
    Ok(Some(current.gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructuralLaw {
    Reflexivity,
    Cut,
    Substitution,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawTally {
    pub sampled: usize,
    /// Instances whose hypotheses held, so the conclusion was actually tested.
    pub non_vacuous: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawViolation {
    pub law: StructuralLaw,
    pub trial: usize,
    pub gamma: Vec<String>,
    pub psi: Vec<String>,
    pub phi: String,
    pub substitution: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsequenceReport {
    pub seed: u64,
    pub trials: usize,
    pub var_pool: usize,
    pub reflexivity: LawTally,
    pub cut: LawTally,
    pub substitution: LawTally,
    pub violations: Vec<LawViolation>,
}

impl ConsequenceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const VAR_POOL: usize = 3;
const TERM_DEPTH: usize = 2;

/// A random term of depth at most `depth` in variables `0..vars`.
pub fn random_term<R: Rng + ?Sized>(rng: &mut R, sig: &Signature, vars: usize, depth: usize) -> Term {
    let ops: Vec<_> = sig.symbols().iter().collect();
    if depth == 0 || ops.is_empty() || rng.gen_bool(0.3) {
        return Term::Var(rng.gen_range(0..vars));
    }
    let sym = ops.choose(rng).expect("non-empty");
    let args = (0..sym.arity).map(|_| random_term(rng, sig, vars, depth - 1)).collect();
    Term::App(sym.name.clone(), args)
}

fn random_terms<R: Rng + ?Sized>(rng: &mut R, sig: &Signature, max: usize) -> Vec<Term> {
    let len = rng.gen_range(0..=max);
    (0..len).map(|_| random_term(rng, sig, VAR_POOL, TERM_DEPTH)).collect()
}

/// Samples instances of reflexivity, cut and substitution-invariance of
/// `⊢_{K,τ}` with a seeded generator; every violation is recorded in full.
pub fn consequence_properties_check(
    k: &[FiniteAlgebra],
    tau: &TransformerTau,
    trials: usize,
    seed: u64,
    bounds: &Bounds,
) -> Result<ConsequenceReport> {
    let sig = shared_signature(k)?.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let show = |ts: &[Term]| ts.iter().map(|t| t.to_string()).collect::<Vec<_>>();
    let query = |gamma: &[Term], phi: &Term| ConsequenceQuery {
        algebras: k.to_vec(),
        tau: tau.clone(),
        gamma: gamma.to_vec(),
        phi: phi.clone(),
        var_count: VAR_POOL,
    };
    let mut report = ConsequenceReport {
        seed,
        trials,
        var_pool: VAR_POOL,
        reflexivity: LawTally::default(),
        cut: LawTally::default(),
        substitution: LawTally::default(),
        violations: Vec::new(),
    };
    for trial in 0..trials {
        // reflexivity: φ ∈ Γ ⟹ Γ ⊢ φ
        let mut gamma = random_terms(&mut rng, &sig, 3);
        gamma.push(random_term(&mut rng, &sig, VAR_POOL, TERM_DEPTH));
        let phi = gamma.choose(&mut rng).expect("non-empty").clone();
        report.reflexivity.sampled += 1;
        report.reflexivity.non_vacuous += 1;
        if !entails(&query(&gamma, &phi), bounds)?.holds() {
            report.reflexivity.violations += 1;
            report.violations.push(LawViolation {
                law: StructuralLaw::Reflexivity,
                trial,
                gamma: show(&gamma),
                psi: Vec::new(),
                phi: phi.to_string(),
                substitution: Vec::new(),
            });
        }

        // cut: Γ ⊢ ψ for all ψ ∈ Ψ and Ψ ⊢ φ ⟹ Γ ⊢ φ
        let gamma = random_terms(&mut rng, &sig, 3);
        let mut psi = Vec::new();
        for cand in random_terms(&mut rng, &sig, 4).into_iter().chain(gamma.iter().cloned()) {
            if entails(&query(&gamma, &cand), bounds)?.holds() {
                psi.push(cand);
            }
        }
        let phi = if !psi.is_empty() && rng.gen_bool(0.3) {
            psi.choose(&mut rng).expect("non-empty").clone()
        } else {
            random_term(&mut rng, &sig, VAR_POOL, TERM_DEPTH)
        };
        report.cut.sampled += 1;
        if entails(&query(&psi, &phi), bounds)?.holds() {
            report.cut.non_vacuous += 1;
            if !entails(&query(&gamma, &phi), bounds)?.holds() {
                report.cut.violations += 1;
                report.violations.push(LawViolation {
                    law: StructuralLaw::Cut,
                    trial,
                    gamma: show(&gamma),
                    psi: show(&psi),
                    phi: phi.to_string(),
                    substitution: Vec::new(),
                });
            }
        }

        // substitution: Γ ⊢ φ ⟹ σΓ ⊢ σφ
        let gamma = random_terms(&mut rng, &sig, 3);
        let phi = if !gamma.is_empty() && rng.gen_bool(0.3) {
            gamma.choose(&mut rng).expect("non-empty").clone()
        } else {
            random_term(&mut rng, &sig, VAR_POOL, TERM_DEPTH)
        };
        let sigma: Vec<Term> = (0..VAR_POOL)
            .map(|_| random_term(&mut rng, &sig, VAR_POOL, TERM_DEPTH))
            .collect();
        report.substitution.sampled += 1;
        if entails(&query(&gamma, &phi), bounds)?.holds() {
            report.substitution.non_vacuous += 1;
            let sg: Vec<Term> = gamma.iter().map(|g| g.substitute(&sigma)).collect();
            if !entails(&query(&sg, &phi.substitute(&sigma)), bounds)?.holds() {
                report.substitution.violations += 1;
                report.violations.push(LawViolation {
                    law: StructuralLaw::Substitution,
                    trial,
                    gamma: show(&gamma),
                    psi: Vec::new(),
                    phi: phi.to_string(),
                    substitution: show(&sigma),
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaltsevScheme {
    pub tau: TransformerTau,
    pub rho: TransformerRho,
    pub chain: Vec<Term>,
}

impl MaltsevScheme {
    pub fn slots(&self) -> usize {
        self.tau.len() * self.rho.len()
    }

    pub fn arity(&self) -> usize {
        2 + 2 * self.slots()
    }

    pub fn validate(&self) -> Result<()> {
        if self.chain.is_empty() {
            return Err(Error::InvalidTerm("a scheme needs at least one chain term".into()));
        }
        if let Some(t) = self.chain.iter().find(|t| t.var_bound() > self.arity()) {
            return Err(Error::InvalidTerm(format!(
                "chain term {t} exceeds the scheme arity {}",
                self.arity()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "identity", content = "index")]
pub enum SchemeIdentity {
    /// `δ_i(ρ_j(x,x)) ≈ ε_i(ρ_j(x,x))`
    Diagonal,
    /// `x ≈ t_1(x, y, δρ, ερ)`
    First,
    /// `t_r(x, y, ερ, δρ) ≈ t_{r+1}(x, y, δρ, ερ)`, with `r` counted from 1
    Link(usize),
    /// `t_k(x, y, ερ, δρ) ≈ y`
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum SchemeVerdict {
    Valid,
    Counterexample { identity: SchemeIdentity, a: usize, b: usize },
}

/// Checks every identity of the scheme on every pair of `a`, identity by identity.
pub fn maltsev_scheme_check(a: &FiniteAlgebra, scheme: &MaltsevScheme) -> Result<SchemeVerdict> {
    scheme.validate()?;
    for t in &scheme.chain {
        t.check(a.signature())?;
    }
    let slots = slot_tables(a, &scheme.tau, &scheme.rho)?;
    let n = a.size();
    let fail = |identity, x, y| Ok(SchemeVerdict::Counterexample { identity, a: x, b: y });
    for x in 0..n {
        let ix = x * n + x;
        if slots.delta.iter().zip(&slots.epsilon).any(|(d, e)| d[ix] != e[ix]) {
            return fail(SchemeIdentity::Diagonal, x, x);
        }
    }
    let envs = |x: usize, y: usize| {
        let ix = x * n + y;
        let mut fwd = vec![x, y];
        fwd.extend(slots.delta.iter().map(|d| d[ix]));
        fwd.extend(slots.epsilon.iter().map(|e| e[ix]));
        let mut bwd = vec![x, y];
        bwd.extend(slots.epsilon.iter().map(|e| e[ix]));
        bwd.extend(slots.delta.iter().map(|d| d[ix]));
        (Assignment(fwd), Assignment(bwd))
    };
    let k = scheme.chain.len();
    for x in 0..n {
        for y in 0..n {
            let (fwd, _) = envs(x, y);
            if a.eval_term(&scheme.chain[0], &fwd)? != x {
                return fail(SchemeIdentity::First, x, y);
            }
        }
    }
    for r in 0..k - 1 {
        for x in 0..n {
            for y in 0..n {
                let (fwd, bwd) = envs(x, y);
                if a.eval_term(&scheme.chain[r], &bwd)? != a.eval_term(&scheme.chain[r + 1], &fwd)? {
                    return fail(SchemeIdentity::Link(r + 1), x, y);
                }
            }
        }
    }
    for x in 0..n {
        for y in 0..n {
            let (_, bwd) = envs(x, y);
            if a.eval_term(&scheme.chain[k - 1], &bwd)? != y {
                return fail(SchemeIdentity::Last, x, y);
            }
        }
    }
    Ok(SchemeVerdict::Valid)
}

/// Reads a scheme off a congruence-generation chain from `x̄` to `ȳ` in the
/// free 2-generated algebra of the variety generated by `a`.
///
/// Step `r` of the chain is `p_r(e) → p_r(g)` for a unary polynomial `p_r`
/// and a generator pair `(e, g) = (δρ_s, ερ_s)`, possibly reversed. Its scheme
/// term puts slot variable `u_s` (or `v_s` when reversed) in the free position
/// and replaces every constant of `p_r` by a term in `x, y` representing it.
pub fn derive_maltsev_scheme(
    a: &FiniteAlgebra,
    tau: &TransformerTau,
    rho: &TransformerRho,
    bounds: &Bounds,
) -> Result<MaltsevScheme> {
    if let TransformerVerdict::Counterexample { a: x, b: y } = check_transformers(a, tau, rho)? {
        return Err(Error::TransformersInvalid(x, y));
    }
    let free = a.free_algebra_2gen(bounds)?;
    let f = &free.algebra;
    let (gx, gy) = (free.gen_x, free.gen_y);
    let mut seeds = Vec::with_capacity(tau.len() * rho.len());
    for r in &rho.terms {
        let rv = f.eval_term(r, &Assignment(vec![gx, gy]))?;
        for (d, e) in &tau.pairs {
            let env = Assignment(vec![rv]);
            seeds.push((f.eval_term(d, &env)?, f.eval_term(e, &env)?));
        }
    }
    let generation = generate(f, &seeds)?;
    if !generation.partition.related(gx, gy) {
        return Err(Error::NotInGeneratedVariety);
    }
    let chain = generation.chain(f, gx, gy)?;
    let nm = seeds.len();
    let terms: Vec<Term> = if chain.steps.is_empty() {
        vec![Term::Var(0)]
    } else {
        chain
            .steps
            .iter()
            .map(|step| {
                let slot = match step.direction {
                    Direction::Forward => 2 + step.seed_index,
                    Direction::Reverse => 2 + nm + step.seed_index,
                };
                let mut subst = vec![Term::Var(slot)];
                subst.extend(step.witness.constants.iter().map(|&c| free.terms[c].clone()));
                step.witness.term.substitute(&subst)
            })
            .collect()
    };
    let scheme = MaltsevScheme {
        tau: tau.clone(),
        rho: rho.clone(),
        chain: terms,
    };
    scheme.validate()?;
    Ok(scheme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::matrix_power::matrix_power;

    fn b() -> Bounds {
        Bounds::default()
    }

    fn parse(t: &str, a: &FiniteAlgebra) -> Term {
        Term::parse(t, a.signature()).unwrap()
    }

    #[test]
    fn boolean_witness_is_valid() {
        let (tau, rho) = boolean_transformers();
        assert_eq!(check_transformers(&catalog::boolean(), &tau, &rho).unwrap(), TransformerVerdict::Valid);
    }

    #[test]
    fn identity_transformers_collapse_on_lattice() {
        let l = catalog::lattice2();
        let tau = TransformerTau::new(vec![(Term::Var(0), Term::Var(0))]).unwrap();
        let rho = TransformerRho::new(vec![parse("(and x0 x1)", &l)]).unwrap();
        assert_eq!(
            check_transformers(&l, &tau, &rho).unwrap(),
            TransformerVerdict::Counterexample { a: 0, b: 1 }
        );
    }

    #[test]
    fn diagonal_failure_is_reported_as_equal_pair() {
        let b2 = catalog::boolean();
        let tau = TransformerTau::new(vec![(Term::Var(0), Term::constant("one"))]).unwrap();
        let rho = TransformerRho::new(vec![parse("(and x0 x1)", &b2)]).unwrap();
        assert_eq!(
            check_transformers(&b2, &tau, &rho).unwrap(),
            TransformerVerdict::Counterexample { a: 0, b: 0 }
        );
    }

    #[test]
    fn class_checks() {
        let (tau, rho) = boolean_transformers();
        assert_eq!(
            check_transformers_class(&[catalog::boolean()], &tau, &rho).unwrap(),
            ClassVerdict::Valid
        );
        assert!(matches!(
            check_transformers_class(&[catalog::boolean(), catalog::lattice2()], &tau, &rho),
            Err(Error::SignatureMismatch(_))
        ));
        let one = FiniteAlgebra::trivial(catalog::boolean().signature());
        assert_eq!(
            check_transformers_class(std::slice::from_ref(&one), &tau, &rho).unwrap(),
            ClassVerdict::Valid
        );
        let bad = TransformerTau::new(vec![(Term::Var(0), Term::Var(0))]).unwrap();
        assert_eq!(check_transformers_class(&[one], &bad, &rho).unwrap(), ClassVerdict::Valid);
    }

    #[test]
    fn appending_trivial_pair_keeps_verdict() {
        let b2 = catalog::boolean();
        let (tau, rho) = boolean_transformers();
        let mut pairs = tau.pairs().to_vec();
        pairs.push((Term::Var(0), Term::Var(0)));
        let more = TransformerTau::new(pairs).unwrap();
        assert_eq!(check_transformers(&b2, &more, &rho).unwrap(), TransformerVerdict::Valid);
    }

    #[test]
    fn terms_must_be_unary_and_binary() {
        assert!(TransformerTau::new(vec![(Term::Var(1), Term::Var(0))]).is_err());
        assert!(TransformerTau::new(vec![]).is_err());
        assert!(TransformerRho::new(vec![Term::Var(2)]).is_err());
        let (tau, rho) = boolean_transformers();
        assert!(check_transformers(&catalog::lattice2(), &tau, &rho).is_err());
    }

    #[test]
    fn search_finds_boolean_witness() {
        let b2 = catalog::boolean();
        let w = search_transformers(&b2, 2, 1, 2, &b()).unwrap().expect("witness");
        assert_eq!(check_transformers(&b2, &w.tau, &w.rho).unwrap(), TransformerVerdict::Valid);
        assert_eq!(w.tau.len(), 1);
    }

    #[test]
    fn search_on_idempotent_lattice_is_empty() {
        assert_eq!(search_transformers(&catalog::lattice2(), 4, 2, 3, &b()).unwrap(), None);
    }

    #[test]
    fn search_on_trivial_algebra() {
        let w = search_transformers(&catalog::set(1), 0, 1, 1, &b()).unwrap().unwrap();
        assert_eq!(w.tau.pairs(), &[(Term::Var(0), Term::Var(0))]);
        assert_eq!(w.rho.terms(), &[Term::Var(0)]);
    }

    #[test]
    fn search_budget_is_inconclusive() {
        let tight = Bounds {
            enumeration: 3,
            ..Bounds::default()
        };
        let err = search_transformers(&catalog::lattice2(), 3, 2, 2, &tight).unwrap_err();
        assert!(err.is_inconclusive());
    }

    #[test]
    fn combinations_in_order() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }

    fn boolean_query(gamma: &[&str], phi: &str) -> ConsequenceQuery {
        let b2 = catalog::boolean();
        let (tau, _) = boolean_transformers();
        ConsequenceQuery {
            gamma: gamma.iter().map(|g| parse(g, &b2)).collect(),
            phi: parse(phi, &b2),
            algebras: vec![b2],
            tau,
            var_count: 2,
        }
    }

    #[test]
    fn modus_ponens() {
        assert_eq!(
            entails(&boolean_query(&["x0", "(imp x0 x1)"], "x1"), &b()).unwrap(),
            Entailment::Holds
        );
    }

    #[test]
    fn countermodel_for_bare_variable() {
        let q = boolean_query(&[], "x0");
        assert_eq!(
            entails(&q, &b()).unwrap(),
            Entailment::Countermodel {
                algebra: 0,
                assignment: vec![0, 0]
            }
        );
        let q1 = ConsequenceQuery { var_count: 1, ..q };
        assert_eq!(
            entails(&q1, &b()).unwrap(),
            Entailment::Countermodel {
                algebra: 0,
                assignment: vec![0]
            }
        );
    }

    #[test]
    fn variables_out_of_range() {
        let q = ConsequenceQuery {
            var_count: 1,
            ..boolean_query(&[], "x1")
        };
        assert!(matches!(entails(&q, &b()), Err(Error::UnboundVariable(1))));
    }

    #[test]
    fn minimization_drops_irrelevant_premises() {
        let q = boolean_query(&["(or x1 x0)", "x0", "(not (not x0))", "(imp x0 x1)"], "x1");
        let min = minimize_premises(&q, &b()).unwrap().unwrap();
        let shown: Vec<String> = min.iter().map(|t| t.to_string()).collect();
        assert_eq!(shown, vec!["(not (not x0))", "(imp x0 x1)"]);
        assert_eq!(minimize_premises(&boolean_query(&[], "x0"), &b()).unwrap(), None);
    }

    #[test]
    fn structural_laws_hold_on_boolean() {
        let (tau, _) = boolean_transformers();
        let r = consequence_properties_check(&[catalog::boolean()], &tau, 100, 7, &b()).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.cut.non_vacuous > 0 && r.substitution.non_vacuous > 0);
    }

    fn boolean_scheme() -> MaltsevScheme {
        let b2 = catalog::boolean();
        let (tau, rho) = boolean_transformers();
        // iff(and(u1, u2), y) with iff(p, q) = and(imp(p, q), imp(q, p))
        let t = parse("(and (imp (and x2 x3) x1) (imp x1 (and x2 x3)))", &b2);
        MaltsevScheme { tau, rho, chain: vec![t] }
    }

    #[test]
    fn boolean_biconditional_scheme() {
        assert_eq!(maltsev_scheme_check(&catalog::boolean(), &boolean_scheme()).unwrap(), SchemeVerdict::Valid);
        let mut s = boolean_scheme();
        s.chain = vec![Term::Var(0)];
        assert_eq!(
            maltsev_scheme_check(&catalog::boolean(), &s).unwrap(),
            SchemeVerdict::Counterexample {
                identity: SchemeIdentity::Last,
                a: 0,
                b: 1
            }
        );
        s.chain = vec![Term::Var(9)];
        assert!(maltsev_scheme_check(&catalog::boolean(), &s).is_err());
    }

    #[test]
    fn derived_boolean_scheme_checks() {
        let b2 = catalog::boolean();
        let (tau, rho) = boolean_transformers();
        let s = derive_maltsev_scheme(&b2, &tau, &rho, &b()).unwrap();
        assert!(!s.chain.is_empty());
        assert_eq!(maltsev_scheme_check(&b2, &s).unwrap(), SchemeVerdict::Valid);
    }

    #[test]
    fn derived_scheme_on_trivial_algebra() {
        let one = FiniteAlgebra::trivial(catalog::boolean().signature());
        let (tau, rho) = boolean_transformers();
        let s = derive_maltsev_scheme(&one, &tau, &rho, &b()).unwrap();
        assert_eq!(s.chain, vec![Term::Var(0)]);
        assert_eq!(maltsev_scheme_check(&one, &s).unwrap(), SchemeVerdict::Valid);
    }

    #[test]
    fn derived_scheme_on_square_uses_box() {
        let m = matrix_power(&catalog::set(3), 2, &b()).unwrap();
        let (tau, rho) = box_transformers();
        let s = derive_maltsev_scheme(&m.result, &tau, &rho, &b()).unwrap();
        assert_eq!(maltsev_scheme_check(&m.result, &s).unwrap(), SchemeVerdict::Valid);
        let uses_box = |t: &Term| t.mentions("box");
        assert!(s.chain.iter().any(uses_box) || s.tau.pairs().iter().any(|(d, e)| uses_box(d) || uses_box(e)));
        // the same chain read with box as the identity is no scheme at all
        let idempotent = MaltsevScheme {
            tau: TransformerTau::new(vec![(Term::Var(0), Term::Var(0))]).unwrap(),
            ..s.clone()
        };
        assert_ne!(maltsev_scheme_check(&m.result, &idempotent).unwrap(), SchemeVerdict::Valid);
    }

    #[test]
    fn invalid_transformers_are_rejected_before_derivation() {
        let l = catalog::lattice2();
        let tau = TransformerTau::new(vec![(Term::Var(0), Term::Var(0))]).unwrap();
        let rho = TransformerRho::new(vec![parse("(and x0 x1)", &l)]).unwrap();
        assert!(matches!(
            derive_maltsev_scheme(&l, &tau, &rho, &b()),
            Err(Error::TransformersInvalid(0, 1))
        ));
    }
}
