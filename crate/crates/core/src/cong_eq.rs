//! Congruence equations: identities in `^` (intersection), `+` (join in the
//! congruence lattice, i.e. the congruence generated by the union) and `*`
//! (relational product), with variables ranging over congruences.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::FiniteAlgebra;
use crate::algebraize::{box_transformers, check_transformers, TransformerVerdict};
use crate::bounds::{checked_pow, Bounds};
use crate::catalog::NamedAlgebra;
use crate::congruence::{con, is_congruence, lambda, lambda_partition, rel_combine, RelOp};
use crate::error::{Error, Result};
use crate::format::AlgebraDocument;
use crate::matrix_power::matrix_power;
use crate::relation::{BinRel, Partition};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CongTerm {
    Var(String),
    Meet(Box<CongTerm>, Box<CongTerm>),
    Join(Box<CongTerm>, Box<CongTerm>),
    Compose(Box<CongTerm>, Box<CongTerm>),
}

impl CongTerm {
    pub fn variables(&self, out: &mut BTreeSet<String>) {
        match self {
            CongTerm::Var(v) => {
                out.insert(v.clone());
            }
            CongTerm::Meet(l, r) | CongTerm::Join(l, r) | CongTerm::Compose(l, r) => {
                l.variables(out);
                r.variables(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            CongTerm::Var(_) => 3,
            CongTerm::Meet(..) => 2,
            CongTerm::Compose(..) => 1,
            CongTerm::Join(..) => 0,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.precedence();
        let (l, r, op) = match self {
            CongTerm::Var(v) => return write!(f, "{v}"),
            CongTerm::Meet(l, r) => (l, r, "^"),
            CongTerm::Compose(l, r) => (l, r, "*"),
            CongTerm::Join(l, r) => (l, r, "+"),
        };
        if p < min {
            write!(f, "(")?;
        }
        l.write(f, p)?;
        write!(f, " {op} ")?;
        r.write(f, p + 1)?;
        if p < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for CongTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CongEquation {
    pub lhs: CongTerm,
    pub rhs: CongTerm,
    variables: Vec<String>,
}

impl CongEquation {
    pub fn new(lhs: CongTerm, rhs: CongTerm) -> Self {
        let mut vars = BTreeSet::new();
        lhs.variables(&mut vars);
        rhs.variables(&mut vars);
        CongEquation {
            lhs,
            rhs,
            variables: vars.into_iter().collect(),
        }
    }

    /// Variable names in sorted order; the first is the most significant in
    /// the assignment sweep.
    pub fn variables(&self) -> &[String] {
        &self.variables
    }
}

impl fmt::Display for CongEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

impl std::str::FromStr for CongEquation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_cong_equation(s)
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn binary(
        &mut self,
        op: char,
        build: fn(Box<CongTerm>, Box<CongTerm>) -> CongTerm,
        next: fn(&mut Self) -> Result<CongTerm>,
    ) -> Result<CongTerm> {
        let mut acc = next(self)?;
        while self.eat(op) {
            let rhs = next(self)?;
            acc = build(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn join(&mut self) -> Result<CongTerm> {
        self.binary('+', CongTerm::Join, Self::compose)
    }

    fn compose(&mut self) -> Result<CongTerm> {
        self.binary('*', CongTerm::Compose, Self::meet)
    }

    fn meet(&mut self) -> Result<CongTerm> {
        self.binary('^', CongTerm::Meet, Self::atom)
    }

    fn atom(&mut self) -> Result<CongTerm> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.join()?;
                if !self.eat(')') {
                    return self.error("expected `)`");
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_lowercase() => {
                let start = self.pos;
                while let Some(c) = self.text[self.pos..].chars().next() {
                    if c.is_ascii_lowercase() || c.is_ascii_digit() {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                Ok(CongTerm::Var(self.text[start..self.pos].to_string()))
            }
            Some(c) => self.error(format!("unexpected `{c}`")),
            None => self.error("unexpected end of input"),
        }
    }
}

/// Parses `lhs = rhs`. Precedence `^` over `*` over `+`, all left-associative.
pub fn parse_cong_equation(text: &str) -> Result<CongEquation> {
    let mut p = Parser { text, pos: 0 };
    if p.peek() == Some('=') {
        return p.error("empty left-hand side");
    }
    let lhs = p.join()?;
    if !p.eat('=') {
        return p.error("expected `=`");
    }
    if p.peek().is_none() {
        return p.error("empty right-hand side");
    }
    let rhs = p.join()?;
    if p.peek().is_some() {
        return p.error("unexpected trailing input");
    }
    Ok(CongEquation::new(lhs, rhs))
}

pub type CongEnv = BTreeMap<String, Partition>;

/// Evaluates `t` in `Rel(A)` with variables interpreted by `env`.
pub fn eval_cong_term(a: &FiniteAlgebra, t: &CongTerm, env: &CongEnv) -> Result<BinRel> {
    let (op, l, r) = match t {
        CongTerm::Var(v) => {
            let p = env
                .get(v)
                .ok_or_else(|| Error::InvalidTerm(format!("variable `{v}` is unassigned")))?;
            if p.size() != a.size() {
                return Err(Error::UniverseMismatch {
                    left: p.size(),
                    right: a.size(),
                });
            }
            return Ok(p.to_relation());
        }
        CongTerm::Meet(l, r) => (RelOp::Meet, l, r),
        CongTerm::Join(l, r) => (RelOp::Join, l, r),
        CongTerm::Compose(l, r) => (RelOp::Compose, l, r),
    };
    rel_combine(op, a, &eval_cong_term(a, l, env)?, &eval_cong_term(a, r, env)?)
}

/// An assignment of congruences under which the two sides differ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "CertificateDocument", try_from = "CertificateDocument")]
pub struct FailureCertificate {
    pub algebra_name: String,
    pub algebra: FiniteAlgebra,
    pub equation: CongEquation,
    pub assignment: CongEnv,
    pub lhs: BinRel,
    pub rhs: BinRel,
    /// The first pair, in row-major order, in exactly one of `lhs`, `rhs`.
    pub discrepancy: (usize, usize),
}

#[derive(Serialize, Deserialize)]
struct CertificateDocument {
    algebra: AlgebraDocument,
    equation: String,
    assignment: CongEnv,
    lhs: BinRel,
    rhs: BinRel,
    discrepancy: (usize, usize),
}

impl From<FailureCertificate> for CertificateDocument {
    fn from(c: FailureCertificate) -> Self {
        CertificateDocument {
            algebra: AlgebraDocument::new(c.algebra_name, &c.algebra),
            equation: c.equation.to_string(),
            assignment: c.assignment,
            lhs: c.lhs,
            rhs: c.rhs,
            discrepancy: c.discrepancy,
        }
    }
}

impl TryFrom<CertificateDocument> for FailureCertificate {
    type Error = Error;

    fn try_from(d: CertificateDocument) -> Result<Self> {
        let cert = FailureCertificate {
            algebra: d.algebra.to_algebra()?,
            algebra_name: d.algebra.name,
            equation: parse_cong_equation(&d.equation)?,
            assignment: d.assignment,
            lhs: d.lhs,
            rhs: d.rhs,
            discrepancy: d.discrepancy,
        };
        cert.validate()?;
        Ok(cert)
    }
}

impl FailureCertificate {
    /// Re-evaluates both sides and checks every stored claim.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCertificate(m));
        let vars = self.equation.variables();
        if self.assignment.keys().map(String::as_str).ne(vars.iter().map(String::as_str)) {
            return bad("assignment does not cover exactly the equation's variables".into());
        }
        for (v, p) in &self.assignment {
            if p.size() != self.algebra.size() || !is_congruence(&self.algebra, p) {
                return bad(format!("value of `{v}` is not a congruence of the algebra"));
            }
        }
        let lhs = eval_cong_term(&self.algebra, &self.equation.lhs, &self.assignment)?;
        let rhs = eval_cong_term(&self.algebra, &self.equation.rhs, &self.assignment)?;
        if lhs != self.lhs || rhs != self.rhs {
            return bad("stored side values do not match re-evaluation".into());
        }
        let (p, q) = self.discrepancy;
        if p >= self.algebra.size() || q >= self.algebra.size() || lhs.contains(p, q) == rhs.contains(p, q) {
            return bad(format!("({p}, {q}) does not separate the two sides"));
        }
        Ok(())
    }
}

fn certificate(
    name: &str,
    a: &FiniteAlgebra,
    eq: &CongEquation,
    assignment: CongEnv,
) -> Result<Option<FailureCertificate>> {
    let lhs = eval_cong_term(a, &eq.lhs, &assignment)?;
    let rhs = eval_cong_term(a, &eq.rhs, &assignment)?;
    Ok(lhs.first_difference(&rhs).map(|discrepancy| FailureCertificate {
        algebra_name: name.to_string(),
        algebra: a.clone(),
        equation: eq.clone(),
        assignment,
        lhs,
        rhs,
        discrepancy,
    }))
}

/// The first failing assignment in lexicographic order over the canonical
/// listing of `Con(a)`, or `None` if the equation holds in `a`.
pub fn check_equation(
    name: &str,
    a: &FiniteAlgebra,
    eq: &CongEquation,
    bounds: &Bounds,
) -> Result<Option<FailureCertificate>> {
    let lattice = con(a, bounds)?;
    let vars = eq.variables();
    let total = checked_pow(lattice.len(), vars.len());
    if total > bounds.assignments as u128 {
        return Err(Error::BudgetExceeded {
            what: "congruence assignments",
            budget: bounds.assignments,
        });
    }
    let mut idx = vec![0; vars.len()];
    loop {
        let env: CongEnv = vars
            .iter()
            .zip(&idx)
            .map(|(v, &i)| (v.clone(), lattice.congruences[i].clone()))
            .collect();
        if let Some(cert) = certificate(name, a, eq, env)? {
            return Ok(Some(cert));
        }
        if !crate::algebra::advance(&mut idx, lattice.len()) {
            return Ok(None);
        }
    }
}

/// Scans `catalog` in order; `None` means the equation held on every member.
pub fn find_failure(
    catalog: &[NamedAlgebra],
    eq: &CongEquation,
    bounds: &Bounds,
) -> Result<Option<FailureCertificate>> {
    for named in catalog {
        if let Some(cert) = check_equation(&named.name, &named.algebra, eq, bounds)? {
            return Ok(Some(cert));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftReport {
    /// The failure in the matrix square, under `v ↦ λ(assignment(v))`.
    pub lifted: FailureCertificate,
    /// Both sides in the square are the `λ`-images of the original sides.
    pub sides_commute_with_lambda: bool,
    /// `((p,p),(q,q))` for the original discrepancy `(p, q)`, as encoded elements.
    pub image_of_discrepancy: (usize, usize),
    pub image_separates: bool,
    /// Box/arrow transformers on the square.
    pub transformers: TransformerVerdict,
}

impl LiftReport {
    pub fn passed(&self) -> bool {
        self.sides_commute_with_lambda && self.image_separates && self.transformers == TransformerVerdict::Valid
    }
}

/// Transports a failure into `A^[2]` along `λ` and checks the box/arrow
/// transformers there.
pub fn lift_failure_check(cert: &FailureCertificate, bounds: &Bounds) -> Result<LiftReport> {
    cert.validate()?;
    let a = &cert.algebra;
    let square = matrix_power(a, 2, bounds)?;
    let m = &square.result;
    let mut lifted_env = CongEnv::new();
    for (v, p) in &cert.assignment {
        let q = lambda_partition(p);
        if !is_congruence(m, &q) {
            return Err(Error::LiftFailed(format!("λ of `{v}` is not a congruence of the square")));
        }
        lifted_env.insert(v.clone(), q);
    }
    let name = format!("{}^[2]", cert.algebra_name);
    let lifted = certificate(&name, m, &cert.equation, lifted_env)?
        .ok_or_else(|| Error::LiftFailed("the lifted assignment satisfies the equation".into()))?;
    lifted.validate()?;
    let sides_commute_with_lambda = lifted.lhs == lambda(&cert.lhs) && lifted.rhs == lambda(&cert.rhs);
    let n = a.size();
    let (p, q) = cert.discrepancy;
    let image = (p * n + p, q * n + q);
    let image_separates = lifted.lhs.contains(image.0, image.1) != lifted.rhs.contains(image.0, image.1);
    let (tau, rho) = box_transformers();
    let transformers = check_transformers(m, &tau, &rho)?;
    Ok(LiftReport {
        lifted,
        sides_commute_with_lambda,
        image_of_discrepancy: image,
        image_separates,
        transformers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    const DISTRIBUTIVE: &str = "a ^ (b + c) = (a ^ b) + (a ^ c)";
    const MODULAR: &str = "a ^ (b + (a ^ c)) = (a ^ b) + (a ^ c)";

    fn b() -> Bounds {
        Bounds::default()
    }

    fn eq(s: &str) -> CongEquation {
        parse_cong_equation(s).unwrap()
    }

    fn atom(n: usize, x: usize, y: usize) -> Partition {
        Partition::generated_by(n, [(x, y)])
    }

    fn var(s: &str) -> Box<CongTerm> {
        Box::new(CongTerm::Var(s.into()))
    }

    #[test]
    fn parsing_and_precedence() {
        let e = eq(DISTRIBUTIVE);
        assert_eq!(
            e.lhs,
            CongTerm::Meet(var("a"), Box::new(CongTerm::Join(var("b"), var("c"))))
        );
        assert_eq!(e.variables(), &["a", "b", "c"]);
        let e = eq("a ^ b + c = c");
        assert_eq!(e.lhs, CongTerm::Join(Box::new(CongTerm::Meet(var("a"), var("b"))), var("c")));
        let e = eq("a*b*c = a+b^c*d");
        assert_eq!(
            e.lhs,
            CongTerm::Compose(Box::new(CongTerm::Compose(var("a"), var("b"))), var("c"))
        );
        assert_eq!(e.to_string(), "a * b * c = a + b ^ c * d");
        assert_eq!(eq("a * (b * c) = x1").to_string(), "a * (b * c) = x1");
    }

    #[test]
    fn display_round_trips() {
        for s in [DISTRIBUTIVE, MODULAR, "a * b = b * a", "(a + b) ^ c = a ^ (b ^ c)", "a = a"] {
            let e = eq(s);
            assert_eq!(eq(&e.to_string()), e);
        }
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let pos = |s: &str| match parse_cong_equation(s) {
            Err(Error::Parse { pos, .. }) => pos,
            other => panic!("{other:?}"),
        };
        assert_eq!(pos("= a"), 0);
        assert_eq!(pos("a ="), 3);
        assert_eq!(pos("a + = b"), 4);
        assert_eq!(pos("a b = c"), 2);
        assert_eq!(pos("a = b = c"), 6);
        assert_eq!(pos("(a = b"), 3);
        assert_eq!(pos("A = b"), 0);
    }

    #[test]
    fn evaluation_on_three_set() {
        let a = catalog::set(3);
        let env: CongEnv = [("a".to_string(), atom(3, 0, 1)), ("b".to_string(), atom(3, 1, 2))].into();
        let comp = eval_cong_term(&a, &eq("a * b = a").lhs, &env).unwrap();
        assert!(comp.contains(0, 2) && !comp.contains(2, 0));
        let join = eval_cong_term(&a, &eq("a + b = a").lhs, &env).unwrap();
        assert_eq!(join, BinRel::full(3));
        let delta: CongEnv = [("a".to_string(), Partition::identity(3))].into();
        assert_eq!(eval_cong_term(&a, &CongTerm::Var("a".into()), &delta).unwrap(), BinRel::identity(3));
        assert!(eval_cong_term(&a, &CongTerm::Var("z".into()), &delta).is_err());
    }

    #[test]
    fn trivial_algebra_satisfies_everything() {
        for s in [DISTRIBUTIVE, MODULAR, "a * b = b * a", "a = b"] {
            assert_eq!(check_equation("set1", &catalog::set(1), &eq(s), &b()).unwrap(), None);
        }
    }

    #[test]
    fn distributivity_fails_on_three_set() {
        let cert = check_equation("set3", &catalog::set(3), &eq(DISTRIBUTIVE), &b()).unwrap().unwrap();
        assert_eq!(cert.assignment["a"], atom(3, 0, 1));
        assert_eq!(cert.assignment["b"], atom(3, 0, 2));
        assert_eq!(cert.assignment["c"], atom(3, 1, 2));
        assert_eq!(cert.lhs, atom(3, 0, 1).to_relation());
        assert_eq!(cert.rhs, BinRel::identity(3));
        assert_eq!(cert.discrepancy, (0, 1));
        cert.validate().unwrap();
    }

    #[test]
    fn commutativity_fails_on_three_set() {
        let a = catalog::set(3);
        let e = eq("a * b = b * a");
        let cert = check_equation("set3", &a, &e, &b()).unwrap().unwrap();
        assert_eq!(cert.assignment["a"], atom(3, 0, 1));
        assert_eq!(cert.assignment["b"], atom(3, 0, 2));
        assert_eq!(cert.discrepancy, (1, 2));
        // the assignment a = eq(0,1), b = eq(1,2) also fails, at (0, 2)
        let env: CongEnv = [("a".to_string(), atom(3, 0, 1)), ("b".to_string(), atom(3, 1, 2))].into();
        let other = certificate("set3", &a, &e, env).unwrap().unwrap();
        assert_eq!(other.discrepancy, (0, 2));
        let lift = lift_failure_check(&other, &b()).unwrap();
        assert!(lift.passed());
        assert_eq!(lift.image_of_discrepancy, (0, 8));
    }

    #[test]
    fn catalog_search() {
        let cat = catalog::default_catalog();
        let cert = find_failure(&cat, &eq(MODULAR), &b()).unwrap().unwrap();
        assert_eq!(cert.algebra_name, "set4");
        let cert = find_failure(&cat[..3], &eq(DISTRIBUTIVE), &b()).unwrap().unwrap();
        assert_eq!(cert.algebra.size(), 3);
        assert_eq!(find_failure(&cat, &eq("a = a"), &b()).unwrap(), None);
    }

    #[test]
    fn lifting_distributivity() {
        let cert = check_equation("set3", &catalog::set(3), &eq(DISTRIBUTIVE), &b()).unwrap().unwrap();
        let lift = lift_failure_check(&cert, &b()).unwrap();
        assert!(lift.passed());
        assert_eq!(lift.lifted.algebra.size(), 9);
        assert_eq!(lift.transformers, TransformerVerdict::Valid);
    }

    #[test]
    fn certificate_json_round_trip_and_tamper() {
        let cert = check_equation("set3", &catalog::set(3), &eq(DISTRIBUTIVE), &b()).unwrap().unwrap();
        let json = serde_json::to_string(&cert).unwrap();
        let back: FailureCertificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cert);
        let tampered = json.replace("\"discrepancy\":[0,1]", "\"discrepancy\":[0,0]");
        assert_ne!(tampered, json);
        assert!(serde_json::from_str::<FailureCertificate>(&tampered).is_err());
    }

    #[test]
    fn assignment_budget() {
        let tight = Bounds {
            assignments: 10,
            ..Bounds::default()
        };
        let err = check_equation("set4", &catalog::set(4), &eq(MODULAR), &tight).unwrap_err();
        assert!(err.is_inconclusive());
    }
}
