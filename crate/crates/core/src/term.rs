//! Terms over a signature, assignments, and polynomials.
//!
//! Terms are written in parenthesized prefix form: `x0`, `one`, `(imp x0 x1)`.
//! An identifier that is not a symbol of the governing signature and has the
//! shape `x<digits>` denotes a variable.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::Signature;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(usize),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(index: usize) -> Term {
        Term::Var(index)
    }

    pub fn app<S: Into<String>>(symbol: S, args: Vec<Term>) -> Term {
        Term::App(symbol.into(), args)
    }

    pub fn constant<S: Into<String>>(symbol: S) -> Term {
        Term::App(symbol.into(), Vec::new())
    }

    /// Nesting depth: variables have depth 0, `f(t1..tk)` has depth `1 + max depth(ti)`.
    /// Constants therefore have depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            Term::Var(i) => {
                out.insert(*i);
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// One past the largest variable index, or 0 for a ground term.
    pub fn var_bound(&self) -> usize {
        match self {
            Term::Var(i) => i + 1,
            Term::App(_, args) => args.iter().map(Term::var_bound).max().unwrap_or(0),
        }
    }

    pub fn mentions(&self, symbol: &str) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(f, args) => f == symbol || args.iter().any(|a| a.mentions(symbol)),
        }
    }

    /// Simultaneous substitution of `subst[i]` for variable `i`.
    /// Variables beyond the substitution are left in place.
    pub fn substitute(&self, subst: &[Term]) -> Term {
        match self {
            Term::Var(i) => subst.get(*i).cloned().unwrap_or(Term::Var(*i)),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.substitute(subst)).collect())
            }
        }
    }

    pub fn map_vars(&self, f: &impl Fn(usize) -> usize) -> Term {
        match self {
            Term::Var(i) => Term::Var(f(*i)),
            Term::App(s, args) => Term::App(s.clone(), args.iter().map(|a| a.map_vars(f)).collect()),
        }
    }

    /// Checks symbols and arities against `sig`.
    pub fn check(&self, sig: &Signature) -> Result<()> {
        match self {
            Term::Var(_) => Ok(()),
            Term::App(f, args) => {
                let idx = sig.index_of(f).ok_or_else(|| Error::UnknownSymbol(f.clone()))?;
                let arity = sig.arity(idx);
                if arity != args.len() {
                    return Err(Error::ArityMismatch {
                        symbol: f.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                args.iter().try_for_each(|a| a.check(sig))
            }
        }
    }

    pub fn parse(text: &str, sig: &Signature) -> Result<Term> {
        let mut p = TermParser {
            src: text.as_bytes(),
            pos: 0,
            sig,
        };
        p.skip_ws();
        let t = p.term()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input after term"));
        }
        Ok(t)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(i) => write!(f, "x{i}"),
            Term::App(s, args) if args.is_empty() => write!(f, "{s}"),
            Term::App(s, args) => {
                write!(f, "({s}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

struct TermParser<'a> {
    src: &'a [u8],
    pos: usize,
    sig: &'a Signature,
}

impl TermParser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Result<String> {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_whitespace() || c == b'(' || c == b')' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected identifier"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn term(&mut self) -> Result<Term> {
        if self.pos >= self.src.len() {
            return Err(self.error("unexpected end of input"));
        }
        if self.src[self.pos] == b'(' {
            self.pos += 1;
            self.skip_ws();
            let at = self.pos;
            let name = self.ident()?;
            let idx = self.sig.index_of(&name).ok_or(Error::Parse {
                pos: at,
                msg: format!("unknown operation symbol `{name}`"),
            })?;
            let mut args = Vec::new();
            loop {
                self.skip_ws();
                match self.src.get(self.pos) {
                    None => return Err(self.error("unclosed parenthesis")),
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    Some(_) => args.push(self.term()?),
                }
            }
            let arity = self.sig.arity(idx);
            if arity != args.len() {
                return Err(Error::Parse {
                    pos: at,
                    msg: format!("`{name}` expects {arity} argument(s), got {}", args.len()),
                });
            }
            return Ok(Term::App(name, args));
        }
        if self.src[self.pos] == b')' {
            return Err(self.error("unexpected `)`"));
        }
        let at = self.pos;
        let name = self.ident()?;
        if let Some(idx) = self.sig.index_of(&name) {
            if self.sig.arity(idx) != 0 {
                return Err(Error::Parse {
                    pos: at,
                    msg: format!("`{name}` has arity {} and must be applied", self.sig.arity(idx)),
                });
            }
            return Ok(Term::App(name, Vec::new()));
        }
        match parse_var(&name) {
            Some(i) => Ok(Term::Var(i)),
            None => Err(Error::Parse {
                pos: at,
                msg: format!("`{name}` is neither a symbol nor a variable x<digits>"),
            }),
        }
    }
}

fn parse_var(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Values for variables: position `i` holds the value of variable `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn get(&self, var: usize) -> Option<usize> {
        self.0.get(var).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for Assignment {
    fn from(v: Vec<usize>) -> Self {
        Assignment(v)
    }
}

/// A unary polynomial: a term whose variable 0 is free and whose variables
/// `1..=constants.len()` are frozen to fixed elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    pub term: Term,
    pub constants: Vec<usize>,
}

impl Polynomial {
    pub fn identity() -> Self {
        Polynomial {
            term: Term::Var(0),
            constants: Vec::new(),
        }
    }

    /// The basic translation `z ↦ f(c_1, .., z, .., c_k)` with `z` at `position`.
    pub fn translation(symbol: &str, position: usize, fillers: &[usize]) -> Self {
        let mut args = Vec::with_capacity(fillers.len() + 1);
        let mut next = 1;
        for slot in 0..=fillers.len() {
            if slot == position {
                args.push(Term::Var(0));
            } else {
                args.push(Term::Var(next));
                next += 1;
            }
        }
        Polynomial {
            term: Term::App(symbol.to_string(), args),
            constants: fillers.to_vec(),
        }
    }

    /// `self ∘ inner`: substitutes `inner` for the free variable.
    pub fn compose(&self, inner: &Polynomial) -> Polynomial {
        let own = self.constants.len();
        let shifted = inner.term.map_vars(&|v| if v == 0 { 0 } else { v + own });
        let term = self.term.substitute(&[shifted]);
        let mut constants = self.constants.clone();
        constants.extend_from_slice(&inner.constants);
        Polynomial { term, constants }
    }

    pub fn env(&self, value: usize) -> Assignment {
        let mut v = Vec::with_capacity(self.constants.len() + 1);
        v.push(value);
        v.extend_from_slice(&self.constants);
        Assignment(v)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.term)?;
        if !self.constants.is_empty() {
            write!(f, " [")?;
            for (i, c) in self.constants.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "x{}={}", i + 1, c)?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        Signature::new(vec![("and", 2), ("not", 1), ("one", 0)]).unwrap()
    }

    #[test]
    fn parse_and_print() {
        let s = sig();
        let t = Term::parse("(and x0 (not one))", &s).unwrap();
        assert_eq!(
            t,
            Term::app(
                "and",
                vec![Term::var(0), Term::app("not", vec![Term::constant("one")])]
            )
        );
        assert_eq!(t.to_string(), "(and x0 (not one))");
        assert_eq!(Term::parse("(one)", &s).unwrap(), Term::constant("one"));
        assert_eq!(Term::parse("  x12 ", &s).unwrap(), Term::var(12));
    }

    #[test]
    fn parse_errors_carry_positions() {
        let s = sig();
        match Term::parse("(and x0)", &s) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Term::parse("(or x0 x1)", &s), Err(Error::Parse { .. })));
        assert!(matches!(Term::parse("y", &s), Err(Error::Parse { .. })));
        assert!(matches!(Term::parse("(and x0 x1", &s), Err(Error::Parse { .. })));
        assert!(matches!(Term::parse("x0 x1", &s), Err(Error::Parse { .. })));
        assert!(matches!(Term::parse("not", &s), Err(Error::Parse { .. })));
    }

    #[test]
    fn depth_counts_constants_as_one() {
        assert_eq!(Term::var(3).depth(), 0);
        assert_eq!(Term::constant("one").depth(), 1);
        let t = Term::app("and", vec![Term::var(0), Term::app("not", vec![Term::var(1)])]);
        assert_eq!(t.depth(), 2);
        assert_eq!(t.var_bound(), 2);
    }

    #[test]
    fn polynomial_composition() {
        let outer = Polynomial::translation("and", 1, &[5]);
        assert_eq!(outer.term.to_string(), "(and x1 x0)");
        let inner = Polynomial::translation("not", 0, &[]);
        let both = outer.compose(&inner);
        assert_eq!(both.term.to_string(), "(and x1 (not x0))");
        assert_eq!(both.constants, vec![5]);
        let deeper = Polynomial::translation("and", 0, &[7]).compose(&both);
        assert_eq!(deeper.term.to_string(), "(and (and x2 (not x0)) x1)");
        assert_eq!(deeper.constants, vec![7, 5]);
    }
}
