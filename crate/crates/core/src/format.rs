//! On-disk formats: algebra documents (JSON), transformer files (line based)
//! and Maltsev schemes (JSON, terms in prefix form).

use serde::{Deserialize, Serialize};

use crate::algebra::{FiniteAlgebra, Signature};
use crate::algebraize::{MaltsevScheme, TransformerRho, TransformerTau};
use crate::error::{Error, Result};
use crate::term::Term;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationDocument {
    pub symbol: String,
    pub arity: usize,
    pub table: Vec<usize>,
}

/// `{"name": .., "size": .., "operations": [{"symbol", "arity", "table"}]}`,
/// tables flat and row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraDocument {
    pub name: String,
    pub size: usize,
    pub operations: Vec<OperationDocument>,
}

impl AlgebraDocument {
    pub fn new(name: impl Into<String>, a: &FiniteAlgebra) -> Self {
        let operations = a
            .signature()
            .symbols()
            .iter()
            .zip(a.tables())
            .map(|(s, t)| OperationDocument {
                symbol: s.name.clone(),
                arity: s.arity,
                table: t.clone(),
            })
            .collect();
        AlgebraDocument {
            name: name.into(),
            size: a.size(),
            operations,
        }
    }

    pub fn to_algebra(&self) -> Result<FiniteAlgebra> {
        FiniteAlgebra::from_ops(
            self.size,
            self.operations
                .iter()
                .map(|op| (op.symbol.clone(), op.arity, op.table.clone()))
                .collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: AlgebraDocument = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        doc.to_algebra()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn at_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Format(format!("line {line}: {e}")))
}

/// One `delta | epsilon` pair per line; blank lines and `#` comments are skipped.
pub fn parse_tau(text: &str, sig: &Signature) -> Result<TransformerTau> {
    let mut pairs = Vec::new();
    for (line, l) in content_lines(text) {
        let (d, e) = l
            .split_once('|')
            .ok_or_else(|| Error::Format(format!("line {line}: expected `delta | epsilon`")))?;
        pairs.push((at_line(line, Term::parse(d, sig))?, at_line(line, Term::parse(e, sig))?));
    }
    TransformerTau::new(pairs)
}

/// One binary term per line.
pub fn parse_rho(text: &str, sig: &Signature) -> Result<TransformerRho> {
    let terms = content_lines(text)
        .map(|(line, l)| at_line(line, Term::parse(l, sig)))
        .collect::<Result<Vec<_>>>()?;
    TransformerRho::new(terms)
}

pub fn render_tau(tau: &TransformerTau) -> String {
    tau.pairs().iter().map(|(d, e)| format!("{d} | {e}\n")).collect()
}

pub fn render_rho(rho: &TransformerRho) -> String {
    rho.terms().iter().map(|t| format!("{t}\n")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TauPairDocument {
    pub delta: String,
    pub epsilon: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeDocument {
    pub tau: Vec<TauPairDocument>,
    pub rho: Vec<String>,
    pub chain: Vec<String>,
}

impl SchemeDocument {
    pub fn new(s: &MaltsevScheme) -> Self {
        SchemeDocument {
            tau: s
                .tau
                .pairs()
                .iter()
                .map(|(d, e)| TauPairDocument {
                    delta: d.to_string(),
                    epsilon: e.to_string(),
                })
                .collect(),
            rho: s.rho.terms().iter().map(|t| t.to_string()).collect(),
            chain: s.chain.iter().map(|t| t.to_string()).collect(),
        }
    }

    pub fn to_scheme(&self, sig: &Signature) -> Result<MaltsevScheme> {
        let tau = TransformerTau::new(
            self.tau
                .iter()
                .map(|p| Ok((Term::parse(&p.delta, sig)?, Term::parse(&p.epsilon, sig)?)))
                .collect::<Result<Vec<_>>>()?,
        )?;
        let rho = TransformerRho::new(self.rho.iter().map(|t| Term::parse(t, sig)).collect::<Result<_>>()?)?;
        let chain = self.chain.iter().map(|t| Term::parse(t, sig)).collect::<Result<_>>()?;
        let scheme = MaltsevScheme { tau, rho, chain };
        scheme.validate()?;
        Ok(scheme)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebraize::boolean_transformers;
    use crate::catalog;

    #[test]
    fn algebra_round_trip() {
        for named in catalog::default_catalog() {
            let doc = AlgebraDocument::new(&named.name, &named.algebra);
            let back = AlgebraDocument::from_json(&doc.to_json()).unwrap();
            assert_eq!(back, doc);
            assert_eq!(back.to_algebra().unwrap(), named.algebra);
        }
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(AlgebraDocument::from_json("{").is_err());
        let bad = r#"{"name":"x","size":2,"operations":[{"symbol":"f","arity":1,"table":[0,2]}]}"#;
        assert!(AlgebraDocument::from_json(bad).is_err());
        let short = r#"{"name":"x","size":2,"operations":[{"symbol":"f","arity":2,"table":[0,1]}]}"#;
        assert!(AlgebraDocument::from_json(short).is_err());
    }

    #[test]
    fn transformer_files() {
        let sig = catalog::boolean().signature().clone();
        let tau = parse_tau("# Boolean\nx0 | one\n\n", &sig).unwrap();
        let rho = parse_rho("(imp x0 x1)\n(imp x1 x0)\n", &sig).unwrap();
        let (t2, r2) = boolean_transformers();
        assert_eq!((tau.clone(), rho.clone()), (t2, r2));
        assert_eq!(parse_tau(&render_tau(&tau), &sig).unwrap(), tau);
        assert_eq!(parse_rho(&render_rho(&rho), &sig).unwrap(), rho);
        let err = parse_tau("x0 one", &sig).unwrap_err();
        assert!(err.to_string().contains("line 1"));
        assert!(parse_rho("(imp x0 x1)\n(nope x0)\n", &sig).unwrap_err().to_string().contains("line 2"));
        assert!(parse_rho("", &sig).is_err());
    }

    #[test]
    fn scheme_round_trip() {
        let sig = catalog::boolean().signature().clone();
        let (tau, rho) = boolean_transformers();
        let s = MaltsevScheme {
            tau,
            rho,
            chain: vec![Term::parse("(and (imp (and x2 x3) x1) (imp x1 (and x2 x3)))", &sig).unwrap()],
        };
        let json = serde_json::to_string(&SchemeDocument::new(&s)).unwrap();
        let doc: SchemeDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(doc.to_scheme(&sig).unwrap(), s);
    }
}
