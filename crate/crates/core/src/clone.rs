//! Enumeration of term functions, deduplicated by their tables on a fixed algebra.

use std::collections::HashMap;

use crate::algebra::{advance, FiniteAlgebra};
use crate::bounds::{checked_pow, Bounds};
use crate::error::{Error, Result};
use crate::term::Term;

/// A term function of the algebra together with its least representative term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermFunction {
    pub term: Term,
    pub depth: usize,
    pub table: Vec<usize>,
}

/// All `arity`-ary term functions induced by terms of depth at most `depth`.
///
/// The output is in canonical order: by depth, then signature order of the
/// outermost symbol, then lexicographically by the argument functions'
/// positions in this same list. Each table appears once, represented by the
/// first term that produced it.
pub fn distinct_term_functions(
    a: &FiniteAlgebra,
    arity: usize,
    depth: usize,
    bounds: &Bounds,
) -> Result<Vec<TermFunction>> {
    if arity == 0 {
        return Err(Error::InvalidTerm("term function arity must be positive".into()));
    }
    let len = bounds.check_table("term function table", checked_pow(a.size(), arity))?;
    let mut out: Vec<TermFunction> = Vec::new();
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    for v in 0..arity {
        let term = Term::Var(v);
        let table = a.term_table(&term, arity, bounds)?;
        if !seen.contains_key(&table) {
            seen.insert(table.clone(), out.len());
            out.push(TermFunction { term, depth: 0, table });
        }
    }

    let sig = a.signature();
    let mut level_start = 0;
    let mut work: u64 = 0;
    for d in 1..=depth {
        let prev = out.len();
        for (op, sym) in sig.symbols().iter().enumerate() {
            if sym.arity == 0 {
                if d == 1 {
                    let table = vec![a.table(op)[0]; len];
                    if !seen.contains_key(&table) {
                        seen.insert(table.clone(), out.len());
                        out.push(TermFunction {
                            term: Term::constant(sym.name.clone()),
                            depth: 1,
                            table,
                        });
                    }
                }
                continue;
            }
            let mut idx = vec![0; sym.arity];
            loop {
                if idx.iter().any(|&i| i >= level_start) {
                    work += 1;
                    if work > bounds.enumeration {
                        return Err(Error::BudgetExceeded {
                            what: "term enumeration",
                            budget: bounds.enumeration,
                        });
                    }
                    let parts: Vec<&[usize]> = idx.iter().map(|&i| out[i].table.as_slice()).collect();
                    let table = a.apply_pointwise(op, &parts, len);
                    if !seen.contains_key(&table) {
                        let term = Term::App(
                            sym.name.clone(),
                            idx.iter().map(|&i| out[i].term.clone()).collect(),
                        );
                        seen.insert(table.clone(), out.len());
                        out.push(TermFunction { term, depth: d, table });
                    }
                }
                if !advance(&mut idx, prev) {
                    break;
                }
            }
        }
        if out.len() == prev {
            break;
        }
        level_start = prev;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn meet_semilattice_binary() {
        let fs = distinct_term_functions(&catalog::semilattice2(), 2, 3, &Bounds::default()).unwrap();
        let terms: Vec<String> = fs.iter().map(|f| f.term.to_string()).collect();
        assert_eq!(terms, vec!["x0", "x1", "(and x0 x1)"]);
    }

    #[test]
    fn depth_zero_is_just_variables() {
        for a in catalog::default_catalog() {
            let fs = distinct_term_functions(&a.algebra, 1, 0, &Bounds::default()).unwrap();
            assert_eq!(fs.len(), 1);
            assert_eq!(fs[0].term, Term::Var(0));
        }
    }

    #[test]
    fn boolean_unary_functions() {
        let fs = distinct_term_functions(&catalog::boolean(), 1, 3, &Bounds::default()).unwrap();
        let tables: Vec<Vec<usize>> = fs.iter().map(|f| f.table.clone()).collect();
        assert_eq!(tables.len(), 4);
        for want in [vec![0, 1], vec![1, 0], vec![1, 1], vec![0, 0]] {
            assert!(tables.contains(&want));
        }
        // `imp` precedes `one` in the signature, so imp(x0,x0) represents 1
        assert_eq!(fs[1].term.to_string(), "(imp x0 x0)");
        assert_eq!(fs[2].term.to_string(), "(not x0)");
        assert_eq!(fs[3].term.to_string(), "(and x0 (not x0))");
    }

    #[test]
    fn boolean_binary_clone_is_complete() {
        let fs = distinct_term_functions(&catalog::boolean(), 2, 3, &Bounds::default()).unwrap();
        assert_eq!(fs.len(), 16);
    }

    #[test]
    fn tables_distinct_and_terms_evaluate_to_tables() {
        let b = Bounds::default();
        for a in catalog::default_catalog() {
            for arity in 1..=2 {
                let fs = distinct_term_functions(&a.algebra, arity, 3, &b).unwrap();
                for (i, f) in fs.iter().enumerate() {
                    assert_eq!(a.algebra.term_table(&f.term, arity, &b).unwrap(), f.table);
                    assert_eq!(f.term.depth(), f.depth);
                    for g in &fs[..i] {
                        assert_ne!(g.table, f.table);
                    }
                }
                assert!(fs.windows(2).all(|w| w[0].depth <= w[1].depth));
            }
        }
    }

    #[test]
    fn budget_is_reported() {
        let tight = Bounds {
            enumeration: 5,
            ..Bounds::default()
        };
        let err = distinct_term_functions(&catalog::boolean(), 2, 3, &tight).unwrap_err();
        assert!(err.is_inconclusive());
        assert!(distinct_term_functions(&catalog::boolean(), 0, 1, &Bounds::default()).is_err());
    }
}
