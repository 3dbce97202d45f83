//! Bundled algebras and random generators.

use rand::Rng;

use crate::algebra::{FiniteAlgebra, Signature};
use crate::bounds::checked_pow;

#[derive(Debug, Clone)]
pub struct NamedAlgebra {
    pub name: String,
    pub algebra: FiniteAlgebra,
}

/// Two-element Boolean algebra with `and`, `or`, `imp`, `not` and the constant `one`.
pub fn boolean() -> FiniteAlgebra {
    FiniteAlgebra::from_ops(
        2,
        vec![
            ("and", 2, vec![0, 0, 0, 1]),
            ("or", 2, vec![0, 1, 1, 1]),
            ("imp", 2, vec![1, 1, 0, 1]),
            ("not", 1, vec![1, 0]),
            ("one", 0, vec![1]),
        ],
    )
    .expect("boolean tables are valid")
}

/// Two-element lattice with `and`, `or`.
pub fn lattice2() -> FiniteAlgebra {
    FiniteAlgebra::from_ops(2, vec![("and", 2, vec![0, 0, 0, 1]), ("or", 2, vec![0, 1, 1, 1])])
        .expect("lattice tables are valid")
}

/// Two-element meet-semilattice.
pub fn semilattice2() -> FiniteAlgebra {
    FiniteAlgebra::from_ops(2, vec![("and", 2, vec![0, 0, 0, 1])]).expect("valid")
}

/// `⟨{0,1,2}, succ⟩` with `succ(x) = x + 1 mod 3`.
pub fn cycle3() -> FiniteAlgebra {
    FiniteAlgebra::from_ops(3, vec![("succ", 1, vec![1, 2, 0])]).expect("valid")
}

pub fn set(size: usize) -> FiniteAlgebra {
    FiniteAlgebra::set(size).expect("positive size")
}

/// Empty-signature algebras of sizes 1..4, the 2-element lattice, the
/// Boolean algebra and the 3-cycle, in that order.
pub fn default_catalog() -> Vec<NamedAlgebra> {
    let mut out: Vec<NamedAlgebra> = (1..=4)
        .map(|n| NamedAlgebra {
            name: format!("set{n}"),
            algebra: set(n),
        })
        .collect();
    out.push(NamedAlgebra {
        name: "lattice2".into(),
        algebra: lattice2(),
    });
    out.push(NamedAlgebra {
        name: "b2".into(),
        algebra: boolean(),
    });
    out.push(NamedAlgebra {
        name: "cycle3".into(),
        algebra: cycle3(),
    });
    out
}

/// Looks up a bundled algebra by name (`set1`..`set4`, `lattice2`, `b2`,
/// `cycle3`, `semilattice2`).
pub fn by_name(name: &str) -> Option<FiniteAlgebra> {
    match name {
        "semilattice2" => Some(semilattice2()),
        _ => default_catalog()
            .into_iter()
            .find(|a| a.name == name)
            .map(|a| a.algebra),
    }
}

/// A random algebra over `signature` with uniformly random tables.
pub fn random_algebra<R: Rng + ?Sized>(rng: &mut R, size: usize, signature: &Signature) -> FiniteAlgebra {
    let tables = signature
        .symbols()
        .iter()
        .map(|s| {
            let len = checked_pow(size, s.arity) as usize;
            (0..len).map(|_| rng.gen_range(0..size)).collect()
        })
        .collect();
    FiniteAlgebra::new(size, signature.clone(), tables).expect("random tables are in range")
}

/// A random small signature: up to two unary and one binary symbol.
pub fn random_signature<R: Rng + ?Sized>(rng: &mut R) -> Signature {
    let mut symbols = Vec::new();
    for i in 0..rng.gen_range(0..=2) {
        symbols.push((format!("u{i}"), 1));
    }
    if rng.gen_bool(0.6) {
        symbols.push(("b0".to_string(), 2));
    }
    Signature::new(symbols).expect("distinct names")
}
