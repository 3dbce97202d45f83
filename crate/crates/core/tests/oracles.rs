//! Library results against brute-force oracles that share no code with the
//! implementation beyond operation-table lookup.

use std::collections::BTreeSet;

use algcalc_core::algebra::{decode, FiniteAlgebra};
use algcalc_core::catalog::{self, random_algebra, random_signature};
use algcalc_core::congruence::{con, extract_chain, lambda, tensor, theta};
use algcalc_core::{BinRel, Bounds, Partition};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All partitions of `{0..n-1}` as restricted growth strings.
fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, n: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for b in 0..=max + 1 {
            prefix.push(b);
            go(prefix, n, max.max(b), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    let mut prefix = vec![0];
    go(&mut prefix, n, 0, &mut out);
    out
}

/// Compatibility by checking every pair of related argument tuples.
fn compatible(a: &FiniteAlgebra, labels: &[usize]) -> bool {
    let n = a.size();
    for (op, sym) in a.signature().symbols().iter().enumerate() {
        let count = n.pow(sym.arity as u32);
        for i in 0..count {
            let xs = decode(i, n, sym.arity);
            for j in 0..count {
                let ys = decode(j, n, sym.arity);
                if xs.iter().zip(&ys).all(|(x, y)| labels[*x] == labels[*y])
                    && labels[a.apply(op, &xs)] != labels[a.apply(op, &ys)]
                {
                    return false;
                }
            }
        }
    }
    true
}

fn pairs_of(labels: &[usize]) -> BTreeSet<(usize, usize)> {
    let n = labels.len();
    (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .filter(|&(x, y)| labels[x] == labels[y])
        .collect()
}

fn pairs_of_partition(p: &Partition) -> BTreeSet<(usize, usize)> {
    pairs_of(p.block_of())
}

fn oracle_congruences(a: &FiniteAlgebra) -> Vec<BTreeSet<(usize, usize)>> {
    all_partitions(a.size())
        .into_iter()
        .filter(|l| compatible(a, l))
        .map(|l| pairs_of(&l))
        .collect()
}

/// Intersection of all congruences containing `seeds`.
fn oracle_theta(a: &FiniteAlgebra, seeds: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    let n = a.size();
    let mut acc: BTreeSet<(usize, usize)> = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).collect();
    for c in oracle_congruences(a) {
        if seeds.iter().all(|s| c.contains(s)) {
            acc = acc.intersection(&c).copied().collect();
        }
    }
    acc
}

fn random_instance(seed: u64) -> (FiniteAlgebra, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = rng.gen_range(1..=4);
    let sig = random_signature(&mut rng);
    let a = random_algebra(&mut rng, size, &sig);
    let k = rng.gen_range(0..=3);
    let seeds = (0..k).map(|_| (rng.gen_range(0..size), rng.gen_range(0..size))).collect();
    (a, seeds)
}

#[test]
fn partition_counts_are_bell_numbers() {
    let counts: Vec<usize> = (1..=5).map(|n| all_partitions(n).len()).collect();
    assert_eq!(counts, vec![1, 2, 5, 15, 52]);
}

#[test]
fn theta_matches_oracle_on_catalog() {
    for named in catalog::default_catalog() {
        let a = &named.algebra;
        let n = a.size();
        for x in 0..n {
            for y in 0..n {
                let got = theta(a, &[(x, y)]).unwrap();
                assert_eq!(pairs_of_partition(&got), oracle_theta(a, &[(x, y)]), "{} ({x},{y})", named.name);
            }
        }
    }
}

#[test]
fn con_matches_oracle_on_catalog() {
    for named in catalog::default_catalog() {
        let got: BTreeSet<_> = con(&named.algebra, &Bounds::default())
            .unwrap()
            .congruences
            .iter()
            .map(pairs_of_partition)
            .collect();
        let want: BTreeSet<_> = oracle_congruences(&named.algebra).into_iter().collect();
        assert_eq!(got, want, "{}", named.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn theta_matches_oracle(seed in any::<u64>()) {
        let (a, seeds) = random_instance(seed);
        let got = theta(&a, &seeds).unwrap();
        prop_assert_eq!(pairs_of_partition(&got), oracle_theta(&a, &seeds));
    }

    #[test]
    fn con_matches_oracle(seed in any::<u64>()) {
        let (a, _) = random_instance(seed);
        let got: BTreeSet<_> = con(&a, &Bounds::default()).unwrap().congruences.iter().map(pairs_of_partition).collect();
        let want: BTreeSet<_> = oracle_congruences(&a).into_iter().collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn theta_is_a_closure_operator(seed in any::<u64>(), extra in proptest::collection::vec((0usize..4, 0usize..4), 0..3)) {
        let (a, seeds) = random_instance(seed);
        let n = a.size();
        let t = theta(&a, &seeds).unwrap();
        for &(x, y) in &seeds {
            prop_assert!(t.related(x, y));
        }
        let again: Vec<(usize, usize)> = t.spanning_pairs().collect();
        prop_assert_eq!(theta(&a, &again).unwrap(), t.clone());
        let mut more = seeds.clone();
        more.extend(extra.into_iter().map(|(x, y)| (x % n, y % n)));
        prop_assert!(t.refines(&theta(&a, &more).unwrap()));
    }

    #[test]
    fn chains_replay(seed in any::<u64>()) {
        let (a, mut seeds) = random_instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let n = a.size();
        if seeds.is_empty() {
            seeds.push((0, n - 1));
        }
        let t = theta(&a, &seeds).unwrap();
        let related: Vec<(usize, usize)> = (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .filter(|&(x, y)| t.related(x, y))
            .collect();
        let (x, y) = related[rng.gen_range(0..related.len())];
        let chain = extract_chain(&a, &seeds, x, y).unwrap();
        prop_assert!(chain.validate(&a, &seeds).is_ok());
        for (u, v) in (0..n).flat_map(|u| (0..n).map(move |v| (u, v))) {
            if !t.related(u, v) {
                prop_assert!(extract_chain(&a, &seeds, u, v).is_err());
            }
        }
    }

    #[test]
    fn lambda_on_arbitrary_relations(n in 1usize..4, xs in proptest::collection::vec(any::<bool>(), 9), ys in proptest::collection::vec(any::<bool>(), 9)) {
        let rel = |bits: &[bool]| {
            BinRel::from_pairs(n, (0..n * n).filter(|&i| bits[i]).map(|i| (i / n, i % n))).unwrap()
        };
        let (x, y) = (rel(&xs), rel(&ys));
        // tensor oracle: ((a,b),(c,d)) ∈ x⊗y iff (a,c) ∈ x and (b,d) ∈ y
        let t = tensor(&x, &y).unwrap();
        for p in 0..n * n {
            for q in 0..n * n {
                prop_assert_eq!(t.contains(p, q), x.contains(p / n, q / n) && y.contains(p % n, q % n));
            }
        }
        prop_assert_eq!(lambda(&x.intersection(&y).unwrap()), lambda(&x).intersection(&lambda(&y)).unwrap());
        prop_assert_eq!(lambda(&x.compose(&y).unwrap()), lambda(&x).compose(&lambda(&y)).unwrap());
        if x != y {
            prop_assert_ne!(lambda(&x), lambda(&y));
        }
    }
}
