use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use algcalc_core::algebraize::{
    check_transformers, consequence_properties_check, derive_maltsev_scheme, entails, maltsev_scheme_check,
    search_transformers, ConsequenceQuery, Entailment, SchemeVerdict, TransformerVerdict,
};
use algcalc_core::catalog;
use algcalc_core::cong_eq::{check_equation, find_failure, lift_failure_check, parse_cong_equation, FailureCertificate};
use algcalc_core::congruence::con;
use algcalc_core::format::{render_rho, render_tau, SchemeDocument};
use algcalc_core::matrix_power::{matrix_power, verify_lambda_embedding};
use algcalc_core::{Bounds, Error, FiniteAlgebra};
use anyhow::{Context, Result};
use serde_json::json;

use crate::input;
use crate::report::{Outcome, Verdict};
use crate::{CeqCommand, Command, MaltsevCommand};

pub fn run(command: Command, bounds: &Bounds) -> Result<Outcome> {
    match command {
        Command::Con { algebra } => con_listing(&algebra, bounds),
        Command::Mpow { algebra, exponent, out } => mpow(&algebra, exponent, &out, bounds),
        Command::CheckTransformers { algebra, tau, rho } => {
            let l = input::algebra(&algebra)?;
            let sig = l.algebra.signature();
            let (tau, rho) = (input::tau(&tau, sig)?, input::rho(&rho, sig)?);
            Ok(transformer_outcome(&l.name, check_transformers(&l.algebra, &tau, &rho)?))
        }
        Command::SearchTransformers {
            algebra,
            depth,
            max_i,
            max_j,
            write_tau,
            write_rho,
        } => {
            let l = input::algebra(&algebra)?;
            let bounds_json = json!({ "depth": depth, "max_i": max_i, "max_j": max_j });
            match search_transformers(&l.algebra, depth, max_i, max_j, bounds)? {
                Some(w) => {
                    let (tau, rho) = (render_tau(&w.tau), render_rho(&w.rho));
                    if let Some(p) = write_tau {
                        write(&p, &tau)?;
                    }
                    if let Some(p) = write_rho {
                        write(&p, &rho)?;
                    }
                    let text = format!("witness found on {}\ntau:\n{}rho:\n{}", l.name, indent(&tau), indent(&rho));
                    Ok(Outcome::holds(
                        text,
                        json!({ "search": bounds_json, "tau": lines(&tau), "rho": lines(&rho) }),
                    ))
                }
                None => Ok(Outcome::fails(
                    format!(
                        "no witness on {} within depth {depth}, |tau| <= {max_i}, |rho| <= {max_j} \
                         (bounded-depth, single-algebra evidence)\n",
                        l.name
                    ),
                    json!({ "search": bounds_json, "label": "bounded-depth, single-algebra evidence" }),
                )),
            }
        }
        Command::Entail {
            algebras,
            tau,
            gamma,
            phi,
            vars,
        } => entail(&algebras, &tau, &gamma, &phi, vars, bounds),
        Command::EntailLaws {
            algebras,
            tau,
            trials,
            seed,
        } => {
            let ks = algebras.iter().map(|a| input::algebra(a)).collect::<Result<Vec<_>>>()?;
            let tau = input::tau(&tau, ks[0].algebra.signature())?;
            let k: Vec<FiniteAlgebra> = ks.into_iter().map(|l| l.algebra).collect();
            let r = consequence_properties_check(&k, &tau, trials, seed, bounds)?;
            let mut text = format!("{} trials, seed {}\n", r.trials, r.seed);
            for (name, t) in [("reflexivity", &r.reflexivity), ("cut", &r.cut), ("substitution", &r.substitution)] {
                let _ = writeln!(
                    text,
                    "  {name:<13} sampled {:>4}  non-vacuous {:>4}  violations {}",
                    t.sampled, t.non_vacuous, t.violations
                );
            }
            let verdict = if r.passed() { Verdict::Holds } else { Verdict::Fails };
            let mut o = Outcome::new(verdict, text, serde_json::to_value(&r)?);
            o.seed = Some(seed);
            Ok(o)
        }
        Command::Ceq(c) => ceq(c, bounds),
        Command::LambdaVerify { algebra } => {
            let l = input::algebra(&algebra)?;
            let r = verify_lambda_embedding(&l.algebra, bounds)?;
            let mut text = format!(
                "{}: {} congruences, {} pairs checked, {} violation(s)\n",
                l.name,
                r.congruences,
                r.pairs_checked,
                r.violations.len()
            );
            for v in &r.violations {
                let _ = writeln!(text, "  {:?} fails at ({}, {})", v.check, v.alpha, v.beta);
            }
            let verdict = if r.passed() { Verdict::Holds } else { Verdict::Fails };
            Ok(Outcome::new(verdict, text, serde_json::to_value(&r)?))
        }
        Command::Maltsev(m) => maltsev(m, bounds),
        Command::Catalog { out } => {
            let mut text = String::new();
            let mut names = Vec::new();
            let mut all = catalog::default_catalog();
            all.push(catalog::NamedAlgebra {
                name: "semilattice2".into(),
                algebra: catalog::semilattice2(),
            });
            for named in all {
                let ops: Vec<String> = named
                    .algebra
                    .signature()
                    .symbols()
                    .iter()
                    .map(|s| format!("{}/{}", s.name, s.arity))
                    .collect();
                let _ = writeln!(text, "{:<13} size {}  [{}]", named.name, named.algebra.size(), ops.join(", "));
                if let Some(dir) = &out {
                    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                    input::write_algebra(&dir.join(format!("{}.json", named.name)), &named.name, &named.algebra)?;
                }
                names.push(named.name);
            }
            Ok(Outcome::holds(text, json!({ "algebras": names })))
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}\n")).collect()
}

fn lines(text: &str) -> Vec<&str> {
    text.lines().collect()
}

fn con_listing(algebra: &str, bounds: &Bounds) -> Result<Outcome> {
    let l = input::algebra(algebra)?;
    let lattice = con(&l.algebra, bounds)?;
    let mut text = format!("Con({}): {} congruence(s)\n", l.name, lattice.len());
    for (i, p) in lattice.congruences.iter().enumerate() {
        let _ = writeln!(text, "  {i:>3}  {p}");
    }
    let covers = lattice.covers();
    text.push_str("covers:\n");
    for (i, j) in &covers {
        let _ = writeln!(text, "  {i} < {j}");
    }
    Ok(Outcome::holds(
        text,
        json!({
            "algebra": l.name,
            "size": l.algebra.size(),
            "congruences": lattice.congruences,
            "covers": covers,
        }),
    ))
}

fn mpow(algebra: &str, n: usize, out: &Path, bounds: &Bounds) -> Result<Outcome> {
    let l = input::algebra(algebra)?;
    let m = matrix_power(&l.algebra, n, bounds)?;
    let name = format!("{}^[{n}]", l.name);
    input::write_algebra(out, &name, &m.result)?;
    let symbols: Vec<String> = m
        .result
        .signature()
        .symbols()
        .iter()
        .map(|s| format!("{}/{}", s.name, s.arity))
        .collect();
    Ok(Outcome::holds(
        format!(
            "{name}: {} elements, operations [{}]\n\
             equivalence with the full matrix-power clone: sampled evidence\nwritten to {}\n",
            m.result.size(),
            symbols.join(", "),
            out.display()
        ),
        json!({
            "algebra": name,
            "size": m.result.size(),
            "operations": symbols,
            "clone_equivalence": "sampled evidence",
            "out": out,
        }),
    ))
}

fn transformer_outcome(name: &str, v: TransformerVerdict) -> Outcome {
    match v {
        TransformerVerdict::Valid => Outcome::holds(format!("transformers valid on {name}\n"), json!(v)),
        TransformerVerdict::Counterexample { a, b } => {
            let why = if a == b {
                "the left side fails on an equal pair"
            } else {
                "the left side holds on a distinct pair"
            };
            Outcome::fails(format!("transformers fail on {name} at ({a}, {b}): {why}\n"), json!(v))
        }
    }
}

fn entail(
    algebras: &[String],
    tau: &Path,
    gamma: &[String],
    phi: &str,
    vars: Option<usize>,
    bounds: &Bounds,
) -> Result<Outcome> {
    let ks = algebras.iter().map(|a| input::algebra(a)).collect::<Result<Vec<_>>>()?;
    let sig = ks[0].algebra.signature().clone();
    let tau = input::tau(tau, &sig)?;
    let gamma = gamma.iter().map(|g| input::term(g, &sig)).collect::<Result<Vec<_>>>()?;
    let phi = input::term(phi, &sig)?;
    let needed = gamma.iter().chain([&phi]).map(|t| t.var_bound()).max().unwrap_or(0);
    let var_count = vars.unwrap_or(needed);
    let names: Vec<String> = ks.iter().map(|l| l.name.clone()).collect();
    let q = ConsequenceQuery {
        algebras: ks.into_iter().map(|l| l.algebra).collect(),
        tau,
        gamma,
        phi,
        var_count,
    };
    let verdict = entails(&q, bounds)?;
    let details = json!({ "var_count": var_count, "result": verdict });
    Ok(match verdict {
        Entailment::Holds => Outcome::holds("entailment holds\n", details),
        Entailment::Countermodel { algebra, assignment } => {
            let h: Vec<String> = assignment.iter().enumerate().map(|(i, v)| format!("x{i}={v}")).collect();
            Outcome::fails(
                format!("countermodel in {}: {}\n", names[algebra], h.join(", ")),
                details,
            )
        }
    })
}

fn certificate_text(cert: &FailureCertificate) -> String {
    let mut text = format!("equation fails in {}: {}\n", cert.algebra_name, cert.equation);
    for (v, p) in &cert.assignment {
        let _ = writeln!(text, "  {v} = {p}");
    }
    let (p, q) = cert.discrepancy;
    let side = if cert.lhs.contains(p, q) { "left" } else { "right" };
    let _ = writeln!(text, "  ({p}, {q}) is only in the {side} side");
    text
}

fn save_certificate(cert: &FailureCertificate, out: Option<&Path>) -> Result<()> {
    if let Some(p) = out {
        write(p, &(serde_json::to_string_pretty(cert)? + "\n"))?;
    }
    Ok(())
}

fn ceq(c: CeqCommand, bounds: &Bounds) -> Result<Outcome> {
    match c {
        CeqCommand::Check { algebra, equation, out } => {
            let l = input::algebra(&algebra)?;
            let eq = parse_cong_equation(&equation)?;
            match check_equation(&l.name, &l.algebra, &eq, bounds)? {
                None => Ok(Outcome::holds(format!("{eq} holds in {}\n", l.name), json!({ "equation": eq.to_string() }))),
                Some(cert) => {
                    save_certificate(&cert, out.as_deref())?;
                    let text = certificate_text(&cert) + &serde_json::to_string_pretty(&cert)? + "\n";
                    Ok(Outcome::fails(text, json!({ "certificate": cert })))
                }
            }
        }
        CeqCommand::Find { equation, catalog: dir, out } => {
            let eq = parse_cong_equation(&equation)?;
            let cat = match &dir {
                Some(d) => input::catalog_dir(d)?,
                None => catalog::default_catalog(),
            };
            match find_failure(&cat, &eq, bounds)? {
                None => Ok(Outcome::holds(
                    format!("{eq} held on all {} catalog algebras (not a proof of triviality)\n", cat.len()),
                    json!({ "equation": eq.to_string(), "held_on_catalog": cat.len() }),
                )),
                Some(cert) => {
                    save_certificate(&cert, out.as_deref())?;
                    let text = certificate_text(&cert) + &serde_json::to_string_pretty(&cert)? + "\n";
                    Ok(Outcome::fails(text, json!({ "certificate": cert })))
                }
            }
        }
        CeqCommand::Lift { certificate, out } => {
            let text = fs::read_to_string(&certificate).with_context(|| format!("reading {}", certificate.display()))?;
            let cert: FailureCertificate = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidCertificate(e.to_string()))
                .with_context(|| format!("loading {}", certificate.display()))?;
            let r = lift_failure_check(&cert, bounds)?;
            save_certificate(&r.lifted, out.as_deref())?;
            let (p, q) = r.image_of_discrepancy;
            let mut text = String::from("lifted failure:\n");
            text += &indent(&certificate_text(&r.lifted));
            let _ = writeln!(
                text,
                "  image of the discrepancy ({p}, {q}) separates the sides: {}",
                r.image_separates
            );
            let _ = writeln!(text, "  sides are the lambda-images of the originals: {}", r.sides_commute_with_lambda);
            let _ = writeln!(
                text,
                "transformer check on {} with tau = {{(x0, (box x0))}}, rho = {{(arrow x0 x1), (backarrow x0 x1)}}: {}",
                r.lifted.algebra_name,
                match r.transformers {
                    TransformerVerdict::Valid => "valid".to_string(),
                    TransformerVerdict::Counterexample { a, b } => format!("fails at ({a}, {b})"),
                }
            );
            let verdict = if r.passed() { Verdict::Holds } else { Verdict::Fails };
            Ok(Outcome::new(verdict, text, serde_json::to_value(&r)?))
        }
    }
}

fn maltsev(m: MaltsevCommand, bounds: &Bounds) -> Result<Outcome> {
    match m {
        MaltsevCommand::Derive { algebra, tau, rho, out } => {
            let l = input::algebra(&algebra)?;
            let sig = l.algebra.signature();
            let (tau, rho) = (input::tau(&tau, sig)?, input::rho(&rho, sig)?);
            let scheme = match derive_maltsev_scheme(&l.algebra, &tau, &rho, bounds) {
                Ok(s) => s,
                Err(e @ (Error::NotInGeneratedVariety | Error::TransformersInvalid(..))) => {
                    return Ok(Outcome::fails(format!("{e}\n"), json!({ "error": e.to_string() })));
                }
                Err(e) => return Err(e.into()),
            };
            let doc = SchemeDocument::new(&scheme);
            if let Some(p) = &out {
                write(p, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
            }
            let check = maltsev_scheme_check(&l.algebra, &scheme)?;
            let mut text = format!("scheme with k = {} on {}\n", scheme.chain.len(), l.name);
            for (r, t) in scheme.chain.iter().enumerate() {
                let _ = writeln!(text, "  t{} = {t}", r + 1);
            }
            let _ = writeln!(text, "check: {}", scheme_verdict_text(&check));
            let verdict = if check == SchemeVerdict::Valid {
                Verdict::Holds
            } else {
                Verdict::Fails
            };
            Ok(Outcome::new(verdict, text, json!({ "scheme": doc, "check": check })))
        }
        MaltsevCommand::Check { algebra, scheme } => {
            let l = input::algebra(&algebra)?;
            let text = fs::read_to_string(&scheme).with_context(|| format!("reading {}", scheme.display()))?;
            let doc: SchemeDocument = serde_json::from_str(&text)
                .map_err(|e| Error::Format(e.to_string()))
                .with_context(|| format!("loading {}", scheme.display()))?;
            let s = doc.to_scheme(l.algebra.signature())?;
            let check = maltsev_scheme_check(&l.algebra, &s)?;
            let verdict = if check == SchemeVerdict::Valid {
                Verdict::Holds
            } else {
                Verdict::Fails
            };
            Ok(Outcome::new(
                verdict,
                format!("{}\n", scheme_verdict_text(&check)),
                json!({ "check": check }),
            ))
        }
    }
}

fn scheme_verdict_text(v: &SchemeVerdict) -> String {
    match v {
        SchemeVerdict::Valid => "all identities hold".into(),
        SchemeVerdict::Counterexample { identity, a, b } => format!("{identity:?} fails at x = {a}, y = {b}"),
    }
}
