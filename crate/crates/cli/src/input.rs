use std::fs;
use std::path::Path;

use algcalc_core::format::{parse_rho, parse_tau, AlgebraDocument};
use algcalc_core::algebraize::{TransformerRho, TransformerTau};
use algcalc_core::{catalog, FiniteAlgebra, Signature, Term};
use anyhow::{anyhow, Context, Result};

pub struct Loaded {
    pub name: String,
    pub algebra: FiniteAlgebra,
}

/// An algebra argument: `builtin:NAME` or a path to an algebra document.
pub fn algebra(arg: &str) -> Result<Loaded> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        let algebra = catalog::by_name(name).ok_or_else(|| anyhow!("no built-in algebra named `{name}`"))?;
        return Ok(Loaded {
            name: name.to_string(),
            algebra,
        });
    }
    let text = fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
    let doc = AlgebraDocument::from_json(&text).with_context(|| format!("loading {arg}"))?;
    Ok(Loaded {
        algebra: doc.to_algebra()?,
        name: doc.name,
    })
}

pub fn write_algebra(path: &Path, name: &str, a: &FiniteAlgebra) -> Result<()> {
    fs::write(path, AlgebraDocument::new(name, a).to_json() + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn tau(path: &Path, sig: &Signature) -> Result<TransformerTau> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_tau(&text, sig).with_context(|| format!("loading {}", path.display()))
}

pub fn rho(path: &Path, sig: &Signature) -> Result<TransformerRho> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_rho(&text, sig).with_context(|| format!("loading {}", path.display()))
}

pub fn term(text: &str, sig: &Signature) -> Result<Term> {
    Term::parse(text, sig).with_context(|| format!("parsing term `{text}`"))
}

/// Every `*.json` algebra document in `dir`, sorted by file name.
pub fn catalog_dir(dir: &Path) -> Result<Vec<catalog::NamedAlgebra>> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let l = algebra(p.to_str().ok_or_else(|| anyhow!("non-UTF-8 path {}", p.display()))?)?;
            Ok(catalog::NamedAlgebra {
                name: l.name,
                algebra: l.algebra,
            })
        })
        .collect()
}
