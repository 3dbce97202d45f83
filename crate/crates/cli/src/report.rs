use algcalc_core::{Bounds, Error};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
    Error,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Fails => 1,
            Verdict::Error => 2,
            Verdict::Inconclusive => 3,
        }
    }
}

/// What a command produced, before it is rendered.
pub struct Outcome {
    pub verdict: Verdict,
    pub text: String,
    pub details: Value,
    pub seed: Option<u64>,
}

impl Outcome {
    pub fn new(verdict: Verdict, text: impl Into<String>, details: Value) -> Self {
        Outcome {
            verdict,
            text: text.into(),
            details,
            seed: None,
        }
    }

    pub fn holds(text: impl Into<String>, details: Value) -> Self {
        Outcome::new(Verdict::Holds, text, details)
    }

    pub fn fails(text: impl Into<String>, details: Value) -> Self {
        Outcome::new(Verdict::Fails, text, details)
    }
}

/// The `--json` document. Field order is fixed; `elapsed_ms` is the only
/// field that varies between identical runs.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    pub verdict: Verdict,
    pub details: Value,
    pub seed: Option<u64>,
    pub bounds: Bounds,
    pub elapsed_ms: u128,
}

/// Maps a library error to a verdict: exhausted budgets and size bounds are
/// inconclusive, everything else is a usage or format problem.
pub fn error_verdict(err: &anyhow::Error) -> Verdict {
    match err.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(e) if e.is_inconclusive() || matches!(e, Error::SizeBound { .. }) => Verdict::Inconclusive,
        _ => Verdict::Error,
    }
}
