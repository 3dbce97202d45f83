mod commands;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use algcalc_core::Bounds;
use clap::{Args, Parser, Subcommand};

use report::{error_verdict, Report, Verdict};

/// Finite universal algebra workbench: congruences, matrix powers,
/// transformers and congruence equations.
///
/// Algebra arguments are paths to algebra documents or `builtin:NAME`
/// (set1..set4, lattice2, semilattice2, b2, cycle3). Exit codes: 0 the
/// property holds, 1 it fails (a certificate is printed), 2 usage or format
/// error, 3 inconclusive (a budget ran out).
#[derive(Parser)]
#[command(name = "algcalc", version)]
struct Cli {
    /// Print a machine-readable report instead of text
    #[arg(long, global = true)]
    json: bool,

    #[command(flatten)]
    budgets: Budgets,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Budgets {
    /// Largest universe of any constructed algebra
    #[arg(long, global = true, env = "ALGCALC_BUDGET", default_value_t = Bounds::default().universe)]
    universe_bound: usize,

    /// Largest number of entries in one operation table
    #[arg(long, global = true, default_value_t = Bounds::default().table_entries)]
    table_bound: usize,

    /// Largest universe whose congruence lattice is enumerated
    #[arg(long, global = true, default_value_t = Bounds::default().con_universe)]
    con_bound: usize,

    /// Candidates examined by term enumeration and transformer search
    #[arg(long, global = true, default_value_t = Bounds::default().enumeration)]
    enumeration_budget: u64,

    /// Assignments examined by equation checks and entailment
    #[arg(long, global = true, default_value_t = Bounds::default().assignments)]
    assignment_budget: u64,
}

impl Budgets {
    fn bounds(&self) -> Bounds {
        Bounds {
            universe: self.universe_bound,
            table_entries: self.table_bound,
            con_universe: self.con_bound,
            enumeration: self.enumeration_budget,
            assignments: self.assignment_budget,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// List the congruence lattice with its covering pairs
    Con { algebra: String },

    /// Write the matrix power A^[n] as an algebra document
    Mpow {
        algebra: String,
        #[arg(short = 'n', default_value_t = 2)]
        exponent: usize,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },

    /// Check transformers (tau, rho) on an algebra
    CheckTransformers {
        algebra: String,
        /// Lines `delta | epsilon`
        #[arg(long)]
        tau: PathBuf,
        /// One binary term per line
        #[arg(long)]
        rho: PathBuf,
    },

    /// Search transformers among term functions of bounded depth
    SearchTransformers {
        algebra: String,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        max_i: usize,
        #[arg(long, default_value_t = 2)]
        max_j: usize,
        /// Write a found tau to this file
        #[arg(long)]
        write_tau: Option<PathBuf>,
        /// Write a found rho to this file
        #[arg(long)]
        write_rho: Option<PathBuf>,
    },

    /// Decide gamma |- phi in the logic of K and tau
    Entail {
        /// Members of K, sharing one signature
        #[arg(long = "k", required = true, num_args = 1..)]
        algebras: Vec<String>,
        #[arg(long)]
        tau: PathBuf,
        /// A premise; repeat for several
        #[arg(long)]
        gamma: Vec<String>,
        #[arg(long)]
        phi: String,
        /// Number of variables (default: the least that covers all terms)
        #[arg(long)]
        vars: Option<usize>,
    },

    /// Sample the structural laws of |- (reflexivity, cut, substitution)
    EntailLaws {
        #[arg(long = "k", required = true, num_args = 1..)]
        algebras: Vec<String>,
        #[arg(long)]
        tau: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Congruence equations
    #[command(subcommand)]
    Ceq(CeqCommand),

    /// Check that lambda embeds Rel(A) into Rel(A^[2]) on congruences
    LambdaVerify { algebra: String },

    /// Maltsev identity schemes
    #[command(subcommand)]
    Maltsev(MaltsevCommand),

    /// List the built-in algebras, optionally writing them as documents
    Catalog {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CeqCommand {
    /// Check an equation on one algebra
    Check {
        algebra: String,
        equation: String,
        /// Write a failure certificate here
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
    },
    /// Search a catalog for an algebra failing the equation
    Find {
        equation: String,
        /// Directory of algebra documents (default: the built-in catalog)
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
    },
    /// Lift a failure certificate to the matrix square
    Lift {
        certificate: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MaltsevCommand {
    /// Derive a scheme from transformers via the free 2-generated algebra
    Derive {
        algebra: String,
        #[arg(long)]
        tau: PathBuf,
        #[arg(long)]
        rho: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
    },
    /// Check a scheme document on an algebra
    Check {
        algebra: String,
        #[arg(long)]
        scheme: PathBuf,
    },
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let bounds = cli.budgets.bounds();
    let start = Instant::now();
    let result = commands::run(cli.command, &bounds);
    let elapsed_ms = start.elapsed().as_millis();
    let (verdict, details, seed, text) = match result {
        Ok(o) => (o.verdict, o.details, o.seed, Some(o.text)),
        Err(e) => {
            let verdict = error_verdict(&e);
            eprintln!("error: {e:#}");
            (verdict, serde_json::json!({ "error": format!("{e:#}") }), None, None)
        }
    };
    if cli.json {
        let report = Report {
            command: argv.into_iter().skip(1).collect(),
            verdict,
            details,
            seed,
            bounds,
            elapsed_ms,
        };
        let json = serde_json::to_string_pretty(&report).expect("reports serialize");
        if matches!(verdict, Verdict::Error | Verdict::Inconclusive) && text.is_none() {
            eprintln!("{json}");
        } else {
            println!("{json}");
        }
    } else if let Some(text) = text {
        print!("{text}");
    }
    ExitCode::from(verdict.exit_code() as u8)
}
