//! `gapkit`: minimal gaps, additive energy and metric Monte Carlo experiments.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::List;
use gapkit_core::Error;

/// Error carried to the top level with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, kind: "usage", message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: 3, kind: "numerical", message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parameter(_) | Error::Input(_) => 1,
            Error::Precondition(_) | Error::Capacity(_) => 2,
            Error::Numerical(_) => 3,
        };
        let message = match &e {
            Error::Parameter(m) | Error::Input(m) | Error::Precondition(m) | Error::Capacity(m) | Error::Numerical(m) => m.clone(),
        };
        Self { code, kind: e.kind(), message }
    }
}

#[derive(Parser, Debug)]
#[command(name = "gapkit", version, about = "Minimal gaps and additive energy of dilated sequences")]
pub struct Cli {
    /// JSONL output: a header line, then one record per line.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV file for plot-ready aggregates.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Worker threads (falls back to GAPKIT_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat TOML file of parameter defaults; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the first N terms of a sequence.
    Gen(GenArgs),
    /// Minimal gap of alpha * x_n mod 1, optionally with a spacing check.
    Gaps(GapsArgs),
    /// Minimal gap of k-th roots with exact certification for k = 2.
    Sqrt(SqrtArgs),
    /// Additive energy E*(N, gamma), with a fitted exponent over several N.
    Energy(EnergyArgs),
    /// Diophantine counts, admissible pairs, convergents and the Dirichlet check.
    Dioph(DiophArgs),
    /// Selberg polynomial coefficients and a sandwich check.
    Selberg(SelbergArgs),
    /// Monte Carlo over the dilation.
    #[command(subcommand)]
    Mc(McCommand),
    /// Coarse-scale lemma over random alpha in [-C, C].
    Coarse(CoarseArgs),
    /// Log-log least squares on (N, value) rows.
    Fit(FitArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Sequence, e.g. `power:2.5`, `quadratic:1,1.4142,0`, `geometric:2`, `file:values.txt`.
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GapsArgs {
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long)]
    pub n: Option<List<usize>>,
    /// Dilation (default 1).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Spacing hypothesis to check: `unit`, `log` or `relative`.
    #[arg(long)]
    pub spacing: Option<String>,
    /// Constant for the spacing check (default 1).
    #[arg(long)]
    pub spacing_c: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SqrtArgs {
    /// One or more N, comma separated.
    #[arg(long)]
    pub n: Option<List<usize>>,
    /// Root index (default 2).
    #[arg(long)]
    pub k: Option<u32>,
    /// Also report the three-term minimum `|sqrt a + sqrt b - sqrt c|` mod 1.
    #[arg(long)]
    pub three_term: bool,
    /// Report the construction pair `(4d^2 - 2, d^2 - 1)` (k = 2) for these d.
    #[arg(long)]
    pub construction: Option<List<u64>>,
}

#[derive(Args, Debug)]
pub struct EnergyArgs {
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long)]
    pub n: Option<List<usize>>,
    /// Scale (default 1).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Use the quadruple enumeration.
    #[arg(long)]
    pub oracle: bool,
    /// Also report the covering number of the difference set at this radius.
    #[arg(long)]
    pub cover: Option<f64>,
}

#[derive(Args, Debug)]
pub struct DiophArgs {
    /// `full`, `dyadic`, `admissible`, `estimate`, `convergents` or `dirichlet`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long)]
    pub n: Option<List<usize>>,
    /// Upper multiplier bound for `full` (j < M).
    #[arg(long)]
    pub m: Option<u64>,
    /// Dyadic level for `dyadic`, `admissible`, `estimate` and `dirichlet`.
    #[arg(long)]
    pub u: Option<u32>,
    /// Samples per stratum for `estimate`.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Denominator bound for `convergents`.
    #[arg(long)]
    pub q: Option<u64>,
    /// Lower end B of the difference band [B, 8B] for `dirichlet`.
    #[arg(long)]
    pub band: Option<f64>,
    /// Frequency scale T for `dirichlet` (default 1).
    #[arg(long)]
    pub t_scale: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SelbergArgs {
    #[arg(long)]
    pub m: Option<List<usize>>,
    /// Grid points for the sandwich check (default 10000).
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct McArgs {
    #[arg(long)]
    pub spec: Option<String>,
    /// N schedule, comma separated (default 64,128,256,512,1024).
    #[arg(long)]
    pub n: Option<List<usize>>,
    /// `fixed:M`, `power:beta` or `square_log:eps` (default square_log:0.5).
    #[arg(long)]
    pub m_rule: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `fejer` or `uniform:C` (default fejer).
    #[arg(long)]
    pub measure: Option<String>,
    /// Spacing hypothesis checked before sampling, e.g. `unit:1` or `log:0.5`.
    #[arg(long)]
    pub hypothesis: Option<String>,
    /// Persist one record per sample and N.
    #[arg(long)]
    pub records: bool,
}

#[derive(Subcommand, Debug)]
pub enum McCommand {
    /// Expectation of X, X^- or X^+.
    Expect {
        #[command(flatten)]
        common: McArgs,
        /// `indicator`, `minus` or `plus` (default minus).
        #[arg(long)]
        kind: Option<String>,
    },
    /// Variance of X^- against the dyadic count side.
    Var {
        #[command(flatten)]
        common: McArgs,
    },
    /// Distribution of N^2 delta_min and exceptional fractions.
    Dist {
        #[command(flatten)]
        common: McArgs,
        /// Exponent slack in 1/(N^2 log(N)^(1+eps)) (default 0.5).
        #[arg(long)]
        eps: Option<f64>,
    },
}

#[derive(Args, Debug)]
pub struct CoarseArgs {
    /// Power of 4 (default 4096).
    #[arg(long)]
    pub n: Option<usize>,
    /// In (0, 0.1] (default 0.1).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Half-width of the alpha window (default 5).
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluate a single alpha instead of sampling.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub records: bool,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// File of `N value` rows (whitespace or comma separated, `#` comments).
    #[arg(long)]
    pub input: Option<PathBuf>,
}

fn error_line(e: &CliError) -> String {
    serde_json::json!({ "error": e.kind, "exit": e.code, "message": e.message.replace('\n', " ") }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            eprintln!("{}", error_line(&CliError::usage(first)));
            return ExitCode::from(1);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(e.code)
        }
    }
}
