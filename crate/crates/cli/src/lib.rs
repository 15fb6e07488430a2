//! The `dlab` command line: argument parsing, dispatch, report rendering and
//! exit codes. The binary is a thin shell around [`run`].

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod io;

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dlab_core::disentangler::VerificationReport;
use dlab_core::DlabError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dlab", version, about = "Build and verify disentangling channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// CSV is available for sweep tables only.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// JSON file overriding any subset of the numeric defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pure-state nets: greedy construction, covering certification, size bounds.
    Net {
        #[command(subcommand)]
        cmd: NetCmd,
    },
    /// Disentangler specs: construction, verification sweeps, size bounds.
    Disent {
        #[command(subcommand)]
        cmd: DisentCmd,
    },
    /// Separability tools on a stored state or Choi operator.
    Sep {
        #[command(subcommand)]
        cmd: SepCmd,
    },
    /// Symmetric-subspace tools.
    Sym {
        #[command(subcommand)]
        cmd: SymCmd,
    },
    /// Aggregate suites.
    Suite {
        #[command(subcommand)]
        cmd: SuiteCmd,
    },
}

#[derive(Debug, Subcommand)]
pub enum NetCmd {
    /// Greedy net from a seeded Haar pool.
    Build {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        eps: f64,
        /// Pool size; defaults to a size tuned per dimension.
        #[arg(long)]
        pool: Option<usize>,
        /// Also certify the covering radius on this many samples.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: u64,
    },
    /// Monte-Carlo certification of a net's covering radius.
    Certify {
        #[command(flatten)]
        net: NetSource,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: u64,
    },
    /// Closed-form bounds on the minimum net size.
    Bounds {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        eps: f64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct NetSource {
    #[arg(long, conflicts_with = "octahedron")]
    pub net_file: Option<PathBuf>,
    /// The six-point qubit net.
    #[arg(long)]
    pub octahedron: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Net,
    Definetti,
    Identity,
    Swap,
}

#[derive(Debug, Clone, Args)]
pub struct SpecSource {
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub net: NetSource,
    /// Samples for certifying a net that carries no certificate.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, conflicts_with = "kind")]
    pub spec_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    C1,
    C2,
    StrongC1,
    Eb,
}

#[derive(Debug, Subcommand)]
pub enum DisentCmd {
    /// Emit a spec as JSON.
    Build {
        #[command(flatten)]
        spec: SpecSource,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the selected checks against a spec.
    Verify {
        #[command(flatten)]
        spec: SpecSource,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [CheckArg::C1, CheckArg::C2, CheckArg::StrongC1, CheckArg::Eb])]
        checks: Vec<CheckArg>,
        /// Inputs per first-condition check and targets per second-condition check.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 2)]
        dim_r: usize,
        #[arg(long)]
        seed: u64,
        /// Search over all inputs instead of the construction's own.
        #[arg(long)]
        generic_input_opt: bool,
    },
    /// Size bounds: the lower bound for `--eps/--delta`, else the spec's own.
    Bounds {
        #[command(flatten)]
        spec: SpecSource,
        #[arg(long, conflicts_with = "spec_file")]
        eps: Option<f64>,
        #[arg(long, conflicts_with = "spec_file")]
        delta: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    /// JSON or QMX1 matrix file.
    #[arg(long)]
    pub state: PathBuf,
    /// Bipartite factor dims, e.g. `2,3`.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
}

#[derive(Debug, Subcommand)]
pub enum SepCmd {
    /// See-saw lower bound on the fidelity with the separable set.
    Fidelity {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        seed: u64,
    },
    /// Upper bound on the trace distance to the separable set.
    Distance {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        seed: u64,
    },
    /// Smallest eigenvalue of the partial transpose.
    Ppt {
        #[command(flatten)]
        state: StateArgs,
        /// Factor to transpose, 0-based.
        #[arg(long, default_value_t = 1)]
        cut: usize,
    },
    /// Entanglement-breaking membership of a Choi operator.
    Eb {
        #[arg(long)]
        choi: PathBuf,
        #[arg(long)]
        in_dim: Option<usize>,
        #[arg(long)]
        seed: u64,
    },
    /// The POVM-and-states form of the separable fidelity.
    Lemma2 {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 4)]
        r: usize,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum SymCmd {
    /// Dimension of the symmetric subspace of `(C^d)^{(x)n}`.
    Dim {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
    },
    /// Fit a reduced random symmetric state by i.i.d. mixtures.
    Definetti {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum SuiteCmd {
    /// Every acceptance criterion, one verdict each.
    Acceptance {
        #[arg(long)]
        seed: u64,
    },
}

/// A sweep table for CSV output.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    /// Pretty JSON in the report's own field order.
    pub json: String,
    pub table: Option<Table>,
    pub passed: bool,
}

impl Outcome {
    pub fn report<T: serde::Serialize>(body: &T) -> Result<Self> {
        Ok(Self { json: serde_json::to_string_pretty(body)?, table: None, passed: true })
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_FAIL
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match (format, &self.table) {
            (Format::Json, _) => Ok(format!("{}\n", self.json)),
            (Format::Csv, Some(t)) => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&t.headers)?;
                for row in &t.rows {
                    w.write_record(row)?;
                }
                Ok(String::from_utf8(w.into_inner()?)?)
            }
            (Format::Csv, None) => Err(UsageError("CSV output is only available for sweep tables".into()).into()),
        }
    }
}

/// A bad flag combination detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

pub fn exit_code_for_reports(reports: &[VerificationReport]) -> i32 {
    if reports.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

pub fn exit_code_for_error(err: &anyhow::Error) -> i32 {
    let capped = err.chain().any(|e| matches!(e.downcast_ref::<DlabError>(), Some(DlabError::CapExceeded(_))));
    if capped {
        EXIT_CAP
    } else {
        EXIT_USAGE
    }
}

/// Size the global worker pool from `DLAB_THREADS`, if set.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("DLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => bail!("DLAB_THREADS must be a positive integer, got {raw:?}"),
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = config::Config::load(cli.config.as_deref())?;
    commands::dispatch(&cli.command, &cfg)
}

/// Run, render and write; returns the process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    let result = run(cli).and_then(|out| {
        let text = out.render(cli.format)?;
        match &cli.output {
            Some(path) => std::fs::write(path, &text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(out.exit_code())
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for_error(&e)
        }
    }
}
