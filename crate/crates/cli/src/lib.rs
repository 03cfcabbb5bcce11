//! Library half of the `adiabat` command-line tool.
//!
//! [`Cli`] is the clap surface, [`RunConfig`] its validated form, and
//! [`execute`] runs one command inside a worker pool, prints the JSON report
//! and writes any CSV tables. Exit codes: 0 success, 1 property failure,
//! 2 usage or input error, 3 cap exceeded.

pub mod commands;
pub mod random;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use markov_adiabatic::{BoundVariant, Mode, SearchStrategy, DEFAULT_GRID_POINTS};
use serde::Serialize;

/// Seed used by `verify` when none is given.
pub const DEFAULT_SEED: u64 = 20_240_601;
/// Dimensions used by `demo-optimal` when `--n-list` is absent.
pub const DEFAULT_N_LIST: [usize; 4] = [4, 6, 8, 10];
/// Accuracy used by `demo-optimal` when `--eps` is absent.
pub const DEFAULT_DEMO_EPS: f64 = 0.2;

pub const EXIT_OK: u8 = 0;
pub const EXIT_PROPERTY: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_CAP: u8 = 3;

#[derive(Parser, Debug, Clone)]
#[command(name = "adiabat", version, about = "Mixing, spectral and adiabatic-time analysis of evolving Markov chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Certificate, Lipschitz constant, spectral floor, mixing times, bounds and continuity checks
    Analyze,
    /// Largest mixing time over the grid
    Mixing,
    /// Stable adiabatic time
    Sad,
    /// Upper bound on the stable adiabatic time
    Bound,
    /// Run the invariant battery on seeded random instances
    Verify,
    /// Scaling table for the reset/shift family
    DemoOptimal,
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    /// Evolution JSON file
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Accuracy, in (0, 1)
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Uniform grid points on [0, 1] (breakpoints are added)
    #[arg(long, global = true, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid: usize,
    /// Search cap for mixing and adiabatic times
    #[arg(long, global = true)]
    pub cap: Option<u64>,
    /// strict | relaxed
    #[arg(long, global = true, default_value = "relaxed")]
    pub mode: Mode,
    /// literal | proof
    #[arg(long, global = true, default_value = "proof")]
    pub variant: BoundVariant,
    /// exact | geometric
    #[arg(long, global = true, default_value = "exact")]
    pub strategy: SearchStrategy,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub out: OutputFormat,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Directory for CSV output (default: beside the input)
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated dimensions for demo-optimal
    #[arg(long, global = true)]
    pub n_list: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

impl OutputFormat {
    fn json(self) -> bool {
        self != Self::Csv
    }

    fn csv(self) -> bool {
        self != Self::Json
    }
}

/// Validated run parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub eps: Option<f64>,
    pub grid_points: usize,
    pub cap: Option<u64>,
    pub mode: Mode,
    pub variant: BoundVariant,
    pub strategy: SearchStrategy,
    pub seed: u64,
    pub output: OutputFormat,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub n_list: Vec<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("input: {0}")]
    Input(String),
    #[error(transparent)]
    Analysis(#[from] markov_adiabatic::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Analysis(markov_adiabatic::Error::CapExceeded { .. }) => EXIT_CAP,
            _ => EXIT_INPUT,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let Cli { command, opts } = cli;
        let needs_input = matches!(
            command,
            Command::Analyze | Command::Mixing | Command::Sad | Command::Bound
        );
        match (&opts.input, needs_input) {
            (None, true) => return Err(usage("--input is required for this command")),
            (Some(_), false) => return Err(usage("--input is not accepted by this command")),
            _ => {}
        }
        let eps = match (opts.eps, command) {
            (Some(e), _) if !(e > 0.0 && e < 1.0) => {
                return Err(usage(format!("--eps must lie in (0, 1), got {e}")))
            }
            (None, Command::DemoOptimal) => Some(DEFAULT_DEMO_EPS),
            (None, Command::Verify) => None,
            (None, _) => return Err(usage("--eps is required for this command")),
            (e, _) => e,
        };
        if opts.grid < 2 {
            return Err(usage("--grid must be at least 2"));
        }
        if opts.cap == Some(0) {
            return Err(usage("--cap must be at least 1"));
        }
        if opts.workers == Some(0) {
            return Err(usage("--workers must be at least 1"));
        }
        if opts.out.csv() && matches!(command, Command::Bound | Command::Verify) {
            return Err(usage("this command has no tabular output; use --out json"));
        }
        let n_list = match (opts.n_list, command) {
            (Some(raw), Command::DemoOptimal) => parse_n_list(&raw)?,
            (None, Command::DemoOptimal) => DEFAULT_N_LIST.to_vec(),
            (Some(_), _) => return Err(usage("--n-list is only accepted by demo-optimal")),
            (None, _) => Vec::new(),
        };
        Ok(Self {
            command,
            input: opts.input,
            eps,
            grid_points: opts.grid,
            cap: opts.cap,
            mode: opts.mode,
            variant: opts.variant,
            strategy: opts.strategy,
            seed: opts.seed,
            output: opts.out,
            workers: opts.workers,
            out_dir: opts.out_dir,
            n_list,
        })
    }

    /// `eps`, which validation guarantees for every command that reads it.
    pub fn eps(&self) -> f64 {
        self.eps.expect("eps is validated for this command")
    }

    fn csv_dir(&self) -> PathBuf {
        if let Some(dir) = &self.out_dir {
            return dir.clone();
        }
        self.input
            .as_deref()
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    }

    fn file_stem(&self) -> String {
        self.input
            .as_deref()
            .and_then(Path::file_stem)
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "adiabat".into())
    }
}

fn parse_n_list(raw: &str) -> Result<Vec<usize>, CliError> {
    let list = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| usage(format!("bad dimension `{s}` in --n-list"))))
        .collect::<Result<Vec<_>, _>>()?;
    if list.is_empty() {
        return Err(usage("--n-list is empty"));
    }
    if let Some(n) = list.iter().find(|&&n| n < 3) {
        return Err(usage(format!("--n-list dimensions must be at least 3, got {n}")));
    }
    Ok(list)
}

/// A finished command: its JSON report, CSV tables keyed by file suffix, and
/// the exit code.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: serde_json::Value,
    pub tables: Vec<(String, String)>,
    pub exit: u8,
}

/// Run `cfg` on a pool of `cfg.workers` threads.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build worker pool: {e}")))?;
    pool.install(|| match cfg.command {
        Command::Analyze => commands::analyze(cfg),
        Command::Mixing => commands::mixing(cfg),
        Command::Sad => commands::sad(cfg),
        Command::Bound => commands::bound(cfg),
        Command::Verify => commands::verify(cfg),
        Command::DemoOptimal => commands::demo_optimal(cfg),
    })
}

/// Run, print the report to `stdout` and write tables; returns the exit code.
pub fn execute(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8 {
    let outcome = match run(cfg) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "adiabat: {e}");
            return e.exit_code();
        }
    };
    if cfg.output.json() {
        let text = serde_json::to_string_pretty(&outcome.report).expect("reports serialize");
        if writeln!(stdout, "{text}").is_err() {
            return EXIT_INPUT;
        }
    }
    if cfg.output.csv() {
        let dir = cfg.csv_dir();
        let stem = cfg.file_stem();
        for (suffix, body) in &outcome.tables {
            let path = dir.join(format!("{stem}.{suffix}.csv"));
            if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(&path, body)) {
                let _ = writeln!(stderr, "adiabat: cannot write {}: {e}", path.display());
                return EXIT_INPUT;
            }
        }
    }
    outcome.exit
}
