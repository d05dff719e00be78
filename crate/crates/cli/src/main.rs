use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mfg_prox_cli::{
    compare_solvers, run_experiment, sweep, worker_count, CliError, ExperimentSpec, GridAxis, OutputSet, Settings,
    THREADS_ENV,
};

#[derive(Parser)]
#[command(
    name = "mfg-prox",
    version,
    about = "Solve tabular mean-field games with proximal point iteration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver and write its convergence trace.
    Run(ExperimentArgs),
    /// Run two solver settings on the same instance and align their exploitability.
    Compare(CompareArgs),
    /// Run the product of several settings in parallel.
    Sweep(SweepArgs),
}

/// Every option can also come from `--config`; flags take precedence.
#[derive(Args)]
struct ExperimentArgs {
    /// Flat key=value file using the long flag names as keys.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Built-in instance (beach-bar).
    #[arg(long)]
    benchmark: Option<String>,
    #[arg(long)]
    states: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// Model JSON file, instead of a benchmark.
    #[arg(long, value_name = "FILE")]
    model: Option<String>,
    /// pp or rmd.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    /// RMD steps per outer iteration.
    #[arg(long)]
    inner: Option<String>,
    /// Outer iterations.
    #[arg(long)]
    outer: Option<String>,
    #[arg(long)]
    mu_floor: Option<String>,
    #[arg(long)]
    record_every: Option<String>,
    /// Output CSV.
    #[arg(long, value_name = "FILE")]
    out: Option<String>,
    /// Optional SVG figure.
    #[arg(long, value_name = "FILE")]
    svg: Option<String>,
    #[arg(long)]
    plot_h: Option<String>,
    #[arg(long)]
    plot_s: Option<String>,
    /// Seed for the monotonicity diagnostic.
    #[arg(long)]
    seed: Option<String>,
    /// Sample count for the monotonicity diagnostic (0 skips it).
    #[arg(long)]
    monotonicity_samples: Option<String>,
    /// Record real wall-clock times instead of zeros.
    #[arg(long)]
    timing: bool,
}

impl ExperimentArgs {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut settings = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::new(),
        };
        let flags = [
            ("benchmark", &self.benchmark),
            ("states", &self.states),
            ("horizon", &self.horizon),
            ("epsilon", &self.epsilon),
            ("model", &self.model),
            ("solver", &self.solver),
            ("lambda", &self.lambda),
            ("eta", &self.eta),
            ("inner", &self.inner),
            ("outer", &self.outer),
            ("mu-floor", &self.mu_floor),
            ("record-every", &self.record_every),
            ("out", &self.out),
            ("svg", &self.svg),
            ("plot-h", &self.plot_h),
            ("plot-s", &self.plot_s),
            ("seed", &self.seed),
            ("monotonicity-samples", &self.monotonicity_samples),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                settings.set(key, v.clone())?;
            }
        }
        if self.timing {
            settings.set("timing", "true")?;
        }
        Ok(settings)
    }
}

#[derive(Args)]
struct CompareArgs {
    /// Shared settings; `--out` names the comparison CSV.
    #[command(flatten)]
    shared: ExperimentArgs,
    /// Override for the first run, as key=value. Repeatable.
    #[arg(long = "a", value_name = "KEY=VALUE")]
    a: Vec<String>,
    /// Override for the second run, as key=value. Repeatable.
    #[arg(long = "b", value_name = "KEY=VALUE")]
    b: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    shared: ExperimentArgs,
    /// Axis as key=v1,v2,... Repeatable; the sweep covers the product.
    #[arg(long, value_name = "KEY=VALUES")]
    grid: Vec<String>,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Parallel runs; capped by MFG_PROX_THREADS.
    #[arg(long)]
    workers: Option<usize>,
}

fn with_overrides(base: &Settings, pairs: &[String]) -> Result<ExperimentSpec, CliError> {
    let mut settings = base.clone();
    for pair in pairs {
        let (k, v) = Settings::parse_pair(pair)?;
        settings.set(&k, v)?;
    }
    ExperimentSpec::from_settings(&settings)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let spec = ExperimentSpec::from_settings(&args.settings()?)?;
            let outcome = run_experiment(&spec)?;
            if let Some(m) = outcome.monotonicity {
                eprintln!("monotonicity: largest sampled sum {m:e}");
            }
            if let Some(e) = outcome.trace.final_exploitability() {
                eprintln!("final exploitability {e:e}");
            }
        }
        Command::Compare(args) => {
            let mut base = args.shared.settings()?;
            let out = base
                .get("out")
                .map(PathBuf::from)
                .ok_or_else(|| CliError::Config("no output path given (--out)".into()))?;
            // Per-run outputs are not written by compare.
            let mut cleared = Settings::new();
            for (k, v) in base.iter().filter(|(k, _)| !matches!(*k, "out" | "svg")) {
                cleared.set(k, v)?;
            }
            base = cleared;
            let a = with_overrides(&base, &args.a)?;
            let b = with_overrides(&base, &args.b)?;
            let table = compare_solvers(&a, &b)?;
            let mut files = OutputSet::new();
            files.write(&out, &table)?;
            files.commit();
        }
        Command::Sweep(args) => {
            let base = args.shared.settings()?;
            let grid = args
                .grid
                .iter()
                .map(|g| GridAxis::parse(g))
                .collect::<Result<Vec<_>, _>>()?;
            let cap = std::env::var(THREADS_ENV).ok();
            let workers = worker_count(args.workers, cap.as_deref())?;
            let written = sweep(&base, &grid, &args.out_dir, workers)?;
            eprintln!("wrote {} files with {workers} workers", written.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
