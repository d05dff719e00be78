//! Experiment runner for `mfg-prox`: builds an instance, runs a solver,
//! writes the convergence trace as CSV and optionally an SVG figure.

mod error;
pub mod output;
pub mod plot;
pub mod settings;

use std::path::{Path, PathBuf};

use mfg_prox::solvers::{pp_solve_observed, rmd_baseline_observed};
use mfg_prox::{
    beach_bar_model, check_weak_monotonicity, validate_model, ConvergenceTrace, MfgModel, Policy, SolverConfig,
};
use rayon::prelude::*;

pub use error::CliError;
pub use output::{format_float, trace_csv, OutputSet, TRACE_HEADER};
pub use settings::{ExperimentSpec, ModelSource, Settings, SolverKind};

/// Environment variable capping the number of parallel sweep workers.
pub const THREADS_ENV: &str = "MFG_PROX_THREADS";

pub const COMPARE_HEADER: &str = "inner_steps,exploitability_a,exploitability_b";

/// Everything a finished run produced, before anything is written.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub policy: Policy,
    pub trace: ConvergenceTrace,
    /// (cumulative inner steps, action distribution at the plotted (h, s)).
    pub policy_path: Vec<(f64, Vec<f64>)>,
    /// Largest monotonicity sum found, when the diagnostic was requested.
    pub monotonicity: Option<f64>,
}

pub fn build_model(source: &ModelSource, config: &SolverConfig) -> Result<MfgModel, CliError> {
    let model = match source {
        ModelSource::BeachBar {
            states,
            horizon,
            epsilon,
        } => beach_bar_model(*states, *horizon, *epsilon, config.mu_floor)?,
        ModelSource::Json(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            MfgModel::from_json(&text)?
        }
    };
    let violations = validate_model(&model);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(CliError::InvalidModel(list.join("; ")));
    }
    Ok(model)
}

/// Cumulative inner-step count at which a record was taken.
fn steps_at(config: &SolverConfig, outer_k: usize, inner_t: usize) -> usize {
    outer_k * config.inner_iters + inner_t
}

/// Runs the spec's solver from the uniform policy without touching the filesystem.
pub fn execute(spec: &ExperimentSpec) -> Result<RunOutcome, CliError> {
    let model = build_model(&spec.model, &spec.config)?;
    execute_on(&model, spec)
}

fn execute_on(model: &MfgModel, spec: &ExperimentSpec) -> Result<RunOutcome, CliError> {
    if spec.plot_h >= model.horizon() || spec.plot_s >= model.num_states() {
        return Err(CliError::Config(format!(
            "plot cell (h={}, s={}) is outside the model ({} steps, {} states)",
            spec.plot_h,
            spec.plot_s,
            model.horizon(),
            model.num_states()
        )));
    }
    let monotonicity =
        (spec.monotonicity_samples > 0).then(|| check_weak_monotonicity(model, spec.monotonicity_samples, spec.seed));
    let init = model.uniform_policy();
    let (h, s) = (spec.plot_h, spec.plot_s);
    let mut policy_path = vec![(0.0, init.row(h, s).to_vec())];
    let observer = |e: &mfg_prox::solvers::StepEvent<'_>| {
        let t = steps_at(&spec.config, e.outer_k, e.inner_t);
        policy_path.push((t as f64, e.new.row(h, s).to_vec()));
    };
    let (policy, trace) = match spec.solver {
        SolverKind::Pp => pp_solve_observed(model, &init, &spec.config, observer)?,
        SolverKind::Rmd => rmd_baseline_observed(model, &init, &spec.config, observer)?,
    };
    if !trace.is_finite() {
        return Err(CliError::Config("solver produced a non-finite trace".into()));
    }
    Ok(RunOutcome {
        policy,
        trace,
        policy_path,
        monotonicity,
    })
}

fn exploitability_points(config: &SolverConfig, trace: &ConvergenceTrace) -> Vec<(usize, f64)> {
    trace
        .records()
        .iter()
        .filter_map(|r| r.exploitability.map(|e| (steps_at(config, r.outer_k, r.inner_t), e)))
        .collect()
}

pub fn render_svg(spec: &ExperimentSpec, outcome: &RunOutcome) -> String {
    let points: Vec<(f64, f64)> = exploitability_points(&spec.config, &outcome.trace)
        .into_iter()
        .map(|(t, e)| (t as f64, e))
        .collect();
    let title = format!(
        "{} solver, lambda={}, eta={}, tau={}, N={}",
        spec.solver.name(),
        spec.config.lambda,
        spec.config.eta,
        spec.config.inner_iters,
        spec.config.outer_iters
    );
    plot::render(&plot::PlotData {
        title: &title,
        exploitability: &points,
        policy_path: &outcome.policy_path,
        plot_h: spec.plot_h,
        plot_s: spec.plot_s,
    })
}

/// Runs the experiment and writes the trace CSV and, if requested, the SVG.
/// On any error no output file is left behind.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunOutcome, CliError> {
    if spec.out.as_os_str().is_empty() {
        return Err(CliError::Config("no output path given (--out)".into()));
    }
    let outcome = execute(spec)?;
    let mut files = OutputSet::new();
    files.write(&spec.out, &trace_csv(&outcome.trace, spec.timing))?;
    if let Some(svg) = &spec.svg {
        files.write(svg, &render_svg(spec, &outcome))?;
    }
    files.commit();
    Ok(outcome)
}

/// Runs both specs on the same instance and lines up their exploitability
/// by cumulative inner-step count. Steps present in only one run leave the
/// other column empty.
pub fn compare_solvers(a: &ExperimentSpec, b: &ExperimentSpec) -> Result<String, CliError> {
    let model_a = build_model(&a.model, &a.config)?;
    let model_b = build_model(&b.model, &b.config)?;
    if model_a.to_json()? != model_b.to_json()? {
        return Err(CliError::ModelMismatch(format!("{:?} vs {:?}", a.model, b.model)));
    }
    let (ra, rb) = (execute_on(&model_a, a)?, execute_on(&model_b, b)?);
    let pa = exploitability_points(&a.config, &ra.trace);
    let pb = exploitability_points(&b.config, &rb.trace);
    let mut steps: Vec<usize> = pa.iter().chain(&pb).map(|p| p.0).collect();
    steps.sort_unstable();
    steps.dedup();
    let lookup = |points: &[(usize, f64)], t: usize| {
        points
            .iter()
            .find(|p| p.0 == t)
            .map(|p| format_float(p.1))
            .unwrap_or_default()
    };
    let mut out = format!("{COMPARE_HEADER}\n");
    for t in steps {
        out.push_str(&format!("{t},{},{}\n", lookup(&pa, t), lookup(&pb, t)));
    }
    Ok(out)
}

/// Worker count for sweeps: the request (or all cores), capped by the environment value.
pub fn worker_count(requested: Option<usize>, env_cap: Option<&str>) -> Result<usize, CliError> {
    let base = requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cap = match env_cap {
        None => usize::MAX,
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                return Err(CliError::Config(format!(
                    "{THREADS_ENV} must be a positive integer, got {v:?}"
                )))
            }
        },
    };
    Ok(base.clamp(1, cap))
}

/// One axis of a sweep grid: a settings key and the values it takes.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl GridAxis {
    /// Parses `key=v1,v2,...`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let (key, values) = Settings::parse_pair(text)?;
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(CliError::Config(format!("grid axis {key} has no values")));
        }
        if matches!(key.as_str(), "out" | "svg") {
            return Err(CliError::Config(format!("{key} cannot be swept")));
        }
        Ok(Self { key, values })
    }
}

/// Runs every point of the grid product on `workers` threads and writes
/// `run_NNN.csv` per point plus `summary.csv` into `out_dir`. Either every
/// file is written or none is.
pub fn sweep(base: &Settings, grid: &[GridAxis], out_dir: &Path, workers: usize) -> Result<Vec<PathBuf>, CliError> {
    if base.get("out").is_some() || base.get("svg").is_some() {
        return Err(CliError::Config(
            "sweep names its own outputs; use --out-dir instead of --out/--svg".into(),
        ));
    }
    let mut points: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for axis in grid {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push((axis.key.clone(), v.clone()));
                    next
                })
            })
            .collect();
    }
    let specs = points
        .iter()
        .map(|assignment| {
            let mut settings = base.clone();
            for (k, v) in assignment {
                settings.set(k, v.clone())?;
            }
            ExperimentSpec::from_settings(&settings)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    let results: Vec<Result<RunOutcome, CliError>> = pool.install(|| specs.par_iter().map(execute).collect());

    let mut files = OutputSet::new();
    let mut written = Vec::new();
    let mut summary = String::from("run");
    for axis in grid {
        summary.push(',');
        summary.push_str(&axis.key);
    }
    summary.push_str(",final_exploitability,trace\n");
    for (i, ((spec, result), assignment)) in specs.iter().zip(results).zip(&points).enumerate() {
        let outcome = result?;
        let name = format!("run_{i:03}.csv");
        let path = out_dir.join(&name);
        files.write(&path, &trace_csv(&outcome.trace, spec.timing))?;
        written.push(path);
        let mut fields = vec![i.to_string()];
        fields.extend(assignment.iter().map(|(_, v)| v.clone()));
        fields.push(
            outcome
                .trace
                .final_exploitability()
                .map(format_float)
                .unwrap_or_default(),
        );
        fields.push(name);
        summary.push_str(&fields.join(","));
        summary.push('\n');
    }
    let summary_path = out_dir.join("summary.csv");
    files.write(&summary_path, &summary)?;
    written.push(summary_path);
    files.commit();
    Ok(written)
}
