//! Flat key=value settings shared by config files, flags, compare overrides and sweep grids.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mfg_prox::SolverConfig;

use crate::error::CliError;

/// Every key accepted in a config file; identical to the long flag names.
pub const KEYS: &[&str] = &[
    "benchmark",
    "states",
    "horizon",
    "epsilon",
    "model",
    "solver",
    "lambda",
    "eta",
    "inner",
    "outer",
    "mu-floor",
    "record-every",
    "out",
    "svg",
    "plot-h",
    "plot-s",
    "seed",
    "monotonicity-samples",
    "timing",
];

/// Key/value pairs with later layers overriding earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut out = Self::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{origin}:{}: expected key=value, got {line:?}",
                    n + 1
                )));
            };
            out.set(key.trim(), value.trim())
                .map_err(|e| CliError::Config(format!("{origin}:{}: {e}", n + 1)))?;
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses a single `key=value` argument.
    pub fn parse_pair(pair: &str) -> Result<(String, String), CliError> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value, got {pair:?}")))?;
        let key = normalize(key.trim())?;
        Ok((key, value.trim().to_string()))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        let key = normalize(key)?;
        self.values.insert(key, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// `other` wins on every key it defines.
    pub fn overlay(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Config(format!("invalid value {v:?} for {key}: {e}")))
            })
            .transpose()
    }

    fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None | Some("false") | Some("0") => Ok(false),
            Some("true") | Some("1") | Some("") => Ok(true),
            Some(other) => Err(CliError::Config(format!(
                "invalid value {other:?} for {key}: expected true or false"
            ))),
        }
    }
}

fn normalize(key: &str) -> Result<String, CliError> {
    let key = key.replace('_', "-");
    if KEYS.contains(&key.as_str()) {
        Ok(key)
    } else {
        Err(CliError::Config(format!("unknown key {key:?}")))
    }
}

/// Where the game comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSource {
    BeachBar {
        states: usize,
        horizon: usize,
        epsilon: f64,
    },
    Json(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    /// Proximal point: the anchor follows the iterate after every τ steps.
    Pp,
    /// Mirror descent with the anchor fixed at the initial policy.
    Rmd,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Pp => "pp",
            SolverKind::Rmd => "rmd",
        }
    }
}

impl FromStr for SolverKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "pp" => Ok(SolverKind::Pp),
            "rmd" => Ok(SolverKind::Rmd),
            other => Err(CliError::Config(format!(
                "unknown solver {other:?}; expected pp or rmd"
            ))),
        }
    }
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub model: ModelSource,
    pub solver: SolverKind,
    pub config: SolverConfig,
    /// Trace CSV destination.
    pub out: PathBuf,
    pub svg: Option<PathBuf>,
    /// Step and state whose action distribution is drawn in the SVG.
    pub plot_h: usize,
    pub plot_s: usize,
    /// Seed for the optional monotonicity diagnostic.
    pub seed: u64,
    /// Samples for that diagnostic; zero skips it.
    pub monotonicity_samples: usize,
    /// Write measured wall-clock times instead of zeros.
    pub timing: bool,
}

impl ExperimentSpec {
    /// Resolves settings into a spec. `out` is optional here so that callers
    /// which assign their own paths (compare, sweep) can omit it.
    pub fn from_settings(settings: &Settings) -> Result<Self, CliError> {
        let defaults = SolverConfig::default();
        let model = match (settings.get("model"), settings.get("benchmark")) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either model or benchmark, not both".into())),
            (Some(path), None) => ModelSource::Json(PathBuf::from(path)),
            (None, bench) => {
                let bench = bench.unwrap_or("beach-bar");
                if bench != "beach-bar" {
                    return Err(CliError::Config(format!(
                        "unknown benchmark {bench:?}; expected beach-bar"
                    )));
                }
                ModelSource::BeachBar {
                    states: settings.parsed_or("states", 10)?,
                    horizon: settings.parsed_or("horizon", 10)?,
                    epsilon: settings.parsed_or("epsilon", 0.1)?,
                }
            }
        };
        let config = SolverConfig {
            lambda: settings.parsed_or("lambda", defaults.lambda)?,
            eta: settings.parsed_or("eta", defaults.eta)?,
            inner_iters: settings.parsed_or("inner", defaults.inner_iters)?,
            outer_iters: settings.parsed_or("outer", defaults.outer_iters)?,
            mu_floor: settings.parsed_or("mu-floor", defaults.mu_floor)?,
            record_every: settings.parsed_or("record-every", defaults.record_every)?,
        };
        config.validate()?;
        Ok(Self {
            model,
            solver: settings.parsed_or("solver", SolverKind::Pp)?,
            config,
            out: settings.get("out").map(PathBuf::from).unwrap_or_default(),
            svg: settings.get("svg").map(PathBuf::from),
            plot_h: settings.parsed_or("plot-h", 0)?,
            plot_s: settings.parsed_or("plot-s", 0)?,
            seed: settings.parsed_or("seed", 0)?,
            monotonicity_samples: settings.parsed_or("monotonicity-samples", 0)?,
            timing: settings.flag("timing")?,
        })
    }
}
