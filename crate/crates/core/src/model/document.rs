//! JSON form of a model.
//!
//! ```json
//! {
//!   "num_states": 2, "num_actions": 1, "horizon": 2,
//!   "transitions": [[[[0.5, 0.5]], [[0.5, 0.5]]], [[[1.0, 0.0]], [[0.0, 1.0]]]],
//!   "initial_distribution": [1.0, 0.0],
//!   "reward": { "kind": "table", "coefficients": [[[0.0], [1.0]], [[0.0], [1.0]]],
//!               "crowd_penalty": true, "mu_floor": 1e-9 }
//! }
//! ```
//!
//! `transitions` is `[H][S][A][S]`, table coefficients are `[H][S][A]`. The
//! other reward kind is `{"kind": "beach_bar", "mu_floor": ...}`.

use serde::{Deserialize, Serialize};

use super::{MfgModel, RewardKind, RewardModel, TransitionKernel, DEFAULT_MU_FLOOR};
use crate::error::{MfgError, Result};

fn default_floor() -> f64 {
    DEFAULT_MU_FLOOR
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardDocument {
    BeachBar {
        #[serde(default = "default_floor")]
        mu_floor: f64,
    },
    Table {
        coefficients: Vec<Vec<Vec<f64>>>,
        #[serde(default)]
        crowd_penalty: bool,
        #[serde(default = "default_floor")]
        mu_floor: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub transitions: Vec<Vec<Vec<Vec<f64>>>>,
    pub initial_distribution: Vec<f64>,
    pub reward: RewardDocument,
}

fn flatten<T: Clone>(what: &str, nested: &[Vec<T>], outer: usize, inner: usize) -> Result<Vec<T>> {
    if nested.len() != outer || nested.iter().any(|v| v.len() != inner) {
        return Err(MfgError::Document(format!(
            "{what}: expected {outer} rows of length {inner}"
        )));
    }
    Ok(nested.iter().flat_map(|v| v.iter().cloned()).collect())
}

impl ModelDocument {
    pub fn from_model(model: &MfgModel) -> Result<Self> {
        let (h, ns, na) = (model.horizon(), model.num_states(), model.num_actions());
        let kernel = model.transitions();
        let transitions = (0..h)
            .map(|hh| {
                (0..ns)
                    .map(|s| (0..na).map(|a| kernel.next(hh, s, a).to_vec()).collect())
                    .collect()
            })
            .collect();
        let mu_floor = model.reward().mu_floor();
        let reward = match model.reward().kind() {
            RewardKind::BeachBar => RewardDocument::BeachBar { mu_floor },
            RewardKind::Table {
                coefficients,
                crowd_penalty,
                ..
            } => RewardDocument::Table {
                coefficients: coefficients
                    .chunks(ns * na)
                    .map(|step| step.chunks(na).map(<[f64]>::to_vec).collect())
                    .collect(),
                crowd_penalty: *crowd_penalty,
                mu_floor,
            },
            RewardKind::Custom(_) => return Err(MfgError::Unserializable("custom")),
        };
        Ok(Self {
            num_states: ns,
            num_actions: na,
            horizon: h,
            transitions,
            initial_distribution: model.initial_distribution().to_vec(),
            reward,
        })
    }

    pub fn into_model(self) -> Result<MfgModel> {
        let (h, ns, na) = (self.horizon, self.num_states, self.num_actions);
        let steps = flatten("transitions", &self.transitions, h, ns)?;
        let rows = flatten("transitions", &steps, h * ns, na)?;
        let probs = flatten("transitions", &rows, h * ns * na, ns)?;
        let kernel = TransitionKernel::from_flat(h, ns, na, probs)?;
        let reward = match self.reward {
            RewardDocument::BeachBar { mu_floor } => RewardModel::beach_bar(mu_floor)?,
            RewardDocument::Table {
                coefficients,
                crowd_penalty,
                mu_floor,
            } => {
                let rows = flatten("reward coefficients", &coefficients, h, ns)?;
                let flat = flatten("reward coefficients", &rows, h * ns, na)?;
                RewardModel::table(h, ns, na, flat, crowd_penalty, mu_floor)?
            }
        };
        MfgModel::new(kernel, reward, self.initial_distribution)
    }
}

impl MfgModel {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| MfgError::Document(e.to_string()))?;
        doc.into_model()
    }

    /// Fails for models with a custom reward.
    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument::from_model(self)?;
        serde_json::to_string_pretty(&doc).map_err(|e| MfgError::Document(e.to_string()))
    }
}
