use serde::Serialize;

/// One sampled point of a solver run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub outer_k: usize,
    /// Steps taken within the current RMD call; 0 for the initial-policy record.
    pub inner_t: usize,
    /// Recorded once per RMD call, on its final record.
    pub exploitability: Option<f64>,
    /// D_{m[π^t]}(π^{t+1}, π^t) of the step that produced this record.
    pub kl_step: Option<f64>,
    pub wall_clock_ms: f64,
}

/// Records ordered by (outer_k, inner_t).
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub(crate) fn push(&mut self, record: TraceRecord) {
        debug_assert!(self
            .records
            .last()
            .is_none_or(|last| (last.outer_k, last.inner_t) < (record.outer_k, record.inner_t)));
        self.records.push(record);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// (outer_k, exploitability) for every record that carries one.
    pub fn exploitability_series(&self) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.exploitability.map(|e| (r.outer_k, e)))
            .collect()
    }

    pub fn kl_series(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.kl_step).collect()
    }

    pub fn final_exploitability(&self) -> Option<f64> {
        self.records.iter().rev().find_map(|r| r.exploitability)
    }

    /// False if any recorded value is NaN or infinite.
    pub fn is_finite(&self) -> bool {
        self.records.iter().all(|r| {
            r.exploitability.is_none_or(f64::is_finite)
                && r.kl_step.is_none_or(f64::is_finite)
                && r.wall_clock_ms.is_finite()
        })
    }
}
