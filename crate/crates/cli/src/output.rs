//! Trace CSV formatting and all-or-nothing file output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mfg_prox::{ConvergenceTrace, TraceRecord};

use crate::error::CliError;

pub const TRACE_HEADER: &str = "outer_k,inner_t,exploitability,kl_step,wall_clock_ms";

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn optional(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// Renders a trace. Wall-clock times are replaced by zero unless `timing`
/// is set, so that reruns of the same spec are byte-identical.
pub fn trace_csv(trace: &ConvergenceTrace, timing: bool) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for TraceRecord {
        outer_k,
        inner_t,
        exploitability,
        kl_step,
        wall_clock_ms,
    } in trace.records()
    {
        let ms = if timing { *wall_clock_ms } else { 0.0 };
        writeln!(
            out,
            "{outer_k},{inner_t},{},{},{}",
            optional(*exploitability),
            optional(*kl_step),
            format_float(ms)
        )
        .unwrap();
    }
    out
}

/// Writes files through temporaries and removes everything it wrote unless
/// [`OutputSet::commit`] is reached.
#[derive(Default)]
pub struct OutputSet {
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, path: &Path, contents: &str) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            if !dir.is_dir() {
                return Err(CliError::Config(format!(
                    "output directory {} does not exist",
                    dir.display()
                )));
            }
        }
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".partial");
        let tmp = PathBuf::from(tmp);
        let result = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(CliError::io(path, e));
        }
        self.written.push(path.to_path_buf());
        Ok(())
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.committed {
            for path in &self.written {
                let _ = fs::remove_file(path);
            }
        }
    }
}
