use std::io::Write;

use serde_json::json;

use crate::dual::IterationTrace;
use crate::solver::Phase;

/// Writes one JSON object per solver iteration.
pub struct JsonLinesTrace<W: Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: Write> JsonLinesTrace<W> {
    pub fn new(out: W) -> Self {
        Self { out, error: None }
    }

    pub fn record(&mut self, phase: Phase, step: &IterationTrace<'_>) {
        if self.error.is_some() {
            return;
        }
        let phase = match phase {
            Phase::Dual => "dual",
            Phase::Primal => "primal",
        };
        let line = json!({
            "phase": phase,
            "iteration": step.iteration,
            "values": step.values,
            "residual": step.residual,
        });
        if let Err(e) = writeln!(self.out, "{line}") {
            self.error = Some(e);
        }
    }

    /// Flushes and reports the first write error, if any.
    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}
