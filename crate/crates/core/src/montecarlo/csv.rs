use std::io::Write;

use super::{RunConfig, SweepResult};
use crate::error::{Error, Result};

/// Writes a sweep as CSV preceded by a `#`-prefixed metadata block.
///
/// Columns: `sweep_value,policy_or_bound,mean_db,stderr_db,runs,mean_linear`.
pub fn write_csv<W: Write>(out: &mut W, cfg: &RunConfig, result: &SweepResult) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    writeln!(out, "# iqcrlb sweep").map_err(io)?;
    writeln!(out, "# version = {}", env!("CARGO_PKG_VERSION")).map_err(io)?;
    writeln!(out, "# config_hash = {}", cfg.config_hash()).map_err(io)?;
    for (k, v) in cfg.describe() {
        writeln!(out, "# {k} = {v}").map_err(io)?;
    }
    writeln!(out, "sweep_value,policy_or_bound,mean_db,stderr_db,runs,mean_linear").map_err(io)?;
    for p in &result.points {
        for s in &p.series {
            writeln!(
                out,
                "{},{},{:.4},{:.4},{},{:.6e}",
                p.value, s.name, s.mean_db, s.stderr_db, s.runs, s.mean_linear
            )
            .map_err(io)?;
        }
    }
    Ok(())
}
