//! Parallel evaluation of exclusion grids.

use gravnoise_core::scanner::{scan_cell, ExclusionGrid, Label, ScanSpec};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::CliError;

pub const THREADS_ENV: &str = "GRAVNOISE_THREADS";

/// Thread cap from [`THREADS_ENV`]; `None` leaves the choice to rayon.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{THREADS_ENV}: expected a positive integer, got {v:?}"
            ))),
        },
    }
}

/// Cells are evaluated independently and merged by index, so the result does
/// not depend on the thread count.
pub fn scan_parallel(spec: &ScanSpec, threads: Option<usize>) -> Result<ExclusionGrid, CliError> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let cells = pool.install(|| {
        (0..spec.cells())
            .into_par_iter()
            .map(|n| scan_cell(spec, n))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(ExclusionGrid::from_cells(cells)?)
}

/// Label counts, invariant checks and the analytic boundary lines.
pub fn summary(spec: &ScanSpec, grid: &ExclusionGrid) -> Value {
    let check = grid.check();
    let counts: serde_json::Map<String, Value> = Label::ALL
        .iter()
        .map(|l| (l.as_str().to_string(), json!(grid.count(*l))))
        .collect();
    let boundary = |d: &gravnoise_core::scanner::Detector| {
        let b = d.boundary();
        json!({
            "exclusion_level_d0": b.d0_limit,
            "d2_limit": b.d2_limit,
            "corner_d0": b.corner.0,
            "corner_d2": b.corner.1,
            "mass": d.mass(),
            "sff_bound": d.sff_bound(),
        })
    };
    json!({
        "counts": counts,
        "checks": {
            "tradeoff_exact": check.tradeoff_exact,
            "upward_closed": check.upward_closed,
            "measured_upward_closed": check.measured_upward_closed,
        },
        "measured_boundary": boundary(&spec.measured),
        "threshold_boundary": boundary(&spec.threshold),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gravnoise_core::scanner::scan_cq;

    #[test]
    fn parallel_matches_sequential() {
        let mut spec = ScanSpec::default();
        spec.d0.points = 17;
        spec.d2.points = 19;
        let seq = scan_cq(&spec).unwrap();
        for threads in [Some(1), Some(3), None] {
            assert_eq!(scan_parallel(&spec, threads).unwrap(), seq);
        }
    }
}
