//! Relative error over a table of (dx, mesh ratio) pairs.

use serde::Serialize;

use crate::analysis::convergence::{relative_l2_error, solve};
use crate::error::Result;
use crate::grid::{GridSpec, MarketParams, OptionStyle};
use crate::par::{self, Execution};
use crate::stepper::SolverConfig;
use crate::surface::SolutionSurface;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub intervals: usize,
    pub dx: f64,
    pub errors: Vec<f64>,
    /// Cells whose error exceeds `flag_factor` times the row minimum.
    pub flagged: Vec<bool>,
}

impl SweepRow {
    /// Largest over smallest error in the row.
    pub fn spread(&self) -> f64 {
        let max = self.errors.iter().copied().fold(0.0, f64::max);
        let min = self.errors.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilitySweep {
    pub style: OptionStyle,
    pub ratios: Vec<f64>,
    pub flag_factor: f64,
    pub rows: Vec<SweepRow>,
}

impl StabilitySweep {
    pub fn max_spread(&self) -> f64 {
        self.rows.iter().map(SweepRow::spread).fold(0.0, f64::max)
    }

    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged.iter().any(|&f| f))
    }
}

/// Runs every (N, ratio) pair and measures it against `reference`.
pub fn stability_sweep(
    style: OptionStyle,
    params: &MarketParams,
    config: &SolverConfig,
    intervals: &[usize],
    ratios: &[f64],
    reference: &SolutionSurface,
    exec: Execution,
) -> Result<StabilitySweep> {
    let cells: Vec<(usize, f64)> = intervals
        .iter()
        .flat_map(|&n| ratios.iter().map(move |&r| (n, r)))
        .collect();
    let ref_grid = reference.grid;
    let errors = par::map(exec, &cells, |&(n, ratio)| -> Result<f64> {
        let grid = GridSpec::with_mesh_ratio(ref_grid.half_width(), n, ratio, params.maturity)?;
        let run = solve(style, params, &grid, config)?;
        relative_l2_error(&run.final_slice().values, &grid, &reference.final_slice().values, &ref_grid)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let flag_factor = 2.0;
    let rows = intervals
        .iter()
        .zip(errors.chunks(ratios.len().max(1)))
        .map(|(&n, errs)| {
            let min = errs.iter().copied().fold(f64::INFINITY, f64::min);
            SweepRow {
                intervals: n,
                dx: 2.0 * ref_grid.half_width() / n as f64,
                errors: errs.to_vec(),
                flagged: errs.iter().map(|e| *e > flag_factor * min).collect(),
            }
        })
        .collect();
    Ok(StabilitySweep {
        style,
        ratios: ratios.to_vec(),
        flag_factor,
        rows,
    })
}
