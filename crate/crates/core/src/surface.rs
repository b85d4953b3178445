//! Stored solution levels of a completed run.

use serde::Serialize;

use crate::error::{PricingError, Result};
use crate::grid::{cubic_interpolate, GridSpec, MarketParams, OptionStyle};

/// Which time levels a run keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum SurfaceStorage {
    /// Initial and final levels only.
    #[default]
    FinalOnly,
    /// Every `k`-th level plus the final one.
    Every(usize),
}

impl SurfaceStorage {
    pub(crate) fn keeps(&self, level: usize, last: usize) -> bool {
        match *self {
            SurfaceStorage::FinalOnly => level == 0 || level == last,
            SurfaceStorage::Every(k) => level == last || level.is_multiple_of(k.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSlice {
    pub level: usize,
    pub tau: f64,
    /// All nodes `0..=N`.
    pub values: Vec<f64>,
}

/// Inner-iteration statistics of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverStats {
    /// `iterations[m - 1]` is the number of corrector solves used for level `m`.
    pub iterations: Vec<u32>,
}

impl SolverStats {
    /// Largest per-level iteration count.
    pub fn max_iterations(&self) -> u32 {
        self.iterations.iter().copied().max().unwrap_or(0)
    }

    /// `(iterations, number of levels)` pairs sorted by iteration count.
    pub fn histogram(&self) -> Vec<(u32, usize)> {
        let mut counts = std::collections::BTreeMap::new();
        for &it in &self.iterations {
            *counts.entry(it).or_insert(0usize) += 1;
        }
        counts.into_iter().collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionSurface {
    pub grid: GridSpec,
    pub params: MarketParams,
    pub style: OptionStyle,
    pub smoothed: bool,
    pub slices: Vec<TimeSlice>,
    pub stats: SolverStats,
}

impl SolutionSurface {
    pub fn final_slice(&self) -> &TimeSlice {
        self.slices.last().expect("a surface always holds its final level")
    }

    pub fn slice_at_level(&self, level: usize) -> Option<&TimeSlice> {
        self.slices.iter().find(|s| s.level == level)
    }

    /// Price at spot `s` on the final level (`tau = T`).
    pub fn price_at(&self, s: f64) -> Result<f64> {
        self.price_in(self.final_slice(), s)
    }

    pub fn price_in(&self, slice: &TimeSlice, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(PricingError::NonPositiveSpot(s));
        }
        let x = (s / self.params.spot).ln();
        Ok(cubic_interpolate(&self.grid, &slice.values, x))
    }

    /// Asset prices `S0 e^{x_n}` of the grid nodes.
    pub fn spots(&self) -> Vec<f64> {
        self.grid
            .xs()
            .into_iter()
            .map(|x| self.params.spot * x.exp())
            .collect()
    }
}
