//! Delta and Gamma from a solution level.
//!
//! With `u(x) = V(S0 e^x)` the chain rule gives `V_S = u_x / S` and
//! `V_SS = (u_xx - u_x) / S^2`; `u_x` and `u_xx` are the compact derivatives.

use serde::Serialize;

use crate::compact::{compact_second_derivative, CompactDerivative};
use crate::error::{PricingError, Result};
use crate::grid::{cubic_interpolate, GridSpec, MarketParams};

/// Nodal sensitivities on one time level; all vectors cover nodes `0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreeksSlice {
    pub grid: GridSpec,
    /// `S0`, the spot at `x = 0`.
    pub spot: f64,
    pub spots: Vec<f64>,
    pub delta: Vec<f64>,
    /// At the two end nodes this is extrapolated from the interior.
    pub gamma: Vec<f64>,
}

impl GreeksSlice {
    fn x_of(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(PricingError::NonPositiveSpot(s));
        }
        Ok((s / self.spot).ln())
    }

    /// Delta at an arbitrary spot by cubic interpolation.
    pub fn delta_at(&self, s: f64) -> Result<f64> {
        let x = self.x_of(s)?;
        Ok(cubic_interpolate(&self.grid, &self.delta, x))
    }

    /// Gamma at an arbitrary spot by cubic interpolation.
    pub fn gamma_at(&self, s: f64) -> Result<f64> {
        let x = self.x_of(s)?;
        Ok(cubic_interpolate(&self.grid, &self.gamma, x))
    }
}

/// Delta and Gamma of the nodal values `u` (all nodes, boundaries included).
pub fn compute_greeks(u: &[f64], grid: &GridSpec, params: &MarketParams) -> Result<GreeksSlice> {
    if u.len() != grid.nodes() {
        return Err(PricingError::DimensionMismatch(format!(
            "slice has {} values, grid has {} nodes",
            u.len(),
            grid.nodes()
        )));
    }
    let op = CompactDerivative::new(grid)?;
    let u_x = op.apply(u);
    let interior = compact_second_derivative(u, &u_x, grid.dx());
    let n = grid.intervals();
    let mut u_xx = vec![0.0; n + 1];
    u_xx[1..n].copy_from_slice(&interior);
    u_xx[0] = 3.0 * u_xx[1] - 3.0 * u_xx[2] + u_xx[3];
    u_xx[n] = 3.0 * u_xx[n - 1] - 3.0 * u_xx[n - 2] + u_xx[n - 3];

    let spots: Vec<f64> = grid.xs().into_iter().map(|x| params.spot * x.exp()).collect();
    let delta = u_x.iter().zip(&spots).map(|(d, s)| d / s).collect();
    let gamma = u_xx
        .iter()
        .zip(&u_x)
        .zip(&spots)
        .map(|((dd, d), s)| (dd - d) / (s * s))
        .collect();
    Ok(GreeksSlice {
        grid: *grid,
        spot: params.spot,
        spots,
        delta,
        gamma,
    })
}
