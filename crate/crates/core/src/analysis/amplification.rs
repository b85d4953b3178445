//! Von Neumann analysis of the three-level scheme.
//!
//! A mode `p^m e^{i theta n}` satisfies `gamma0 p^2 - 2 gamma1 p - gamma2 = 0`
//! with `gamma0 = 1 - dtau D`, `gamma1 = lambda dtau G(theta)`,
//! `gamma2 = 1 + dtau D`, where `D` is the symbol of the differential operator
//! and `G` that of the Simpson-weighted jump kernel.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{PricingError, Result};
use crate::grid::{GridSpec, MarketParams, VolMode};
use crate::jump::MertonKernel;

/// Symbol of the compact differential operator with frozen coefficients.
pub fn differential_symbol(theta: f64, dx: f64, sigma: f64, params: &MarketParams, zeta: f64) -> Complex64 {
    let a = 0.5 * sigma * sigma;
    let b = params.rate - a - params.lambda * zeta;
    let (s, c) = theta.sin_cos();
    let re = a * (c * c + 4.0 * c - 5.0) / (dx * dx * (2.0 + c)) - (params.rate + params.lambda);
    let im = b * 3.0 * s / (dx * (2.0 + c));
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplificationEntry {
    pub theta: f64,
    pub p1: Complex64,
    pub p2: Complex64,
    /// `1 + 2 lambda dtau`.
    pub bound: f64,
    /// `|gamma2 / gamma0|^{1/2} + 2 |gamma1 / gamma0|`.
    pub triangle_bound: f64,
}

impl AmplificationEntry {
    pub fn max_modulus(&self) -> f64 {
        self.p1.norm().max(self.p2.norm())
    }

    pub fn separation(&self) -> f64 {
        (self.p1 - self.p2).norm()
    }

    pub fn within_bound(&self) -> bool {
        self.max_modulus() <= self.bound * (1.0 + 1e-12)
    }

    /// Root separation is only required once a root leaves the unit disc.
    pub fn separated(&self) -> bool {
        self.max_modulus() <= 1.0 || self.separation() >= 1.0
    }
}

/// Roots of the amplification polynomial at `theta` for a frozen `sigma`.
pub fn amplification_entry(
    theta: f64,
    grid: &GridSpec,
    params: &MarketParams,
    sigma: f64,
    kernel: &MertonKernel,
) -> Result<AmplificationEntry> {
    let dt = grid.dtau();
    let d = differential_symbol(theta, grid.dx(), sigma, params, kernel.zeta());
    let gamma0 = 1.0 - dt * d;
    let gamma1 = params.lambda * dt * kernel.quadrature_symbol(theta);
    let gamma2 = 1.0 + dt * d;
    if gamma0.norm() < 1e-300 {
        return Err(PricingError::VanishingLeadingCoefficient(theta));
    }
    let root = (gamma1 * gamma1 + gamma0 * gamma2).sqrt();
    Ok(AmplificationEntry {
        theta,
        p1: (gamma1 + root) / gamma0,
        p2: (gamma1 - root) / gamma0,
        bound: 1.0 + 2.0 * params.lambda * dt,
        triangle_bound: (gamma2 / gamma0).norm().sqrt() + 2.0 * (gamma1 / gamma0).norm(),
    })
}

/// Roots at `theta` for constant volatility.
pub fn amplification_roots(theta: f64, grid: &GridSpec, params: &MarketParams) -> Result<AmplificationEntry> {
    if params.vol_mode != VolMode::Constant {
        return Err(PricingError::InvalidParameter {
            name: "vol_mode",
            reason: "root analysis needs constant volatility; use a frozen-coefficient sweep".into(),
        });
    }
    amplification_entry(theta, grid, params, params.sigma, &MertonKernel::new(params, grid))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplificationReport {
    pub intervals: usize,
    pub dx: f64,
    pub dtau: f64,
    pub sigma: f64,
    pub bound: f64,
    pub entries: Vec<AmplificationEntry>,
    /// Indices of entries whose roots exceed the bound or are not separated.
    pub violations: Vec<usize>,
}

impl AmplificationReport {
    pub fn max_modulus(&self) -> f64 {
        self.entries.iter().map(|e| e.max_modulus()).fold(0.0, f64::max)
    }

    pub fn min_separation(&self) -> f64 {
        self.entries.iter().map(|e| e.separation()).fold(f64::INFINITY, f64::min)
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Roots at `count` equally spaced `theta` in `[-pi, pi)` for a frozen `sigma`.
pub fn amplification_sweep(grid: &GridSpec, params: &MarketParams, sigma: f64, count: usize) -> Result<AmplificationReport> {
    let kernel = MertonKernel::new(params, grid);
    let entries = (0..count)
        .map(|k| {
            let theta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            amplification_entry(theta, grid, params, sigma, &kernel)
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| !(e.within_bound() && e.separated()))
        .map(|(i, _)| i)
        .collect();
    Ok(AmplificationReport {
        intervals: grid.intervals(),
        dx: grid.dx(),
        dtau: grid.dtau(),
        sigma,
        bound: 1.0 + 2.0 * params.lambda * grid.dtau(),
        entries,
        violations,
    })
}
