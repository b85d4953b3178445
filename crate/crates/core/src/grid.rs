//! Market parameters, the log-price lattice and the put-specific data on it.
//!
//! Prices are solved in the variables `x = ln(S / S0)` and `tau = T - t` on the
//! truncated interval `[-L, L]`.

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};

/// How the diffusion coefficient is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VolMode {
    #[default]
    Constant,
    /// `sigma(x, tau)` from [`local_volatility`].
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionStyle {
    European,
    American,
}

/// Market and jump parameters of the Merton model.
///
/// Serialized field names follow the usual notation (`r`, `sigma`, `lambda`,
/// `mu_J`, `sigma_J`, `K`, `S0`, `T`) so configuration files read naturally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    #[serde(rename = "r")]
    pub rate: f64,
    pub sigma: f64,
    pub lambda: f64,
    #[serde(rename = "mu_J")]
    pub jump_mean: f64,
    #[serde(rename = "sigma_J")]
    pub jump_std: f64,
    #[serde(rename = "K")]
    pub strike: f64,
    #[serde(rename = "S0")]
    pub spot: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    #[serde(default)]
    pub vol_mode: VolMode,
}

impl MarketParams {
    /// Reference parameter set used throughout the test-suite and the CLI defaults.
    pub fn reference() -> Self {
        Self {
            rate: 0.05,
            sigma: 0.15,
            lambda: 0.10,
            jump_mean: -0.90,
            jump_std: 0.45,
            strike: 100.0,
            spot: 100.0,
            maturity: 0.25,
            vol_mode: VolMode::Constant,
        }
    }

    pub fn with_vol_mode(mut self, mode: VolMode) -> Self {
        self.vol_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(PricingError::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        }
        positive("sigma", self.sigma)?;
        positive("sigma_J", self.jump_std)?;
        positive("T", self.maturity)?;
        positive("K", self.strike)?;
        positive("S0", self.spot)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(PricingError::InvalidParameter {
                name: "lambda",
                reason: format!("must be non-negative, got {}", self.lambda),
            });
        }
        if !self.rate.is_finite() || !self.jump_mean.is_finite() {
            return Err(PricingError::InvalidParameter {
                name: "r/mu_J",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    /// Log-moneyness of the strike, where the payoff has its kink.
    pub fn kink(&self) -> f64 {
        (self.strike / self.spot).ln()
    }
}

/// Uniform lattice `x_n = -L + n dx`, `tau_m = m dtau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    #[serde(rename = "L")]
    half_width: f64,
    #[serde(rename = "N")]
    intervals: usize,
    #[serde(rename = "M")]
    steps: usize,
    #[serde(rename = "T")]
    maturity: f64,
}

impl GridSpec {
    pub fn new(half_width: f64, intervals: usize, steps: usize, maturity: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(PricingError::InvalidParameter {
                name: "L",
                reason: format!("must be positive, got {half_width}"),
            });
        }
        if intervals < 8 || !intervals.is_multiple_of(2) {
            return Err(PricingError::InvalidIntervalCount(intervals));
        }
        if steps < 2 {
            return Err(PricingError::InvalidStepCount(steps));
        }
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(PricingError::InvalidParameter {
                name: "T",
                reason: format!("must be positive, got {maturity}"),
            });
        }
        Ok(Self {
            half_width,
            intervals,
            steps,
            maturity,
        })
    }

    /// Picks `M = ceil(T / (ratio dx^2))` so the realised mesh ratio does not exceed `ratio`.
    pub fn with_mesh_ratio(half_width: f64, intervals: usize, ratio: f64, maturity: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(PricingError::InvalidParameter {
                name: "ratio",
                reason: format!("must be positive, got {ratio}"),
            });
        }
        let dx = 2.0 * half_width / intervals as f64;
        let steps = (maturity / (ratio * dx * dx)).ceil().max(2.0) as usize;
        Self::new(half_width, intervals, steps, maturity)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Number of spatial intervals `N`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of time steps `M`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    /// Node count including both boundaries (`N + 1`).
    pub fn nodes(&self) -> usize {
        self.intervals + 1
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.intervals as f64
    }

    pub fn dtau(&self) -> f64 {
        self.maturity / self.steps as f64
    }

    pub fn mesh_ratio(&self) -> f64 {
        self.dtau() / (self.dx() * self.dx())
    }

    pub fn x(&self, n: usize) -> f64 {
        -self.half_width + n as f64 * self.dx()
    }

    pub fn tau(&self, m: usize) -> f64 {
        if m == self.steps {
            self.maturity
        } else {
            m as f64 * self.dtau()
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nodes()).map(|n| self.x(n)).collect()
    }
}

/// Nodal values at one time level, boundaries included (`values[0]` is `x_0`,
/// `values[N]` is `x_N`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes() {
            return Err(PricingError::DimensionMismatch(format!(
                "grid function has {} values, grid has {} nodes",
                values.len(),
                grid.nodes()
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            values: vec![0.0; grid.nodes()],
        }
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: grid.xs().into_iter().map(f).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    pub fn left(&self) -> f64 {
        self.values[0]
    }

    pub fn right(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn set_boundaries(&mut self, (left, right): (f64, f64)) {
        let last = self.values.len() - 1;
        self.values[0] = left;
        self.values[last] = right;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `(S, t) -> (x, tau)` with `x = ln(S / S0)` and `tau = T - t`.
pub fn log_transform(spot_price: f64, time: f64, params: &MarketParams) -> Result<(f64, f64)> {
    if !(spot_price > 0.0) {
        return Err(PricingError::NonPositiveSpot(spot_price));
    }
    Ok(((spot_price / params.spot).ln(), params.maturity - time))
}

/// Inverse of [`log_transform`].
pub fn inverse_log_transform(x: f64, tau: f64, params: &MarketParams) -> (f64, f64) {
    (params.spot * x.exp(), params.maturity - tau)
}

/// Put payoff `max(K - S0 e^x, 0)`; the same for both exercise styles.
pub fn payoff(x: f64, params: &MarketParams) -> f64 {
    (params.strike - params.spot * x.exp()).max(0.0)
}

/// Dirichlet data at `x = -L` and `x = L`.
pub fn boundary_values(tau: f64, style: OptionStyle, params: &MarketParams, half_width: f64) -> (f64, f64) {
    let intrinsic_part = params.spot * (-half_width).exp();
    let left = match style {
        OptionStyle::European => params.strike * (-params.rate * tau).exp() - intrinsic_part,
        OptionStyle::American => params.strike - intrinsic_part,
    };
    (left, 0.0)
}

/// Rational factor of the local-volatility surface; bounded by 1 over the
/// positive half-line.
fn local_vol_shape(x: f64, params: &MarketParams) -> f64 {
    let s = params.spot * x.exp() / 100.0;
    (s - 1.2).powi(2) / (s * s + 1.44)
}

/// `sigma(x, tau) = 0.15 + 0.15 (0.5 + 2 (T - tau)) ((s - 1.2)^2 / (s^2 + 1.44))`
/// with `s = S0 e^x / 100`.
pub fn local_volatility(x: f64, tau: f64, params: &MarketParams) -> f64 {
    0.15 + 0.15 * (0.5 + 2.0 * (params.maturity - tau)) * local_vol_shape(x, params)
}

/// Diffusion coefficient under the parameter set's volatility mode.
pub fn volatility(x: f64, tau: f64, params: &MarketParams) -> f64 {
    match params.vol_mode {
        VolMode::Constant => params.sigma,
        VolMode::Local => local_volatility(x, tau, params),
    }
}

/// Upper bound of the local volatility over the nodes of `grid`, valid for
/// every `tau` in `[0, T]`.
pub fn local_volatility_bound(grid: &GridSpec, params: &MarketParams) -> f64 {
    let sup = grid
        .xs()
        .into_iter()
        .map(|x| local_vol_shape(x, params))
        .fold(0.0_f64, f64::max);
    0.15 + 0.15 * (0.5 + 2.0 * params.maturity) * sup
}

/// Four-point Lagrange interpolation of nodal values at an arbitrary `x`.
///
/// Uses the stencil `x_{j-1}..x_{j+2}` around the containing cell, shifted
/// inwards at the edges. Points outside `[-L, L]` are extrapolated.
pub fn cubic_interpolate(grid: &GridSpec, values: &[f64], x: f64) -> f64 {
    debug_assert_eq!(values.len(), grid.nodes());
    let dx = grid.dx();
    let s = (x + grid.half_width()) / dx;
    let cell = s.floor().max(0.0) as usize;
    let start = cell.saturating_sub(1).min(grid.nodes() - 4);
    let t = s - start as f64;
    let mut acc = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if i != j {
                w *= (t - j as f64) / (i as f64 - j as f64);
            }
        }
        acc += w * values[start + i];
    }
    acc
}
