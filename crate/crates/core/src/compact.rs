//! Central differences, the fourth-order compact first derivative and the
//! compact second derivative built from it, plus the discrete differential
//! operator of the pricing equation.
//!
//! Slices passed in hold all nodes `0..=N`; derivative outputs cover either
//! all nodes (first derivative) or the interior nodes `1..N` only.

use crate::error::Result;
use crate::grid::{volatility, GridFunction, GridSpec, MarketParams};
use crate::tridiag::TridiagonalLu;

/// `(u_{i+1} - u_{i-1}) / (2 dx)` at interior nodes.
pub fn delta_x(u: &[f64], dx: f64) -> Vec<f64> {
    let inv = 0.5 / dx;
    u.windows(3).map(|w| (w[2] - w[0]) * inv).collect()
}

/// `(u_{i+1} - 2 u_i + u_{i-1}) / dx^2` at interior nodes.
pub fn delta_xx(u: &[f64], dx: f64) -> Vec<f64> {
    let inv = 1.0 / (dx * dx);
    u.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]) * inv).collect()
}

/// Factored compact first-derivative system for one grid.
///
/// Interior rows: `u'_{i-1}/4 + u'_i + u'_{i+1}/4 = 3 (u_{i+1} - u_{i-1}) / (4 dx)`.
/// Boundary rows use the one-sided closure
/// `u'_0 + 3 u'_1 = (-17/6 u_0 + 3/2 u_1 + 3/2 u_2 - 1/6 u_3) / dx` and its mirror.
#[derive(Debug, Clone)]
pub struct CompactDerivative {
    dx: f64,
    lu: TridiagonalLu,
}

impl CompactDerivative {
    pub fn new(grid: &GridSpec) -> Result<Self> {
        Self::with_nodes(grid.nodes(), grid.dx())
    }

    pub fn with_nodes(nodes: usize, dx: f64) -> Result<Self> {
        let mut sub = vec![0.25; nodes];
        let diag = vec![1.0; nodes];
        let mut sup = vec![0.25; nodes];
        sup[0] = 3.0;
        sub[nodes - 1] = 3.0;
        sub[0] = 0.0;
        sup[nodes - 1] = 0.0;
        let lu = TridiagonalLu::factor(&sub, &diag, &sup)?;
        Ok(Self { dx, lu })
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> usize {
        self.lu.len()
    }

    /// Writes the compact first derivative at every node into `out`.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        debug_assert_eq!(n, self.nodes());
        debug_assert_eq!(out.len(), n);
        let inv = 1.0 / self.dx;
        out[0] = (-17.0 / 6.0 * u[0] + 1.5 * u[1] + 1.5 * u[2] - u[3] / 6.0) * inv;
        let c = 0.75 * inv;
        for i in 1..n - 1 {
            out[i] = c * (u[i + 1] - u[i - 1]);
        }
        out[n - 1] =
            (17.0 / 6.0 * u[n - 1] - 1.5 * u[n - 2] - 1.5 * u[n - 3] + u[n - 4] / 6.0) * inv;
        self.lu.solve_in_place(out);
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, &mut out);
        out
    }
}

/// Compact first derivative at all nodes of `u`.
pub fn compact_first_derivative(u: &GridFunction, grid: &GridSpec) -> Result<Vec<f64>> {
    Ok(CompactDerivative::new(grid)?.apply(u.values()))
}

/// `u_xx = 2 Δxx u - Δx u_x` at interior nodes, with `u_x` the compact first
/// derivative over all nodes.
pub fn compact_second_derivative(u: &[f64], u_x: &[f64], dx: f64) -> Vec<f64> {
    debug_assert_eq!(u.len(), u_x.len());
    let inv_h2 = 1.0 / (dx * dx);
    let inv_2h = 0.5 / dx;
    (1..u.len() - 1)
        .map(|i| 2.0 * (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2 - (u_x[i + 1] - u_x[i - 1]) * inv_2h)
        .collect()
}

/// Compact first and second derivatives of one grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCache {
    /// All nodes.
    pub u_x: Vec<f64>,
    /// Interior nodes.
    pub u_xx: Vec<f64>,
}

impl DerivativeCache {
    pub fn compute(u: &[f64], op: &CompactDerivative) -> Self {
        let u_x = op.apply(u);
        let u_xx = compact_second_derivative(u, &u_x, op.dx());
        Self { u_x, u_xx }
    }
}

/// Nodewise coefficients of the differential operator at one time level,
/// stored for interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorCoefficients {
    /// `sigma^2 / 2`.
    pub diffusion: Vec<f64>,
    /// `r - sigma^2 / 2 - lambda zeta`.
    pub drift: Vec<f64>,
    /// `r + lambda`.
    pub discount: f64,
}

impl OperatorCoefficients {
    pub fn at(params: &MarketParams, grid: &GridSpec, tau: f64, zeta: f64) -> Self {
        let jump_drift = params.lambda * zeta;
        let mut diffusion = Vec::with_capacity(grid.intervals() - 1);
        let mut drift = Vec::with_capacity(grid.intervals() - 1);
        for n in 1..grid.intervals() {
            let s = volatility(grid.x(n), tau, params);
            let a = 0.5 * s * s;
            diffusion.push(a);
            drift.push(params.rate - a - jump_drift);
        }
        Self {
            diffusion,
            drift,
            discount: params.rate + params.lambda,
        }
    }

    /// Constant coefficients on `interior` nodes.
    pub fn constant(interior: usize, sigma: f64, drift: f64, discount: f64) -> Self {
        Self {
            diffusion: vec![0.5 * sigma * sigma; interior],
            drift: vec![drift; interior],
            discount,
        }
    }

    pub fn len(&self) -> usize {
        self.diffusion.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diffusion.is_empty()
    }
}

/// `D u = a (2 Δxx u - Δx u_x) + b u_x - (r + lambda) u` at interior nodes.
pub fn apply_discrete_differential(u: &[f64], u_x: &[f64], dx: f64, coeffs: &OperatorCoefficients) -> Vec<f64> {
    let uxx = compact_second_derivative(u, u_x, dx);
    (0..uxx.len())
        .map(|k| coeffs.diffusion[k] * uxx[k] + coeffs.drift[k] * u_x[k + 1] - coeffs.discount * u[k + 1])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, l: f64) -> GridSpec {
        GridSpec::new(l, n, 2, 1.0).unwrap()
    }

    fn sample(g: &GridSpec, f: impl Fn(f64) -> f64) -> Vec<f64> {
        g.xs().into_iter().map(f).collect()
    }

    fn max_err(a: &[f64], b: impl Iterator<Item = f64>) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn central_differences_low_degree() {
        let g = grid(16, 1.0);
        let c = sample(&g, |_| 3.5);
        assert!(delta_x(&c, g.dx()).iter().all(|v| v.abs() < 1e-13));
        assert!(delta_xx(&c, g.dx()).iter().all(|v| v.abs() < 1e-11));
        let lin = sample(&g, |x| x);
        assert!(delta_x(&lin, g.dx()).iter().all(|v| (v - 1.0).abs() < 1e-12));
        let quad = sample(&g, |x| x * x);
        assert!(delta_xx(&quad, g.dx()).iter().all(|v| (v - 2.0).abs() < 1e-10));
    }

    #[test]
    fn central_difference_second_order() {
        let e = |n: usize| {
            let g = grid(n, 1.0);
            let d = delta_x(&sample(&g, f64::sin), g.dx());
            max_err(&d, (1..n).map(|i| g.x(i).cos()))
        };
        let ratio = e(64) / e(128);
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn compact_first_constant_and_quartic() {
        let g = grid(32, 1.0);
        let op = CompactDerivative::new(&g).unwrap();
        let d = op.apply(&sample(&g, |_| 7.0));
        assert!(d.iter().all(|v| v.abs() < 1e-12));
        for (deg, f, df) in [
            (1, (|x: f64| x) as fn(f64) -> f64, (|_: f64| 1.0) as fn(f64) -> f64),
            (2, |x| x * x, |x| 2.0 * x),
            (3, |x| x * x * x, |x| 3.0 * x * x),
            (4, |x| x.powi(4), |x| 4.0 * x.powi(3)),
        ] {
            let d = op.apply(&sample(&g, f));
            for (i, v) in d.iter().enumerate() {
                let exact = df(g.x(i));
                assert!(
                    (v - exact).abs() <= 1e-11 * exact.abs().max(1.0),
                    "degree {deg} node {i}: {v} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn compact_first_fourth_order() {
        let e = |n: usize| {
            let g = grid(n, 1.0);
            let d = CompactDerivative::new(&g).unwrap().apply(&sample(&g, f64::exp));
            max_err(&d[1..n], (1..n).map(|i| g.x(i).exp()))
        };
        let ratio = e(64) / e(128);
        assert!((ratio - 16.0).abs() < 0.15 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn compact_second_examples() {
        let g = grid(32, 1.5);
        let op = CompactDerivative::new(&g).unwrap();
        let q = sample(&g, |x| x * x);
        let d2 = compact_second_derivative(&q, &op.apply(&q), g.dx());
        assert!(d2.iter().all(|v| (v - 2.0).abs() < 1e-9));
        let c = sample(&g, |_| -2.0);
        let d2 = compact_second_derivative(&c, &op.apply(&c), g.dx());
        assert!(d2.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn compact_second_fourth_order() {
        let e = |n: usize| {
            let g = grid(n, 1.0);
            let u = sample(&g, f64::sin);
            let d2 = compact_second_derivative(&u, &CompactDerivative::new(&g).unwrap().apply(&u), g.dx());
            // the one-sided closure is third order; measure away from it
            let (lo, hi) = (n / 4, 3 * n / 4);
            max_err(&d2[lo - 1..hi], (lo..=hi).map(|i| -g.x(i).sin()))
        };
        let ratio = e(64) / e(128);
        assert!((ratio - 16.0).abs() < 0.15 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn discrete_differential_constant_and_zero() {
        let p = MarketParams::reference();
        let g = grid(32, 2.0);
        let op = CompactDerivative::new(&g).unwrap();
        let coeffs = OperatorCoefficients::at(&p, &g, 0.1, -0.55);
        let z = vec![0.0; g.nodes()];
        assert!(apply_discrete_differential(&z, &op.apply(&z), g.dx(), &coeffs)
            .iter()
            .all(|&v| v == 0.0));
        let c = vec![4.0; g.nodes()];
        for v in apply_discrete_differential(&c, &op.apply(&c), g.dx(), &coeffs) {
            assert!((v + (p.rate + p.lambda) * 4.0).abs() < 1e-10);
        }
    }
}
