//! Fourth-order smoothing of non-smooth initial data.
//!
//! The mollifier has Fourier transform
//! `(sin(w/2) / (w/2))^4 (1 + 2/3 sin^2(w/2))`. Writing
//! `2/3 sin^2(w/2) = (2 - e^{iw} - e^{-iw}) / 6` gives the physical-space form
//! `phi(s) = 4/3 B(s) - 1/6 (B(s - 1) + B(s + 1))` with `B` the centred cubic
//! B-spline, supported on `[-3, 3]`.

use crate::grid::{GridFunction, GridSpec};

/// Centred cubic B-spline, the inverse transform of `(sin(w/2) / (w/2))^4`.
pub fn cubic_bspline(s: f64) -> f64 {
    let a = s.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        let t = 2.0 - a;
        t * t * t / 6.0
    } else {
        0.0
    }
}

/// The smoothing kernel in physical space.
pub fn phi4(s: f64) -> f64 {
    4.0 / 3.0 * cubic_bspline(s) - (cubic_bspline(s - 1.0) + cubic_bspline(s + 1.0)) / 6.0
}

/// Its Fourier transform.
pub fn phi4_hat(omega: f64) -> f64 {
    let h = 0.5 * omega;
    let sinc = if h.abs() < 1e-8 { 1.0 - h * h / 6.0 } else { h.sin() / h };
    let s = h.sin();
    sinc.powi(4) * (1.0 + 2.0 / 3.0 * s * s)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(points: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; points];
    let mut weights = vec![0.0; points];
    let n = points as f64;
    for i in 0..points.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=points {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[points - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[points - 1 - i] = w;
    }
    (nodes, weights)
}

/// Applies the mollifier at a single point:
/// `int_{-3}^{3} phi(s) u0(x - s dx) ds`.
///
/// `breakpoints` lists the `x`-locations where `u0` is not smooth; the
/// integral is split there and at the knots of `phi` so each panel is
/// integrated by an 8-point Gauss rule.
pub fn smooth_at(u0: &dyn Fn(f64) -> f64, x: f64, dx: f64, breakpoints: &[f64]) -> f64 {
    let (gx, gw) = gauss_legendre(8);
    let mut cuts: Vec<f64> = (-3..=3).map(f64::from).collect();
    for &b in breakpoints {
        let s = (x - b) / dx;
        if s > -3.0 && s < 3.0 {
            cuts.push(s);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (t, wt) in gx.iter().zip(&gw) {
            let s = mid + half * t;
            acc += wt * half * phi4(s) * u0(x - s * dx);
        }
    }
    acc
}

/// Smoothed nodal values of `u0`.
///
/// With `kinks = Some(..)` only nodes within `3 dx` of a kink are mollified;
/// elsewhere the payoff is sampled directly. `None` mollifies every node.
pub fn smooth_initial_condition(
    u0: &dyn Fn(f64) -> f64,
    grid: &GridSpec,
    kinks: Option<&[f64]>,
) -> GridFunction {
    let dx = grid.dx();
    let breakpoints = kinks.unwrap_or(&[]);
    GridFunction::from_fn(grid, |x| {
        let near = match kinks {
            None => true,
            Some(ks) => ks.iter().any(|k| (x - k).abs() < 3.0 * dx),
        };
        if near {
            smooth_at(u0, x, dx, breakpoints)
        } else {
            u0(x)
        }
    })
}
