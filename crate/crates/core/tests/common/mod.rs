//! Dense reference implementations shared by the integration tests.
#![allow(dead_code)]

use merton_cfd::grid::{boundary_values, payoff, volatility};
use merton_cfd::jump::tail_correction;
use merton_cfd::{GridSpec, MarketParams, OptionStyle};

pub type Matrix = Vec<Vec<f64>>;

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Matrix, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

pub fn mat_vec(a: &Matrix, v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// Compact first-derivative matrix over all `n` nodes, formed by solving the
/// dense implicit relation column by column.
pub fn dense_compact_derivative(n: usize, dx: f64) -> Matrix {
    let mut lhs = vec![vec![0.0; n]; n];
    let mut rhs = vec![vec![0.0; n]; n];
    lhs[0][0] = 1.0;
    lhs[0][1] = 3.0;
    rhs[0][0] = -17.0 / 6.0 / dx;
    rhs[0][1] = 1.5 / dx;
    rhs[0][2] = 1.5 / dx;
    rhs[0][3] = -1.0 / 6.0 / dx;
    for i in 1..n - 1 {
        lhs[i][i - 1] = 0.25;
        lhs[i][i] = 1.0;
        lhs[i][i + 1] = 0.25;
        rhs[i][i - 1] = -0.75 / dx;
        rhs[i][i + 1] = 0.75 / dx;
    }
    lhs[n - 1][n - 1] = 1.0;
    lhs[n - 1][n - 2] = 3.0;
    rhs[n - 1][n - 1] = 17.0 / 6.0 / dx;
    rhs[n - 1][n - 2] = -1.5 / dx;
    rhs[n - 1][n - 3] = -1.5 / dx;
    rhs[n - 1][n - 4] = 1.0 / 6.0 / dx;
    let mut d = vec![vec![0.0; n]; n];
    for col in 0..n {
        let b: Vec<f64> = (0..n).map(|i| rhs[i][col]).collect();
        let c = dense_solve(lhs.clone(), b);
        for i in 0..n {
            d[i][col] = c[i];
        }
    }
    d
}

pub fn zeta(p: &MarketParams) -> f64 {
    (p.jump_mean + 0.5 * p.jump_std * p.jump_std).exp() - 1.0
}

pub fn density(y: f64, p: &MarketParams) -> f64 {
    let z = (y - p.jump_mean) / p.jump_std;
    (-0.5 * z * z).exp() / (p.jump_std * (2.0 * std::f64::consts::PI).sqrt())
}

/// Differential operator as a dense map from all nodes to interior nodes at `tau`.
pub fn dense_differential(g: &GridSpec, p: &MarketParams, tau: f64) -> Matrix {
    let n = g.nodes();
    let dx = g.dx();
    let d1 = dense_compact_derivative(n, dx);
    let z = zeta(p);
    let mut out = vec![vec![0.0; n]; n - 2];
    for (k, row) in out.iter_mut().enumerate() {
        let i = k + 1;
        let s = volatility(g.x(i), tau, p);
        let a = 0.5 * s * s;
        let b = p.rate - a - p.lambda * z;
        for j in 0..n {
            // a (2 Δxx - Δx D1) + b D1 - (r + lambda) I
            let mut v = b * d1[i][j] - a * (d1[i + 1][j] - d1[i - 1][j]) / (2.0 * dx);
            if j + 1 == i || j == i + 1 {
                v += 2.0 * a / (dx * dx);
            }
            if j == i {
                v -= 4.0 * a / (dx * dx) + p.rate + p.lambda;
            }
            row[j] = v;
        }
    }
    out
}

/// Jump integral at interior nodes by direct Simpson summation plus the tail.
pub fn direct_integral(g: &GridSpec, p: &MarketParams, u: &[f64], tau: f64, style: OptionStyle) -> Vec<f64> {
    let n = g.intervals();
    let dx = g.dx();
    (1..n)
        .map(|i| {
            let mut acc = 0.0;
            for k in 0..=n {
                let w = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * dx / 3.0 * u[k] * density(g.x(k) - g.x(i), p);
            }
            p.lambda * (acc + tail_correction(g.x(i), tau, g.half_width(), style, p))
        })
        .collect()
}

/// Solves `(I - c D) U = rhs` for the interior with Dirichlet data at `tau`,
/// where `D` is the dense differential operator at `tau`.
pub fn dense_implicit_solve(g: &GridSpec, p: &MarketParams, tau: f64, c: f64, rhs: &[f64], style: OptionStyle) -> Vec<f64> {
    let n = g.intervals();
    let d = dense_differential(g, p, tau);
    let (l, r) = boundary_values(tau, style, p, g.half_width());
    let mut a = vec![vec![0.0; n - 1]; n - 1];
    let mut b = rhs.to_vec();
    for k in 0..n - 1 {
        for j in 0..n - 1 {
            a[k][j] = -c * d[k][j + 1];
        }
        a[k][k] += 1.0;
        b[k] += c * (d[k][0] * l + d[k][n] * r);
    }
    let mut u = vec![l];
    u.extend(dense_solve(a, b));
    u.push(r);
    u
}

/// The same system as a dense matrix and right-hand side over the interior.
pub fn dense_implicit_system(g: &GridSpec, p: &MarketParams, tau: f64, c: f64, rhs: &[f64], style: OptionStyle) -> (Matrix, Vec<f64>) {
    let n = g.intervals();
    let d = dense_differential(g, p, tau);
    let (l, r) = boundary_values(tau, style, p, g.half_width());
    let mut a = vec![vec![0.0; n - 1]; n - 1];
    let mut b = rhs.to_vec();
    for k in 0..n - 1 {
        for j in 0..n - 1 {
            a[k][j] = -c * d[k][j + 1];
        }
        a[k][k] += 1.0;
        b[k] += c * (d[k][0] * l + d[k][n] * r);
    }
    (a, b)
}

pub fn interior_payoff(g: &GridSpec, p: &MarketParams) -> Vec<f64> {
    (1..g.intervals()).map(|i| payoff(g.x(i), p)).collect()
}

/// Projected Gauss-Seidel for `U >= f`, `A U - b >= 0`, complementarity.
pub fn projected_gauss_seidel(a: &Matrix, b: &[f64], f: &[f64], start: &[f64], tol: f64) -> Vec<f64> {
    let n = b.len();
    let mut u = start.to_vec();
    for _ in 0..100_000 {
        let mut change = 0.0_f64;
        for i in 0..n {
            let s: f64 = (0..n).filter(|&j| j != i).map(|j| a[i][j] * u[j]).sum();
            let v = ((b[i] - s) / a[i][i]).max(f[i]);
            change = change.max((v - u[i]).abs());
            u[i] = v;
        }
        if change < tol {
            return u;
        }
    }
    panic!("projected Gauss-Seidel did not converge");
}

pub fn norm_cdf(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    if z.abs() < 3.0 {
        0.5 * (1.0 + erf_series(z))
    } else if z > 0.0 {
        1.0 - 0.5 * erfc_fraction(z)
    } else {
        0.5 * erfc_fraction(-z)
    }
}

/// Maclaurin series of erf.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let (mut term, mut sum) = (x, x);
    for k in 1..200 {
        let k = k as f64;
        term *= -x2 / k;
        let add = term / (2.0 * k + 1.0);
        sum += add;
        if add.abs() < 1e-17 {
            break;
        }
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

/// Continued fraction of erfc for x >= 3, evaluated from the tail.
fn erfc_fraction(x: f64) -> f64 {
    let mut f = x;
    for k in (1..80).rev() {
        f = x + (k as f64 / 2.0) / f;
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

/// Black-Scholes European put.
pub fn black_scholes_put(s: f64, k: f64, r: f64, sigma: f64, t: f64) -> f64 {
    let d1 = ((s / k).ln() + (r + 0.5 * sigma * sigma) * t) / (sigma * t.sqrt());
    let d2 = d1 - sigma * t.sqrt();
    k * (-r * t).exp() * norm_cdf(-d2) - s * norm_cdf(-d1)
}
