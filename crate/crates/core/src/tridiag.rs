//! Tridiagonal systems solved by Thomas elimination (no pivoting).

use crate::error::{PricingError, Result};

/// Relative pivot threshold below which elimination is aborted.
const PIVOT_TOLERANCE: f64 = 1e-14;

/// Diagonal-dominance classification of a tridiagonal matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    Strict,
    /// Weakly dominant in every row and strictly in at least one, with all
    /// off-diagonal couplings non-zero.
    Irreducible,
    None,
}

/// `A x = rhs` with `A` given by its three diagonals.
///
/// `sub[i]` couples row `i` to column `i - 1` (`sub[0]` is ignored) and
/// `sup[i]` couples row `i` to column `i + 1` (`sup[n - 1]` is ignored), so
/// all four vectors have the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() != n || sup.len() != n || rhs.len() != n {
            return Err(PricingError::DimensionMismatch(format!(
                "tridiagonal lengths sub={}, diag={}, sup={}, rhs={}",
                sub.len(),
                n,
                sup.len(),
                rhs.len()
            )));
        }
        Ok(Self { sub, diag, sup, rhs })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn dominance(&self) -> Dominance {
        dominance(&self.sub, &self.diag, &self.sup)
    }

    /// `A v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc += self.sub[i] * v[i - 1];
                }
                if i + 1 < n {
                    acc += self.sup[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        if self.dominance() == Dominance::None {
            tracing::debug!(n = self.len(), "tridiagonal system is not diagonally dominant");
        }
        let lu = TridiagonalLu::factor(&self.sub, &self.diag, &self.sup)?;
        let mut x = self.rhs.clone();
        lu.solve_in_place(&mut x);
        Ok(x)
    }
}

pub fn solve_tridiagonal(system: &TridiagonalSystem) -> Result<Vec<f64>> {
    system.solve()
}

fn dominance(sub: &[f64], diag: &[f64], sup: &[f64]) -> Dominance {
    let n = diag.len();
    let mut strict_everywhere = true;
    let mut strict_somewhere = false;
    let mut connected = true;
    for i in 0..n {
        let lo = if i > 0 { sub[i].abs() } else { 0.0 };
        let hi = if i + 1 < n { sup[i].abs() } else { 0.0 };
        let d = diag[i].abs();
        if d < lo + hi {
            return Dominance::None;
        }
        if d > lo + hi {
            strict_somewhere = true;
        } else {
            strict_everywhere = false;
        }
        if (i > 0 && sub[i] == 0.0) || (i + 1 < n && sup[i] == 0.0) {
            connected = false;
        }
    }
    if strict_everywhere {
        Dominance::Strict
    } else if strict_somewhere && connected {
        Dominance::Irreducible
    } else {
        Dominance::None
    }
}

/// Precomputed Thomas factorisation for repeated solves with one matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    sub: Vec<f64>,
    /// Reciprocal pivots.
    inv_pivot: Vec<f64>,
    /// Normalised super-diagonal `sup[i] / pivot[i]`.
    upper: Vec<f64>,
}

impl TridiagonalLu {
    pub fn factor(sub: &[f64], diag: &[f64], sup: &[f64]) -> Result<Self> {
        let n = diag.len();
        if sub.len() != n || sup.len() != n || n == 0 {
            return Err(PricingError::DimensionMismatch(format!(
                "tridiagonal lengths sub={}, diag={}, sup={}",
                sub.len(),
                n,
                sup.len()
            )));
        }
        let mut inv_pivot = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut prev_upper = 0.0;
        for i in 0..n {
            let lo = if i > 0 { sub[i] } else { 0.0 };
            let hi = if i + 1 < n { sup[i] } else { 0.0 };
            let pivot = diag[i] - lo * prev_upper;
            let scale = diag[i].abs().max(lo.abs()).max(hi.abs());
            if !(pivot.abs() > PIVOT_TOLERANCE * scale) {
                return Err(PricingError::SingularSystem {
                    row: i,
                    pivot,
                    scale,
                });
            }
            inv_pivot[i] = 1.0 / pivot;
            upper[i] = hi * inv_pivot[i];
            prev_upper = upper[i];
        }
        Ok(Self {
            sub: sub.to_vec(),
            inv_pivot,
            upper,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.sub[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }
}
