//! Modified wavenumbers of the difference stencils.
//!
//! For a Fourier mode `e^{i w s}` an exact first derivative multiplies by
//! `i w` and an exact second derivative by `-w^2`; a stencil replaces `w` by
//! `w'` and `w^2` by `w''`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{PricingError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Three-point central differences.
    Fd2,
    /// Five-point central differences.
    Fd4,
    /// Compact first derivative with the tridiagonal Padé second derivative.
    CompactPade,
    /// Compact first derivative with `u_xx = 2 Δxx u - Δx u_x`.
    Compact,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Fd2, Scheme::Fd4, Scheme::CompactPade, Scheme::Compact];

    pub fn id(&self) -> &'static str {
        match self {
            Scheme::Fd2 => "fd2",
            Scheme::Fd4 => "fd4",
            Scheme::CompactPade => "compact-pade",
            Scheme::Compact => "compact",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.id() == s)
            .ok_or_else(|| PricingError::UnknownScheme(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModifiedWavenumber {
    /// Central stencils have no imaginary part.
    pub first: Complex64,
    pub second: f64,
}

/// `(w', w'')` of `scheme` at `omega` in `[0, pi]`.
pub fn modified_wavenumber(scheme: Scheme, omega: f64) -> Result<ModifiedWavenumber> {
    if !(0.0..=std::f64::consts::PI).contains(&omega) {
        return Err(PricingError::InvalidParameter {
            name: "omega",
            reason: format!("must lie in [0, pi], got {omega}"),
        });
    }
    let (s, c) = omega.sin_cos();
    let compact_first = 3.0 * s / (2.0 + c);
    let (first, second) = match scheme {
        Scheme::Fd2 => (s, 2.0 - 2.0 * c),
        Scheme::Fd4 => (
            4.0 * s / 3.0 - (2.0 * omega).sin() / 6.0,
            (2.0 * omega).cos() / 6.0 - 8.0 * c / 3.0 + 2.5,
        ),
        Scheme::CompactPade => (compact_first, 12.0 * (1.0 - c) / (2.0 + c)),
        Scheme::Compact => (compact_first, (5.0 - 4.0 * c - c * c) / (2.0 + c)),
    };
    Ok(ModifiedWavenumber {
        first: Complex64::new(first, 0.0),
        second,
    })
}

/// One row of the dispersion table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionRow {
    pub omega: f64,
    pub scheme: Scheme,
    pub first: f64,
    pub second: f64,
}

/// `w'` and `w''` of every scheme at `points` equally spaced `omega` in `[0, pi]`.
pub fn dispersion_table(points: usize) -> Vec<DispersionRow> {
    let points = points.max(2);
    let mut rows = Vec::with_capacity(points * Scheme::ALL.len());
    for k in 0..points {
        let omega = std::f64::consts::PI * k as f64 / (points - 1) as f64;
        for scheme in Scheme::ALL {
            let mw = modified_wavenumber(scheme, omega).expect("omega within range");
            rows.push(DispersionRow {
                omega,
                scheme,
                first: mw.first.re,
                second: mw.second,
            });
        }
    }
    rows
}
