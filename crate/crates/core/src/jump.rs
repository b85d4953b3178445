//! Merton jump kernel: Simpson quadrature of the jump integral on `[-L, L]`,
//! its Toeplitz product evaluated through a circulant FFT embedding, and the
//! closed-form contribution of the exterior `R \ (-L, L)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{GridSpec, MarketParams, OptionStyle};

/// `exp(mu_J + sigma_J^2 / 2) - 1`, the jump compensator.
pub fn compute_zeta(params: &MarketParams) -> f64 {
    (params.jump_mean + 0.5 * params.jump_std * params.jump_std).exp_m1()
}

/// Standard normal cumulative distribution function.
pub fn std_normal_cdf(y: f64) -> f64 {
    0.5 * libm::erfc(-y * FRAC_1_SQRT_2)
}

/// Gaussian jump-size density.
pub fn jump_density(y: f64, params: &MarketParams) -> f64 {
    let z = (y - params.jump_mean) / params.jump_std;
    (-0.5 * z * z).exp() / (params.jump_std * (2.0 * PI).sqrt())
}

/// Jump integral over the exterior of `(-L, L)` for a put whose value is
/// extended by its far-field asymptote.
pub fn tail_correction(x: f64, tau: f64, half_width: f64, style: OptionStyle, params: &MarketParams) -> f64 {
    let (cash, asset) = tail_parts(x, half_width, params);
    match style {
        OptionStyle::European => (-params.rate * tau).exp() * cash - asset,
        OptionStyle::American => cash - asset,
    }
}

fn tail_parts(x: f64, half_width: f64, params: &MarketParams) -> (f64, f64) {
    let (mu, s) = (params.jump_mean, params.jump_std);
    let cash = params.strike * std_normal_cdf(-(x + mu + half_width) / s);
    let asset =
        params.spot * (x + 0.5 * s * s + mu).exp() * std_normal_cdf(-(x + s * s + mu + half_width) / s);
    (cash, asset)
}

/// Precomputed exterior contribution at the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCorrection {
    style: OptionStyle,
    rate: f64,
    cash: Vec<f64>,
    asset: Vec<f64>,
}

impl TailCorrection {
    pub fn new(params: &MarketParams, grid: &GridSpec, style: OptionStyle) -> Self {
        let (cash, asset) = (1..grid.intervals())
            .map(|n| tail_parts(grid.x(n), grid.half_width(), params))
            .unzip();
        Self {
            style,
            rate: params.rate,
            cash,
            asset,
        }
    }

    /// A correction that is identically zero (used by test problems that
    /// have no far-field put asymptote).
    pub fn zero(grid: &GridSpec) -> Self {
        Self {
            style: OptionStyle::American,
            rate: 0.0,
            cash: vec![0.0; grid.intervals() - 1],
            asset: vec![0.0; grid.intervals() - 1],
        }
    }

    pub fn style(&self) -> OptionStyle {
        self.style
    }

    pub fn values_into(&self, tau: f64, out: &mut [f64]) {
        let discount = match self.style {
            OptionStyle::European => (-self.rate * tau).exp(),
            OptionStyle::American => 1.0,
        };
        for ((o, c), a) in out.iter_mut().zip(&self.cash).zip(&self.asset) {
            *o = discount * c - a;
        }
    }

    pub fn values(&self, tau: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.cash.len()];
        self.values_into(tau, &mut out);
        out
    }
}

/// Simpson weight pattern `[1, 4, 2, 4, ..., 2, 4, 1] / 3` at node `k` of `0..=n`.
pub fn simpson_weight(k: usize, n: usize) -> f64 {
    if k == 0 || k == n {
        1.0 / 3.0
    } else if k % 2 == 1 {
        4.0 / 3.0
    } else {
        2.0 / 3.0
    }
}

/// `dx * sum_k w_k e^{i theta k} g_k` over samples `g_0..g_N` with Simpson weights.
pub fn quadrature_symbol(theta: f64, dx: f64, samples: &[f64]) -> Complex64 {
    let n = samples.len() - 1;
    let step = Complex64::from_polar(1.0, theta);
    let mut phase = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, g) in samples.iter().enumerate() {
        acc += phase * (simpson_weight(k, n) * g);
        phase *= step;
        // refresh the phase periodically to keep rounding from accumulating
        if k % 64 == 63 {
            phase = Complex64::from_polar(1.0, theta * (k + 1) as f64);
        }
    }
    acc * dx
}

/// Jump density sampled on one grid together with the cached circulant
/// spectrum of the Simpson-scaled Toeplitz matrix.
#[derive(Clone)]
pub struct MertonKernel {
    intervals: usize,
    dx: f64,
    lambda: f64,
    zeta: f64,
    /// `g(j dx)` for `j = -N..=N`, stored at index `j + N`.
    offsets: Vec<f64>,
    /// `g(x_k)` for `k = 0..=N`.
    node_samples: Vec<f64>,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for MertonKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MertonKernel")
            .field("intervals", &self.intervals)
            .field("dx", &self.dx)
            .field("lambda", &self.lambda)
            .field("zeta", &self.zeta)
            .field("embedding", &self.spectrum.len())
            .finish()
    }
}

impl MertonKernel {
    pub fn new(params: &MarketParams, grid: &GridSpec) -> Self {
        let n = grid.intervals();
        let dx = grid.dx();
        let offsets = (0..=2 * n)
            .map(|j| jump_density((j as f64 - n as f64) * dx, params))
            .collect();
        let node_samples = grid.xs().into_iter().map(|x| jump_density(x, params)).collect();
        Self::from_samples(n, dx, params.lambda, compute_zeta(params), offsets, node_samples)
    }

    /// Builds a kernel from raw density samples (`offsets` has `2N + 1`
    /// entries, `node_samples` has `N + 1`).
    pub fn from_samples(
        intervals: usize,
        dx: f64,
        lambda: f64,
        zeta: f64,
        offsets: Vec<f64>,
        node_samples: Vec<f64>,
    ) -> Self {
        assert_eq!(offsets.len(), 2 * intervals + 1);
        assert_eq!(node_samples.len(), intervals + 1);
        let interior = intervals - 1;
        let size = (2 * interior).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);

        let third = dx / 3.0;
        let g = |j: isize| offsets[(j + intervals as isize) as usize];
        let mut spectrum = vec![Complex64::new(0.0, 0.0); size];
        for j in 0..interior {
            spectrum[j] = Complex64::new(third * g(-(j as isize)), 0.0);
        }
        for j in 1..interior {
            spectrum[size - j] = Complex64::new(third * g(j as isize), 0.0);
        }
        forward.process(&mut spectrum);
        // fold the inverse transform's normalisation into the cached spectrum
        let scale = 1.0 / size as f64;
        spectrum.iter_mut().for_each(|c| *c *= scale);

        Self {
            intervals,
            dx,
            lambda,
            zeta,
            offsets,
            node_samples,
            spectrum,
            forward,
            inverse,
        }
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Length of the circulant embedding.
    pub fn embedding_size(&self) -> usize {
        self.spectrum.len()
    }

    /// `g(j dx)` for `|j| <= N`.
    pub fn offset_density(&self, j: isize) -> f64 {
        self.offsets[(j + self.intervals as isize) as usize]
    }

    pub fn node_samples(&self) -> &[f64] {
        &self.node_samples
    }

    /// Simpson approximation of the density mass on `[-L, L]`.
    pub fn simpson_mass(&self) -> f64 {
        quadrature_symbol(0.0, self.dx, &self.node_samples).re
    }

    pub fn quadrature_symbol(&self, theta: f64) -> Complex64 {
        quadrature_symbol(theta, self.dx, &self.node_samples)
    }

    pub fn workspace(&self) -> ConvolutionWorkspace {
        let scratch_len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        ConvolutionWorkspace {
            buffer: vec![Complex64::new(0.0, 0.0); self.spectrum.len()],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    /// `(dx/3) [g(x_i - x_n)]_{n,i} v` for interior vectors `v`, via FFT.
    pub fn toeplitz_product_into(&self, v: &[f64], ws: &mut ConvolutionWorkspace, out: &mut [f64]) {
        let interior = self.intervals - 1;
        debug_assert_eq!(v.len(), interior);
        debug_assert_eq!(out.len(), interior);
        let buf = &mut ws.buffer;
        for (b, &x) in buf.iter_mut().zip(v) {
            *b = Complex64::new(x, 0.0);
        }
        buf[interior..].fill(Complex64::new(0.0, 0.0));
        self.forward.process_with_scratch(buf, &mut ws.scratch);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inverse.process_with_scratch(buf, &mut ws.scratch);
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o = b.re;
        }
    }

    pub fn toeplitz_product(&self, v: &[f64]) -> Vec<f64> {
        let mut ws = self.workspace();
        let mut out = vec![0.0; self.intervals - 1];
        self.toeplitz_product_into(v, &mut ws, &mut out);
        out
    }

    /// `lambda (B u~ + P + tail)` at interior nodes, where `u` holds all nodes
    /// and `tail` the exterior contribution at interior nodes.
    pub fn apply_integral_operator_into(
        &self,
        u: &[f64],
        tail: &[f64],
        ws: &mut ConvolutionWorkspace,
        weighted: &mut [f64],
        out: &mut [f64],
    ) {
        let n = self.intervals;
        debug_assert_eq!(u.len(), n + 1);
        if self.lambda == 0.0 {
            out.fill(0.0);
            return;
        }
        for (i, w) in weighted.iter_mut().enumerate() {
            let node = i + 1;
            *w = if node % 2 == 1 { 4.0 } else { 2.0 } * u[node];
        }
        self.toeplitz_product_into(weighted, ws, out);
        let third = self.dx / 3.0;
        let (left, right) = (u[0], u[n]);
        for (i, o) in out.iter_mut().enumerate() {
            let node = i + 1;
            let ends = third
                * (left * self.offset_density(-(node as isize))
                    + right * self.offset_density((n - node) as isize));
            *o = self.lambda * (*o + ends + tail[i]);
        }
    }

    pub fn apply_integral_operator(&self, u: &[f64], tail: &[f64]) -> Vec<f64> {
        let mut ws = self.workspace();
        let mut weighted = vec![0.0; self.intervals - 1];
        let mut out = vec![0.0; self.intervals - 1];
        self.apply_integral_operator_into(u, tail, &mut ws, &mut weighted, &mut out);
        out
    }
}

/// Scratch buffers for the FFT product; one per concurrently running solver.
#[derive(Debug, Clone)]
pub struct ConvolutionWorkspace {
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn table() -> MarketParams {
        MarketParams::reference()
    }

    /// Composite Simpson on a fine uniform grid; enough for smooth integrands
    /// with Gaussian decay.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn zeta_examples() {
        let mut p = table();
        // frozen from closed form, confirmed by quadrature below
        assert!((compute_zeta(&p) - (-0.550_109_023_493_067)).abs() < 1e-12);
        let quad = simpson(|x| (x.exp() - 1.0) * jump_density(x, &p), -10.0, 10.0, 20_000);
        assert!((quad - compute_zeta(&p)).abs() < 1e-10);

        p.jump_mean = -0.5 * p.jump_std * p.jump_std;
        assert!(compute_zeta(&p).abs() < 1e-16);

        p.jump_mean = 0.0;
        p.jump_std = 1e-6;
        assert!(compute_zeta(&p).abs() < 1e-11);
    }

    #[test]
    fn normal_cdf_examples() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        for &y in &[0.1, 0.5, 1.0, 1.96, 3.0, 7.5] {
            assert!((std_normal_cdf(-y) - (1.0 - std_normal_cdf(y))).abs() < 1e-14);
        }
        // high-precision reference value
        assert!((std_normal_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-12);
        assert!(std_normal_cdf(-40.0) >= 0.0);
        assert_eq!(std_normal_cdf(40.0), 1.0);
    }

    #[test]
    fn normal_cdf_matches_series() {
        // Taylor series of the cdf around zero, summed to convergence.
        fn series(y: f64) -> f64 {
            let mut term = y;
            let mut sum = y;
            for k in 1..400 {
                term *= -y * y / (2.0 * k as f64);
                sum += term / (2 * k + 1) as f64;
            }
            0.5 + sum / (2.0 * PI).sqrt()
        }
        for &y in &[-3.0, -1.2, -0.3, 0.0, 0.7, 1.5, 2.5] {
            assert!((std_normal_cdf(y) - series(y)).abs() < 1e-13, "y = {y}");
        }
    }

    #[test]
    fn tail_examples() {
        let p = table();
        for &x in &[-1.5, 0.0, 1.0] {
            let e = tail_correction(x, 0.0, 2.0, OptionStyle::European, &p);
            let a = tail_correction(x, 0.0, 2.0, OptionStyle::American, &p);
            assert!((e - a).abs() < 1e-14);
        }
        let far = tail_correction(2.0, 0.25, 2.0, OptionStyle::European, &p);
        assert!(far.abs() < 1e-8, "{far}");
    }

    #[test]
    fn tail_matches_direct_quadrature() {
        let p = table();
        let tau = 0.25;
        let x = 0.0;
        let l = 2.0;
        let far_field = |y: f64| p.strike * (-p.rate * tau).exp() - p.spot * y.exp();
        // left exterior y < -L; the right exterior contributes nothing
        let lower = -l - 20.0 * p.jump_std + p.jump_mean.min(0.0) + x;
        let direct = simpson(|y| far_field(y) * jump_density(y - x, &p), lower, -l, 200_000);
        let closed = tail_correction(x, tau, l, OptionStyle::European, &p);
        assert!((direct - closed).abs() < 1e-8, "{direct} vs {closed}");
    }

    #[test]
    fn tail_decreases_across_grid() {
        let p = table();
        let g = GridSpec::new(2.0, 64, 4, p.maturity).unwrap();
        for style in [OptionStyle::European, OptionStyle::American] {
            let t = TailCorrection::new(&p, &g, style).values(0.1);
            assert!(t.iter().all(|&v| v >= 0.0));
            assert!(t.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    fn direct_toeplitz(k: &MertonKernel, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        (0..n)
            .map(|row| {
                (0..n)
                    .map(|col| k.dx() / 3.0 * k.offset_density(col as isize - row as isize) * v[col])
                    .sum()
            })
            .collect()
    }

    #[test]
    fn fft_product_matches_direct() {
        let p = table();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for &n in &[16, 64, 128, 256] {
            let g = GridSpec::new(2.0, n, 4, p.maturity).unwrap();
            let k = MertonKernel::new(&p, &g);
            assert!(k.embedding_size() >= 2 * (n - 1));
            assert!(k.embedding_size().is_power_of_two());
            let v: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = k.toeplitz_product(&v);
            let slow = direct_toeplitz(&k, &v);
            let scale = slow.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn integral_operator_trivial_cases() {
        let mut p = table();
        let g = GridSpec::new(2.0, 32, 4, p.maturity).unwrap();
        let k = MertonKernel::new(&p, &g);
        let zero = vec![0.0; g.nodes()];
        let no_tail = vec![0.0; g.intervals() - 1];
        assert!(k.apply_integral_operator(&zero, &no_tail).iter().all(|&v| v == 0.0));
        p.lambda = 0.0;
        let k0 = MertonKernel::new(&p, &g);
        let u: Vec<f64> = (0..g.nodes()).map(|i| i as f64).collect();
        let tail = TailCorrection::new(&p, &g, OptionStyle::European).values(0.1);
        assert!(k0.apply_integral_operator(&u, &tail).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn integral_operator_matches_simpson_sum() {
        let p = table();
        let g = GridSpec::new(2.0, 64, 4, p.maturity).unwrap();
        let k = MertonKernel::new(&p, &g);
        let u: Vec<f64> = g.xs().iter().map(|x| (1.0 + x).cos() + 2.0).collect();
        let tail = vec![0.25; g.intervals() - 1];
        let got = k.apply_integral_operator(&u, &tail);
        let n = g.intervals();
        for row in 1..n {
            let s: f64 = (0..=n)
                .map(|i| simpson_weight(i, n) * g.dx() * jump_density(g.x(i) - g.x(row), &p) * u[i])
                .sum();
            let expected = p.lambda * (s + 0.25);
            assert!((got[row - 1] - expected).abs() < 1e-12, "row {row}");
        }
    }

    #[test]
    fn quadrature_symbol_examples() {
        let p = table();
        let g = GridSpec::new(2.0, 256, 4, p.maturity).unwrap();
        let k = MertonKernel::new(&p, &g);
        let g0 = k.quadrature_symbol(0.0);
        assert!(g0.im.abs() < 1e-15);
        assert!((g0.re - k.simpson_mass()).abs() < 1e-15);
        assert!(g0.norm() <= 1.0);
        let zeros = vec![0.0; 33];
        assert_eq!(quadrature_symbol(0.7, 0.1, &zeros), Complex64::new(0.0, 0.0));
        // symbol against a naive evaluation
        let theta = 1.234;
        let naive: Complex64 = k
            .node_samples()
            .iter()
            .enumerate()
            .map(|(i, gk)| Complex64::from_polar(simpson_weight(i, 256) * g.dx() * gk, theta * i as f64))
            .sum();
        assert!((naive - k.quadrature_symbol(theta)).norm() < 1e-13);
    }
}
