mod common;

use common::*;
use merton_cfd::american::{project, AmericanSolver};
use merton_cfd::grid::boundary_values;
use merton_cfd::jump::{MertonKernel, TailCorrection};
use merton_cfd::tridiag::solve_tridiagonal;
use merton_cfd::tridiag::TridiagonalSystem;
use merton_cfd::{solve_european, GridSpec, MarketParams, OptionStyle, SolverConfig, Stepper, VolMode};
use rand::{Rng, SeedableRng};

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn fft_product_matches_direct_summation() {
    let p = MarketParams::reference();
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    for n in [16, 64, 256] {
        let g = GridSpec::new(2.0, n, 4, p.maturity).unwrap();
        let k = MertonKernel::new(&p, &g);
        let v: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fast = k.toeplitz_product(&v);
        let dx = g.dx();
        let direct: Vec<f64> = (1..n)
            .map(|i| {
                (1..n)
                    .map(|j| dx / 3.0 * density(g.x(j) - g.x(i), &p) * v[j - 1])
                    .sum::<f64>()
            })
            .collect();
        let scale = direct.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(max_abs_diff(&fast, &direct) <= 1e-10 * scale, "N = {n}");
    }
}

#[test]
fn integral_operator_matches_direct_summation() {
    for mode in [OptionStyle::European, OptionStyle::American] {
        let p = MarketParams::reference();
        let g = GridSpec::new(2.0, 64, 4, p.maturity).unwrap();
        let k = MertonKernel::new(&p, &g);
        let u: Vec<f64> = g.xs().into_iter().map(|x| (p.strike - p.spot * x.exp()).max(0.0)).collect();
        let tail = TailCorrection::new(&p, &g, mode).values(0.1);
        let fast = k.apply_integral_operator(&u, &tail);
        let direct = direct_integral(&g, &p, &u, 0.1, mode);
        assert!(max_abs_diff(&fast, &direct) < 1e-10);
    }
}

#[test]
fn tridiagonal_solve_matches_dense_elimination() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let n = 64;
    let sub: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let sup: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(2.5..4.0)).collect();
    let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let mut dense = vec![vec![0.0; n]; n];
    for i in 0..n {
        dense[i][i] = diag[i];
        if i > 0 {
            dense[i][i - 1] = sub[i];
        }
        if i + 1 < n {
            dense[i][i + 1] = sup[i];
        }
    }
    let x = solve_tridiagonal(&TridiagonalSystem::new(sub, diag, sup, rhs.clone()).unwrap()).unwrap();
    let y = dense_solve(dense, rhs);
    assert!(max_abs_diff(&x, &y) <= 1e-10);
}

fn step_oracle(mode: VolMode) {
    let p = MarketParams::reference().with_vol_mode(mode);
    let g = GridSpec::with_mesh_ratio(2.0, 64, 0.4, p.maturity).unwrap();
    let dt = g.dtau();
    let style = OptionStyle::European;
    let mut s = Stepper::new(&p, &g, style, &SolverConfig::default()).unwrap();
    let mut state = s.start().unwrap();
    let u0 = state.prev.u.clone();
    let u1 = state.curr.u.clone();

    // implicit-explicit first level
    let jump0 = direct_integral(&g, &p, &u0, 0.0, style);
    let rhs: Vec<f64> = (0..63).map(|k| u0[k + 1] + dt * jump0[k]).collect();
    let oracle1 = dense_implicit_solve(&g, &p, g.tau(1), dt, &rhs, style);
    assert!(max_abs_diff(&u1, &oracle1) <= 1e-10, "level 1: {}", max_abs_diff(&u1, &oracle1));

    // three-level step to level 2
    s.advance(&mut state).unwrap();
    let d0 = mat_vec(&dense_differential(&g, &p, g.tau(0)), &u0);
    let jump1 = direct_integral(&g, &p, &u1, g.tau(1), style);
    let rhs: Vec<f64> = (0..63).map(|k| u0[k + 1] + dt * d0[k] + 2.0 * dt * jump1[k]).collect();
    let oracle2 = dense_implicit_solve(&g, &p, g.tau(2), dt, &rhs, style);
    let diff = max_abs_diff(&state.curr.u, &oracle2);
    assert!(diff <= 1e-10, "level 2: {diff}");
}

#[test]
fn time_step_matches_dense_fixed_point_oracle() {
    step_oracle(VolMode::Constant);
}

#[test]
fn local_volatility_step_matches_dense_oracle() {
    step_oracle(VolMode::Local);
}

#[test]
fn american_step_matches_projected_gauss_seidel() {
    let p = MarketParams::reference();
    let g = GridSpec::with_mesh_ratio(2.0, 64, 0.4, p.maturity).unwrap();
    let dt = g.dtau();
    let style = OptionStyle::American;
    let mut solver = AmericanSolver::new(&p, &g, &SolverConfig::default()).unwrap();
    let (mut state, split) = solver.start().unwrap();
    let psi1 = split.psi.clone();
    let u0 = state.prev.u.clone();
    let u1 = state.curr.u.clone();
    let mut psi = split.psi;
    solver.advance(&mut state, &mut psi).unwrap();

    let d0 = mat_vec(&dense_differential(&g, &p, g.tau(0)), &u0);
    let jump1 = direct_integral(&g, &p, &u1, g.tau(1), style);
    let base: Vec<f64> = (0..63).map(|k| u0[k + 1] + dt * d0[k] + 2.0 * dt * jump1[k]).collect();
    let (a, b) = dense_implicit_system(&g, &p, g.tau(2), dt, &base, style);
    let f = interior_payoff(&g, &p);

    // the split pair reproduced densely
    let with_psi: Vec<f64> = b.iter().zip(&psi1.values()[1..64]).map(|(b, s)| b + 2.0 * dt * s).collect();
    let mut tilde = dense_solve(a.clone(), with_psi);
    let mut psi_dense = psi1.values()[1..64].to_vec();
    project(&mut tilde, &mut psi_dense, &f, 2.0 * dt);
    assert!(max_abs_diff(&tilde, &state.curr.u[1..64]) <= 1e-10);
    assert!(max_abs_diff(&psi_dense, &psi.values()[1..64]) <= 1e-10 / dt);

    // the exact discrete LCP differs from the split solution by at most the
    // multiplier increment over one step
    let lcp = projected_gauss_seidel(&a, &b, &f, &state.curr.u[1..64], 1e-13);
    let dpsi = max_abs_diff(&psi.values()[1..64], &psi1.values()[1..64]);
    let gap = max_abs_diff(&lcp, &state.curr.u[1..64]);
    assert!(gap <= 2.0 * dt * dpsi + 1e-10, "gap {gap}, 2 dtau |dpsi| {}", 2.0 * dt * dpsi);
    let residual = mat_vec(&a, &lcp);
    for k in 0..63 {
        let w = residual[k] - b[k];
        assert!(w >= -1e-9 && lcp[k] >= f[k] - 1e-12 && (w * (lcp[k] - f[k])).abs() < 1e-9);
    }
}

#[test]
fn zero_intensity_matches_black_scholes() {
    let p = MarketParams {
        lambda: 0.0,
        ..MarketParams::reference()
    };
    let g = GridSpec::with_mesh_ratio(2.0, 768, 0.4, p.maturity).unwrap();
    let s = solve_european(&p, &g, &SolverConfig::default()).unwrap();
    for spot in [90.0, 100.0, 110.0] {
        let exact = black_scholes_put(spot, p.strike, p.rate, p.sigma, p.maturity);
        let v = s.price_at(spot).unwrap();
        assert!((v - exact).abs() < 1e-3, "S = {spot}: {v} vs {exact}");
    }
    // frozen from an independent erfc-based evaluation
    assert!((black_scholes_put(100.0, 100.0, 0.05, 0.15, 0.25) - 2.392849749535479).abs() < 1e-12);
}

/// `u = e^{-tau} (cos x + x / 3)` with the matching forcing term and `lambda = 0`.
fn manufactured_error(n: usize) -> f64 {
    let p = MarketParams {
        lambda: 0.0,
        ..MarketParams::reference()
    };
    let exact = |x: f64, t: f64| (-t).exp() * (x.cos() + x / 3.0);
    let a = 0.5 * p.sigma * p.sigma;
    let b = p.rate - a;
    let source = move |x: f64, t: f64| {
        let e = (-t).exp();
        let u = e * (x.cos() + x / 3.0);
        let ux = e * (-x.sin() + 1.0 / 3.0);
        let uxx = -e * x.cos();
        -u - (a * uxx + b * ux - p.rate * u)
    };
    let g = GridSpec::with_mesh_ratio(1.0, n, 0.4, 0.25).unwrap();
    let cfg = SolverConfig {
        smoothing: false,
        ..Default::default()
    };
    let mut s = Stepper::new(&p, &g, OptionStyle::European, &cfg)
        .unwrap()
        .with_initial(move |x| exact(x, 0.0), vec![])
        .with_boundary(move |t| (exact(-1.0, t), exact(1.0, t)))
        .with_source(source)
        .without_tail();
    let surf = s.solve().unwrap();
    let fin = surf.final_slice();
    (0..=n)
        .map(|i| (fin.values[i] - exact(g.x(i), fin.tau)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn manufactured_solution_converges_at_fourth_order() {
    let e: Vec<f64> = [16, 32, 64].iter().map(|&n| manufactured_error(n)).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 3.6, "errors {e:?}");
    }
}

#[test]
fn boundary_data_consistent_with_dense_solve() {
    let p = MarketParams::reference();
    let g = GridSpec::with_mesh_ratio(2.0, 32, 0.4, p.maturity).unwrap();
    let u = dense_implicit_solve(&g, &p, 0.1, 0.0, &vec![1.0; 31], OptionStyle::European);
    let (l, r) = boundary_values(0.1, OptionStyle::European, &p, 2.0);
    assert_eq!((u[0], u[32]), (l, r));
    assert!(u[1..32].iter().all(|v| (v - 1.0).abs() < 1e-14));
}
