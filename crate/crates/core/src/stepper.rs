//! Time marching of the localized pricing equation.
//!
//! Level 1 comes from an implicit-explicit step (differential part implicit,
//! jump integral explicit). Every later level uses the three-level scheme
//! ```text
//! (U^{m+1} - U^{m-1}) / (2 dtau) = D (U^{m+1} + U^{m-1}) / 2 + I U^m
//! ```
//! whose left-hand operator `1 + dtau (r + lambda) - dtau sigma^2 Δxx` is
//! tridiagonal. The compact first derivative of the unknown level appears on
//! the right-hand side and is resolved by fixed-point iteration.

use std::sync::Arc;

use serde::Serialize;

use crate::compact::{CompactDerivative, OperatorCoefficients};
use crate::error::{PricingError, Result};
use crate::grid::{boundary_values, payoff, GridFunction, GridSpec, MarketParams, OptionStyle, VolMode};
use crate::jump::{ConvolutionWorkspace, MertonKernel, TailCorrection};
use crate::smoothing::smooth_initial_condition;
use crate::surface::{SolutionSurface, SolverStats, SurfaceStorage, TimeSlice};
use crate::tridiag::TridiagonalLu;

/// Spatial discretisation of the differential operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum SpatialScheme {
    /// Fourth-order compact first derivative with `u_xx = 2 Δxx u - Δx u_x`.
    #[default]
    Compact,
    /// Second-order central differences; the baseline the compact scheme is
    /// compared against.
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Max-norm stopping tolerance of the inner iteration.
    pub epsilon_inner: f64,
    pub max_inner_iterations: usize,
    /// Target `dtau / dx^2` used when the step count is derived.
    pub mesh_ratio: f64,
    pub smoothing: bool,
    pub storage: SurfaceStorage,
    pub scheme: SpatialScheme,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon_inner: 1e-12,
            max_inner_iterations: 100,
            mesh_ratio: 0.4,
            smoothing: true,
            storage: SurfaceStorage::FinalOnly,
            scheme: SpatialScheme::Compact,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_inner > 0.0) {
            return Err(PricingError::InvalidParameter {
                name: "epsilon_inner",
                reason: format!("must be positive, got {}", self.epsilon_inner),
            });
        }
        if self.max_inner_iterations < 1 {
            return Err(PricingError::InvalidParameter {
                name: "max_inner_iterations",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.mesh_ratio > 0.0) {
            return Err(PricingError::InvalidParameter {
                name: "mesh_ratio",
                reason: format!("must be positive, got {}", self.mesh_ratio),
            });
        }
        Ok(())
    }
}

/// One time level with its compact first derivative (all nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub u: Vec<f64>,
    pub u_x: Vec<f64>,
}

/// Right-hand side of one step with everything known before the implicit
/// solve: the previous levels, the explicit jump term and any source.
#[derive(Debug, Clone)]
pub struct StepContext {
    /// Level being computed.
    pub level: usize,
    /// Interior nodes.
    pub known: Vec<f64>,
}

/// March state: the two most recent levels and the iteration record.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub prev: Level,
    pub curr: Level,
    /// Index of `curr`.
    pub level: usize,
    pub stats: SolverStats,
}

type BoundaryFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;
type SourceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type InitialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Factored left-hand operator together with the coefficients it was built from.
#[derive(Debug, Clone)]
struct ImplicitOperator {
    coeffs: OperatorCoefficients,
    lu: TridiagonalLu,
    /// Weight of `U_0` in the first interior row and `U_N` in the last.
    left_weight: f64,
    right_weight: f64,
}

/// Discrete operators and workspaces for one (parameters, grid) pair.
pub struct Stepper {
    params: MarketParams,
    grid: GridSpec,
    style: OptionStyle,
    config: SolverConfig,
    kernel: MertonKernel,
    tail: TailCorrection,
    derivative: CompactDerivative,
    boundary: BoundaryFn,
    source: Option<SourceFn>,
    initial: InitialFn,
    kinks: Vec<f64>,
    constant_operator: Option<ImplicitOperator>,
    ws: ConvolutionWorkspace,
    weighted: Vec<f64>,
    scratch: Vec<f64>,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper")
            .field("grid", &self.grid)
            .field("style", &self.style)
            .field("config", &self.config)
            .finish()
    }
}

impl Stepper {
    pub fn new(params: &MarketParams, grid: &GridSpec, style: OptionStyle, config: &SolverConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        let kernel = MertonKernel::new(params, grid);
        let tail = TailCorrection::new(params, grid, style);
        let derivative = CompactDerivative::new(grid)?;
        let (p, half_width) = (*params, grid.half_width());
        let boundary: BoundaryFn = Arc::new(move |tau| boundary_values(tau, style, &p, half_width));
        let initial: InitialFn = Arc::new(move |x| payoff(x, &p));
        let ws = kernel.workspace();
        let interior = grid.intervals() - 1;
        let mut stepper = Self {
            params: *params,
            grid: *grid,
            style,
            config: *config,
            kernel,
            tail,
            derivative,
            boundary,
            source: None,
            initial,
            kinks: vec![params.kink()],
            constant_operator: None,
            ws,
            weighted: vec![0.0; interior],
            scratch: vec![0.0; interior],
        };
        stepper.refresh_constant_operator()?;
        Ok(stepper)
    }

    fn refresh_constant_operator(&mut self) -> Result<()> {
        self.constant_operator = match self.params.vol_mode {
            VolMode::Constant => Some(self.implicit_operator(0.0)?),
            VolMode::Local => None,
        };
        Ok(())
    }

    /// Replaces the Dirichlet data `tau -> (left, right)`.
    pub fn with_boundary(mut self, f: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        self.boundary = Arc::new(f);
        self
    }

    /// Adds a forcing term `s(x, tau)` to the right-hand side.
    pub fn with_source(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Some(Arc::new(f));
        self
    }

    /// Replaces the initial data; `kinks` lists where it is not smooth.
    pub fn with_initial(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static, kinks: Vec<f64>) -> Self {
        self.initial = Arc::new(f);
        self.kinks = kinks;
        self
    }

    /// Drops the exterior jump contribution.
    pub fn without_tail(mut self) -> Self {
        self.tail = TailCorrection::zero(&self.grid);
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn style(&self) -> OptionStyle {
        self.style
    }

    pub fn kernel(&self) -> &MertonKernel {
        &self.kernel
    }

    pub fn derivative(&self) -> &CompactDerivative {
        &self.derivative
    }

    pub fn boundary_at(&self, tau: f64) -> (f64, f64) {
        (self.boundary)(tau)
    }

    /// Initial data on the grid, mollified near its kinks when smoothing is on.
    pub fn initial_condition(&self) -> GridFunction {
        let mut u0 = if self.config.smoothing {
            smooth_initial_condition(&*self.initial, &self.grid, Some(&self.kinks))
        } else {
            GridFunction::from_fn(&self.grid, &*self.initial)
        };
        u0.set_boundaries(self.boundary_at(0.0));
        u0
    }

    /// Unsmoothed initial data at interior nodes; the exercise value for
    /// American runs.
    pub fn obstacle(&self) -> Vec<f64> {
        (1..self.grid.intervals()).map(|n| (self.initial)(self.grid.x(n))).collect()
    }

    pub fn level(&self, u: Vec<f64>) -> Level {
        let u_x = match self.config.scheme {
            SpatialScheme::Compact => self.derivative.apply(&u),
            SpatialScheme::Central => Vec::new(),
        };
        Level { u, u_x }
    }

    fn coefficients(&self, tau: f64) -> OperatorCoefficients {
        OperatorCoefficients::at(&self.params, &self.grid, tau, self.kernel.zeta())
    }

    fn implicit_operator(&self, tau: f64) -> Result<ImplicitOperator> {
        let coeffs = self.coefficients(tau);
        let dt = self.grid.dtau();
        let dx = self.grid.dx();
        let n = coeffs.len();
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let base = 1.0 + dt * coeffs.discount;
        let (mut left_weight, mut right_weight) = (0.0, 0.0);
        for k in 0..n {
            let a = coeffs.diffusion[k];
            let (lo, d, hi) = match self.config.scheme {
                // -dtau * 2a * Δxx
                SpatialScheme::Compact => {
                    let c = 2.0 * a * dt / (dx * dx);
                    (-c, base + 2.0 * c, -c)
                }
                // -dtau * (a Δxx + b Δx)
                SpatialScheme::Central => {
                    let diff = a * dt / (dx * dx);
                    let conv = 0.5 * coeffs.drift[k] * dt / dx;
                    (-(diff - conv), base + 2.0 * diff, -(diff + conv))
                }
            };
            sub[k] = lo;
            diag[k] = d;
            sup[k] = hi;
            if k == 0 {
                left_weight = -lo;
            }
            if k == n - 1 {
                right_weight = -hi;
            }
        }
        sub[0] = 0.0;
        sup[n - 1] = 0.0;
        let lu = TridiagonalLu::factor(&sub, &diag, &sup)?;
        Ok(ImplicitOperator {
            coeffs,
            lu,
            left_weight,
            right_weight,
        })
    }

    /// Adds `weight * I u` (jump integral at `tau`) into `out`.
    fn add_integral(&mut self, u: &[f64], tau: f64, weight: f64, out: &mut [f64]) {
        let mut tail = std::mem::take(&mut self.scratch);
        self.tail.values_into(tau, &mut tail);
        let mut jump = vec![0.0; out.len()];
        self.kernel
            .apply_integral_operator_into(u, &tail, &mut self.ws, &mut self.weighted, &mut jump);
        for (o, j) in out.iter_mut().zip(&jump) {
            *o += weight * j;
        }
        self.scratch = tail;
    }

    fn add_source(&self, tau: f64, weight: f64, out: &mut [f64]) {
        if let Some(src) = &self.source {
            for (k, o) in out.iter_mut().enumerate() {
                *o += weight * src(self.grid.x(k + 1), tau);
            }
        }
    }

    /// Explicit differential operator `D u` at interior nodes using the level's
    /// cached first derivative.
    fn explicit_differential(&self, level: &Level, tau: f64) -> Vec<f64> {
        let coeffs = self.coefficients(tau);
        let dx = self.grid.dx();
        let u = &level.u;
        let inv_h2 = 1.0 / (dx * dx);
        let inv_2h = 0.5 / dx;
        (0..coeffs.len())
            .map(|k| {
                let i = k + 1;
                let a = coeffs.diffusion[k];
                let b = coeffs.drift[k];
                let dxx = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
                match self.config.scheme {
                    SpatialScheme::Compact => {
                        let ux = &level.u_x;
                        a * (2.0 * dxx - (ux[i + 1] - ux[i - 1]) * inv_2h) + b * ux[i] - coeffs.discount * u[i]
                    }
                    SpatialScheme::Central => {
                        a * dxx + b * (u[i + 1] - u[i - 1]) * inv_2h - coeffs.discount * u[i]
                    }
                }
            })
            .collect()
    }

    /// Known part of the first (implicit-explicit) step:
    /// `U^0 + dtau (I U^0 + s + extra)`.
    pub fn assemble_imex(&mut self, u0: &[f64], extra: Option<&[f64]>) -> StepContext {
        let dt = self.grid.dtau();
        let mut known = u0[1..u0.len() - 1].to_vec();
        self.add_integral(u0, 0.0, dt, &mut known);
        self.add_source(self.grid.tau(1), dt, &mut known);
        if let Some(e) = extra {
            known.iter_mut().zip(e).for_each(|(k, v)| *k += dt * v);
        }
        StepContext { level: 1, known }
    }

    /// Known part of a three-level step producing level `next`:
    /// `U^{m-1} + dtau D U^{m-1} + 2 dtau (I U^m + s + extra)`.
    pub fn assemble_leapfrog(&mut self, prev: &Level, curr: &[f64], next: usize, extra: Option<&[f64]>) -> StepContext {
        assert!(next >= 2, "three-level step needs two previous levels");
        let dt = self.grid.dtau();
        let m = next - 1;
        let explicit = self.explicit_differential(prev, self.grid.tau(m - 1));
        let mut known: Vec<f64> = prev.u[1..prev.u.len() - 1]
            .iter()
            .zip(&explicit)
            .map(|(u, d)| u + dt * d)
            .collect();
        self.add_integral(curr, self.grid.tau(m), 2.0 * dt, &mut known);
        self.add_source(self.grid.tau(m), 2.0 * dt, &mut known);
        if let Some(e) = extra {
            known.iter_mut().zip(e).for_each(|(k, v)| *k += 2.0 * dt * v);
        }
        StepContext { level: next, known }
    }

    /// Solves the implicit part of a step, iterating on the compact first
    /// derivative of the unknown level until successive iterates differ by
    /// less than `epsilon_inner` in max-norm. Returns the new level (all
    /// nodes) and the number of tridiagonal solves.
    pub fn correcting_to_convergence(&mut self, ctx: &StepContext, guess: &[f64]) -> Result<(Vec<f64>, usize)> {
        let tau = self.grid.tau(ctx.level);
        let local;
        let op = match &self.constant_operator {
            Some(op) => op,
            None => {
                local = self.implicit_operator(tau)?;
                &local
            }
        };
        let (left, right) = (self.boundary)(tau);
        let n = self.grid.intervals();
        let dt = self.grid.dtau();
        let inv_2h = 0.5 / self.grid.dx();

        let mut old = guess.to_vec();
        old[0] = left;
        old[n] = right;
        let mut rhs = vec![0.0; n - 1];
        let mut u_x = vec![0.0; n + 1];

        let max_iter = match self.config.scheme {
            SpatialScheme::Compact => self.config.max_inner_iterations,
            SpatialScheme::Central => 1,
        };
        let mut diff = f64::INFINITY;
        for iteration in 1..=max_iter {
            rhs.copy_from_slice(&ctx.known);
            if self.config.scheme == SpatialScheme::Compact {
                self.derivative.apply_into(&old, &mut u_x);
                for (k, r) in rhs.iter_mut().enumerate() {
                    let i = k + 1;
                    let a = op.coeffs.diffusion[k];
                    let b = op.coeffs.drift[k];
                    *r += dt * (b * u_x[i] - a * (u_x[i + 1] - u_x[i - 1]) * inv_2h);
                }
            }
            rhs[0] += op.left_weight * left;
            rhs[n - 2] += op.right_weight * right;
            op.lu.solve_in_place(&mut rhs);

            diff = old[1..n]
                .iter()
                .zip(&rhs)
                .map(|(o, v)| (o - v).abs())
                .fold(0.0, f64::max);
            old[1..n].copy_from_slice(&rhs);
            if !diff.is_finite() {
                break;
            }
            if diff < self.config.epsilon_inner || self.config.scheme == SpatialScheme::Central {
                tracing::trace!(level = ctx.level, iterations = iteration, residual = diff, "level converged");
                return Ok((old, iteration));
            }
        }
        Err(PricingError::InnerIterationDiverged {
            level: ctx.level,
            iterations: max_iter,
            residual: diff,
        })
    }

    /// Level 1 from level 0.
    pub fn imex_first_step(&mut self, u0: &GridFunction) -> Result<GridFunction> {
        let ctx = self.assemble_imex(u0.values(), None);
        let (u1, _) = self.correcting_to_convergence(&ctx, u0.values())?;
        GridFunction::new(&self.grid, u1)
    }

    /// Level `next` from levels `next - 2` and `next - 1`.
    pub fn assemble_and_step(&mut self, prev: &GridFunction, curr: &GridFunction, next: usize) -> Result<GridFunction> {
        let prev = self.level(prev.values().to_vec());
        let ctx = self.assemble_leapfrog(&prev, curr.values(), next, None);
        let (u, _) = self.correcting_to_convergence(&ctx, curr.values())?;
        GridFunction::new(&self.grid, u)
    }

    /// Starts a march: level 0 and the implicit-explicit level 1.
    pub fn start(&mut self) -> Result<SolverState> {
        let u0 = self.initial_condition().into_values();
        let ctx = self.assemble_imex(&u0, None);
        let (u1, it) = self.correcting_to_convergence(&ctx, &u0)?;
        Ok(SolverState {
            prev: self.level(u0),
            curr: self.level(u1),
            level: 1,
            stats: SolverStats {
                iterations: vec![it as u32],
            },
        })
    }

    /// Advances `state` by one three-level step.
    pub fn advance(&mut self, state: &mut SolverState) -> Result<()> {
        let next = state.level + 1;
        let ctx = self.assemble_leapfrog(&state.prev, &state.curr.u, next, None);
        let guess = extrapolate(&state.prev.u, &state.curr.u);
        let (u, it) = self.correcting_to_convergence(&ctx, &guess)?;
        let new = self.level(u);
        state.prev = std::mem::replace(&mut state.curr, new);
        state.level = next;
        state.stats.iterations.push(it as u32);
        Ok(())
    }

    /// Runs the European march to `tau = T`.
    pub fn solve(&mut self) -> Result<SolutionSurface> {
        let steps = self.grid.steps();
        let storage = self.config.storage;
        let mut slices = Vec::new();
        let mut state = self.start()?;
        slices.push(self.slice(0, &state.prev.u));
        if storage.keeps(1, steps) {
            slices.push(self.slice(1, &state.curr.u));
        }
        while state.level < steps {
            self.advance(&mut state)?;
            if storage.keeps(state.level, steps) {
                slices.push(self.slice(state.level, &state.curr.u));
            }
        }
        tracing::debug!(
            levels = steps,
            max_iterations = state.stats.max_iterations(),
            "march finished"
        );
        Ok(self.surface(slices, state.stats))
    }

    pub(crate) fn slice(&self, level: usize, u: &[f64]) -> TimeSlice {
        TimeSlice {
            level,
            tau: self.grid.tau(level),
            values: u.to_vec(),
        }
    }

    pub(crate) fn surface(&self, slices: Vec<TimeSlice>, stats: SolverStats) -> SolutionSurface {
        SolutionSurface {
            grid: self.grid,
            params: self.params,
            style: self.style,
            smoothed: self.config.smoothing,
            slices,
            stats,
        }
    }
}

/// Linear extrapolation `2 U^m - U^{m-1}`, the starting iterate of a step.
pub fn extrapolate(prev: &[f64], curr: &[f64]) -> Vec<f64> {
    prev.iter().zip(curr).map(|(p, c)| 2.0 * c - p).collect()
}

/// Prices the European put on `grid`.
pub fn solve_european(params: &MarketParams, grid: &GridSpec, config: &SolverConfig) -> Result<SolutionSurface> {
    Stepper::new(params, grid, OptionStyle::European, config)?.solve()
}
