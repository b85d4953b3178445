//! American put by operator splitting.
//!
//! Each step first solves the European system with the multiplier `psi` of
//! the previous level as an extra source, giving an intermediate `U~`. The
//! pair `(U, psi)` is then updated pointwise so that
//! `U - w psi_new = U~ - w psi_old`, `U >= f`, `psi_new >= 0` and
//! `psi_new (U - f) = 0`, with `w = dtau` on the first step and `2 dtau` after.

use crate::error::Result;
use crate::grid::{GridFunction, GridSpec, MarketParams, OptionStyle};
use crate::stepper::{extrapolate, Level, SolverConfig, SolverState, Stepper};
use crate::surface::{SolutionSurface, SolverStats};

/// Price and multiplier at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitState {
    /// Zero at the boundary nodes.
    pub psi: GridFunction,
    pub u: GridFunction,
}

/// Pointwise update of the split pair on interior nodes.
///
/// Writes the projected price into `tilde` and the new multiplier into `psi`.
pub fn project(tilde: &mut [f64], psi: &mut [f64], obstacle: &[f64], weight: f64) {
    for ((u, p), f) in tilde.iter_mut().zip(psi.iter_mut()).zip(obstacle) {
        let v = *u - weight * *p;
        if v >= *f {
            *u = v;
            *p = 0.0;
        } else {
            *u = *f;
            *p = (f - v) / weight;
        }
    }
}

/// Drives a [`Stepper`] through the splitting iteration.
#[derive(Debug)]
pub struct AmericanSolver {
    stepper: Stepper,
    obstacle: Vec<f64>,
}

impl AmericanSolver {
    pub fn new(params: &MarketParams, grid: &GridSpec, config: &SolverConfig) -> Result<Self> {
        Ok(Self::from_stepper(Stepper::new(params, grid, OptionStyle::American, config)?))
    }

    /// Uses the stepper's unsmoothed initial data as the exercise value.
    pub fn from_stepper(stepper: Stepper) -> Self {
        let obstacle = stepper.obstacle();
        Self { stepper, obstacle }
    }

    /// Replaces the exercise value at interior nodes.
    pub fn with_obstacle(mut self, obstacle: Vec<f64>) -> Self {
        assert_eq!(obstacle.len(), self.obstacle.len());
        self.obstacle = obstacle;
        self
    }

    pub fn stepper(&self) -> &Stepper {
        &self.stepper
    }

    pub fn obstacle(&self) -> &[f64] {
        &self.obstacle
    }

    fn full(&self, interior: Vec<f64>) -> GridFunction {
        let mut v = vec![0.0; interior.len() + 2];
        v[1..=interior.len()].copy_from_slice(&interior);
        GridFunction::new(self.stepper.grid(), v).expect("interior length matches grid")
    }

    /// Level 0 with a zero multiplier, and level 1 by the one-step block.
    pub fn start(&mut self) -> Result<(SolverState, SplitState)> {
        let u0 = self.stepper.initial_condition();
        let psi0 = vec![0.0; self.obstacle.len()];
        let ctx = self.stepper.assemble_imex(u0.values(), Some(&psi0));
        let (mut u1, it) = self.stepper.correcting_to_convergence(&ctx, u0.values())?;
        let n = u1.len() - 1;
        let mut psi = psi0;
        project(&mut u1[1..n], &mut psi, &self.obstacle, self.stepper.grid().dtau());
        let split = SplitState {
            psi: self.full(psi),
            u: GridFunction::new(self.stepper.grid(), u1.clone())?,
        };
        let state = SolverState {
            prev: self.stepper.level(u0.into_values()),
            curr: self.stepper.level(u1),
            level: 1,
            stats: SolverStats {
                iterations: vec![it as u32],
            },
        };
        Ok((state, split))
    }

    /// One three-level block; `psi` holds the multiplier of `state.curr` on
    /// entry and of the new level on exit.
    pub fn advance(&mut self, state: &mut SolverState, psi: &mut GridFunction) -> Result<()> {
        let next = state.level + 1;
        let n = self.stepper.grid().intervals();
        let ctx = self
            .stepper
            .assemble_leapfrog(&state.prev, &state.curr.u, next, Some(psi.interior()));
        let guess = extrapolate(&state.prev.u, &state.curr.u);
        let (mut u, it) = self.stepper.correcting_to_convergence(&ctx, &guess)?;
        let weight = 2.0 * self.stepper.grid().dtau();
        project(&mut u[1..n], &mut psi.values_mut()[1..n], &self.obstacle, weight);
        let new: Level = self.stepper.level(u);
        state.prev = std::mem::replace(&mut state.curr, new);
        state.level = next;
        state.stats.iterations.push(it as u32);
        Ok(())
    }

    pub fn solve(&mut self) -> Result<SolutionSurface> {
        let steps = self.stepper.grid().steps();
        let storage = self.stepper.config().storage;
        let (mut state, split) = self.start()?;
        let mut psi = split.psi;
        let mut slices = vec![self.stepper.slice(0, &state.prev.u)];
        if storage.keeps(1, steps) {
            slices.push(self.stepper.slice(1, &state.curr.u));
        }
        while state.level < steps {
            self.advance(&mut state, &mut psi)?;
            if storage.keeps(state.level, steps) {
                slices.push(self.stepper.slice(state.level, &state.curr.u));
            }
        }
        tracing::debug!(
            levels = steps,
            max_iterations = state.stats.max_iterations(),
            "american march finished"
        );
        Ok(self.stepper.surface(slices, state.stats))
    }
}

/// Level `m + 1` of the splitting from levels `m - 1` and `m`.
pub fn american_step(
    solver: &mut AmericanSolver,
    prev: &GridFunction,
    curr: &SplitState,
    next: usize,
) -> Result<SplitState> {
    let mut state = SolverState {
        prev: solver.stepper.level(prev.values().to_vec()),
        curr: solver.stepper.level(curr.u.values().to_vec()),
        level: next - 1,
        stats: SolverStats::default(),
    };
    let mut psi = curr.psi.clone();
    solver.advance(&mut state, &mut psi)?;
    Ok(SplitState {
        psi,
        u: GridFunction::new(solver.stepper.grid(), state.curr.u)?,
    })
}

/// Prices the American put on `grid`.
pub fn solve_american(params: &MarketParams, grid: &GridSpec, config: &SolverConfig) -> Result<SolutionSurface> {
    AmericanSolver::new(params, grid, config)?.solve()
}
