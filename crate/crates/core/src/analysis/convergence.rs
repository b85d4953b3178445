//! Grid-refinement error measures and observed orders.

use serde::Serialize;

use crate::american::solve_american;
use crate::error::{PricingError, Result};
use crate::grid::{GridSpec, MarketParams, OptionStyle};
use crate::par::{self, Execution};
use crate::stepper::{solve_european, SolverConfig};
use crate::surface::SolutionSurface;

/// `||U_ref - U|| / ||U_ref||` in the discrete l2 norm over the nodes of the
/// coarse grid, which must be a subset of the reference nodes.
pub fn relative_l2_error(u: &[f64], grid: &GridSpec, u_ref: &[f64], ref_grid: &GridSpec) -> Result<f64> {
    if u.len() != grid.nodes() || u_ref.len() != ref_grid.nodes() {
        return Err(PricingError::DimensionMismatch("values do not match their grids".into()));
    }
    let (n, nr) = (grid.intervals(), ref_grid.intervals());
    if (grid.half_width() - ref_grid.half_width()).abs() > 1e-14 * grid.half_width() || nr % n != 0 {
        return Err(PricingError::MisalignedGrids(format!(
            "N = {n} on [-{}, {}] is not nested in N = {nr} on [-{}, {}]",
            grid.half_width(),
            grid.half_width(),
            ref_grid.half_width(),
            ref_grid.half_width()
        )));
    }
    let stride = nr / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in u.iter().enumerate() {
        let r = u_ref[i * stride];
        num += (r - v) * (r - v);
        den += r * r;
    }
    if den == 0.0 {
        return Err(PricingError::Degenerate("reference solution is identically zero".into()));
    }
    Ok((num / den).sqrt())
}

/// Least-squares fit of `log(error) = c - order log(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderFit {
    pub order: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn convergence_order(intervals: &[usize], errors: &[f64]) -> Result<OrderFit> {
    if intervals.len() != errors.len() {
        return Err(PricingError::DimensionMismatch(format!(
            "{} grid sizes but {} errors",
            intervals.len(),
            errors.len()
        )));
    }
    if errors.len() < 3 {
        return Err(PricingError::Degenerate(format!("need at least 3 points, got {}", errors.len())));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(PricingError::Degenerate(format!("errors must be positive and finite, got {e}")));
    }
    let xs: Vec<f64> = intervals.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(PricingError::Degenerate("grid sizes are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(OrderFit {
        order: -slope,
        intercept,
        r_squared,
    })
}

/// Solves one run of either style.
pub fn solve(style: OptionStyle, params: &MarketParams, grid: &GridSpec, config: &SolverConfig) -> Result<SolutionSurface> {
    match style {
        OptionStyle::European => solve_european(params, grid, config),
        OptionStyle::American => solve_american(params, grid, config),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub style: OptionStyle,
    pub smoothed: bool,
    pub reference_intervals: usize,
    pub intervals: Vec<usize>,
    pub errors: Vec<f64>,
    pub fit: OrderFit,
}

/// Relative errors of runs at each `intervals` entry against `reference`,
/// and the fitted order. The runs use the reference's half-width and
/// `config.mesh_ratio`.
pub fn convergence_study(
    style: OptionStyle,
    params: &MarketParams,
    config: &SolverConfig,
    intervals: &[usize],
    reference: &SolutionSurface,
    exec: Execution,
) -> Result<ConvergenceReport> {
    let ref_grid = reference.grid;
    let errors = par::map(exec, intervals, |&n| -> Result<f64> {
        let grid = GridSpec::with_mesh_ratio(ref_grid.half_width(), n, config.mesh_ratio, params.maturity)?;
        let run = solve(style, params, &grid, config)?;
        relative_l2_error(&run.final_slice().values, &grid, &reference.final_slice().values, &ref_grid)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let fit = convergence_order(intervals, &errors)?;
    tracing::info!(?style, smoothed = config.smoothing, order = fit.order, "convergence study");
    Ok(ConvergenceReport {
        style,
        smoothed: config.smoothing,
        reference_intervals: ref_grid.intervals(),
        intervals: intervals.to_vec(),
        errors,
        fit,
    })
}
