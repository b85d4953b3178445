//! The subcommands.

use std::path::Path;

use anyhow::{Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use merton_cfd::analysis::convergence::solve;
use merton_cfd::analysis::{
    amplification_sweep, convergence_study, dispersion_table, stability_sweep, AmplificationReport,
};
use merton_cfd::grid::local_volatility_bound;
use merton_cfd::{compute_greeks, par, Execution, GridSpec, OptionStyle, SolutionSurface, VolMode};
use serde::{Deserialize, Serialize};

use crate::artifacts::{full, price, Artifacts, RunStats};
use crate::config::Resolved;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    European,
    American,
}

impl From<Style> for OptionStyle {
    fn from(s: Style) -> Self {
        match s {
            Style::European => OptionStyle::European,
            Style::American => OptionStyle::American,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PriceArgs {
    /// Also write the final level at every grid node.
    #[arg(long)]
    #[serde(default)]
    pub surface: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GreeksArgs {
    #[arg(long, value_enum, default_value = "european")]
    pub style: Style,
    #[arg(long)]
    #[serde(default)]
    pub surface: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct StudyArgs {
    #[arg(long, value_enum, default_value = "european")]
    pub style: Style,
    /// Grids whose errors are fitted; each must divide the reference.
    #[arg(long, value_delimiter = ',', default_value = "48,96,192,384")]
    pub intervals: Vec<usize>,
    /// Intervals of the reference run.
    #[arg(long, default_value_t = 3072)]
    pub reference: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DispersionArgs {
    /// Number of equally spaced frequencies in [0, pi].
    #[arg(long, default_value_t = 33)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "european")]
    pub style: Style,
    #[arg(long, value_delimiter = ',', default_value = "96,192,384")]
    pub intervals: Vec<usize>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0"
    )]
    pub ratios: Vec<f64>,
    #[arg(long, default_value_t = 3072)]
    pub reference: usize,
    /// Largest accepted max/min error ratio within a row.
    #[arg(long, default_value_t = 1.05)]
    pub threshold: f64,
    /// Root samples of the amplification sweep.
    #[arg(long, default_value_t = 256)]
    pub thetas: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TablesArgs {
    /// Tables to reproduce, from 2, 3, 4 and 5; a bare flag selects none.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub tables: Option<Vec<u8>>,
    /// Accepted relative deviation.
    #[arg(long, default_value_t = 0.005)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "options", rename_all = "kebab-case")]
pub enum Task {
    /// European put prices at the configured spots.
    PriceEuropean(PriceArgs),
    /// American put prices at the configured spots.
    PriceAmerican(PriceArgs),
    /// Prices, Delta and Gamma at the configured spots.
    Greeks(GreeksArgs),
    /// Observed order of accuracy against a fine reference run.
    ConvergenceStudy(StudyArgs),
    /// Modified wavenumbers of the difference schemes.
    DispersionReport(DispersionArgs),
    /// Errors over a (dx, mesh ratio) table and amplification roots.
    StabilitySweep(SweepArgs),
    /// Recomputes the reference table cells and checks them.
    ReproduceTables(TablesArgs),
}

pub enum Outcome {
    Passed,
    Failed,
}

pub fn execute(task: &Task, cfg: &Resolved, out: &Path, exec: Execution) -> Result<Outcome> {
    let mut art = Artifacts::new(out, cfg)?;
    match task {
        Task::PriceEuropean(a) => price_command(OptionStyle::European, a, cfg, &mut art)?,
        Task::PriceAmerican(a) => price_command(OptionStyle::American, a, cfg, &mut art)?,
        Task::Greeks(a) => greeks_command(a, cfg, &mut art)?,
        Task::ConvergenceStudy(a) => convergence_command(a, cfg, &mut art, exec)?,
        Task::DispersionReport(a) => dispersion_command(a, &mut art)?,
        Task::StabilitySweep(a) => sweep_command(a, cfg, &mut art, exec)?,
        Task::ReproduceTables(a) => tables_command(a, cfg, &mut art, exec)?,
    }
    let passed = art.passed;
    let manifest = art.finish(&serde_json::to_value(task)?, cfg)?;
    tracing::info!(manifest = %manifest.display(), "done");
    Ok(match passed {
        Some(false) => Outcome::Failed,
        _ => Outcome::Passed,
    })
}

fn style_id(style: OptionStyle) -> &'static str {
    match style {
        OptionStyle::European => "european",
        OptionStyle::American => "american",
    }
}

fn run_solver(style: OptionStyle, cfg: &Resolved, art: &mut Artifacts) -> Result<SolutionSurface> {
    let surface = art
        .phase("solve", || solve(style, &cfg.params, &cfg.grid, &cfg.solver))
        .with_context(|| format!("{} solve failed", style_id(style)))?;
    art.stats.push(RunStats::new(style_id(style), &surface.stats));
    Ok(surface)
}

fn surface_rows(surface: &SolutionSurface) -> Vec<Vec<String>> {
    let grid = surface.grid;
    surface
        .spots()
        .iter()
        .zip(&surface.final_slice().values)
        .enumerate()
        .map(|(n, (s, u))| vec![full(grid.x(n)), full(*s), full(*u)])
        .collect()
}

fn price_command(style: OptionStyle, a: &PriceArgs, cfg: &Resolved, art: &mut Artifacts) -> Result<()> {
    let surface = run_solver(style, cfg, art)?;
    let rows = cfg
        .spots
        .iter()
        .map(|&s| Ok(vec![full(s), price(surface.price_at(s)?)]))
        .collect::<Result<Vec<_>>>()?;
    art.csv("prices.csv", &["S", "price"], &rows)?;
    if a.surface {
        art.csv("surface.csv", &["x", "S", "price"], &surface_rows(&surface))?;
    }
    Ok(())
}

fn greeks_command(a: &GreeksArgs, cfg: &Resolved, art: &mut Artifacts) -> Result<()> {
    let surface = run_solver(a.style.into(), cfg, art)?;
    let greeks = compute_greeks(&surface.final_slice().values, &surface.grid, &surface.params)?;
    let rows = cfg
        .spots
        .iter()
        .map(|&s| {
            Ok(vec![
                full(s),
                price(surface.price_at(s)?),
                price(greeks.delta_at(s)?),
                price(greeks.gamma_at(s)?),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    art.csv("greeks.csv", &["S", "price", "delta", "gamma"], &rows)?;
    if a.surface {
        let rows: Vec<Vec<String>> = greeks
            .spots
            .iter()
            .enumerate()
            .map(|(n, s)| {
                vec![
                    full(surface.grid.x(n)),
                    full(*s),
                    full(surface.final_slice().values[n]),
                    full(greeks.delta[n]),
                    full(greeks.gamma[n]),
                ]
            })
            .collect();
        art.csv("greeks_surface.csv", &["x", "S", "price", "delta", "gamma"], &rows)?;
    }
    Ok(())
}

fn reference_run(style: OptionStyle, intervals: usize, cfg: &Resolved, art: &mut Artifacts) -> Result<SolutionSurface> {
    let grid = GridSpec::with_mesh_ratio(cfg.grid.half_width(), intervals, cfg.solver.mesh_ratio, cfg.params.maturity)?;
    let surface = art
        .phase("reference", || solve(style, &cfg.params, &grid, &cfg.solver))
        .context("reference solve failed")?;
    art.stats.push(RunStats::new(format!("reference-{intervals}"), &surface.stats));
    Ok(surface)
}

fn convergence_command(a: &StudyArgs, cfg: &Resolved, art: &mut Artifacts, exec: Execution) -> Result<()> {
    let style = a.style.into();
    let reference = reference_run(style, a.reference, cfg, art)?;
    let report = art.phase("study", || {
        convergence_study(style, &cfg.params, &cfg.solver, &a.intervals, &reference, exec)
    })?;
    let rows: Vec<Vec<String>> = report
        .intervals
        .iter()
        .zip(&report.errors)
        .map(|(&n, e)| vec![n.to_string(), full(2.0 * cfg.grid.half_width() / n as f64), full(*e)])
        .collect();
    art.csv("convergence.csv", &["N", "dx", "relative_error"], &rows)?;
    art.json("convergence.json", &report)?;
    Ok(())
}

fn dispersion_command(a: &DispersionArgs, art: &mut Artifacts) -> Result<()> {
    let rows: Vec<Vec<String>> = dispersion_table(a.points)
        .iter()
        .map(|r| vec![full(r.omega), r.scheme.id().to_string(), full(r.first), full(r.second)])
        .collect();
    art.csv("dispersion.csv", &["omega", "scheme", "first", "second"], &rows)?;
    Ok(())
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    sweep: &'a merton_cfd::analysis::StabilitySweep,
    spreads: Vec<f64>,
    threshold: f64,
    amplification: Vec<RootSummary>,
    passed: bool,
}

#[derive(Serialize)]
struct RootSummary {
    sigma: f64,
    bound: f64,
    max_modulus: f64,
    min_separation: f64,
    violations: usize,
}

impl From<&AmplificationReport> for RootSummary {
    fn from(r: &AmplificationReport) -> Self {
        Self {
            sigma: r.sigma,
            bound: r.bound,
            max_modulus: r.max_modulus(),
            min_separation: r.min_separation(),
            violations: r.violations.len(),
        }
    }
}

fn sweep_command(a: &SweepArgs, cfg: &Resolved, art: &mut Artifacts, exec: Execution) -> Result<()> {
    let style = a.style.into();
    let reference = reference_run(style, a.reference, cfg, art)?;
    let sweep = art.phase("sweep", || {
        stability_sweep(style, &cfg.params, &cfg.solver, &a.intervals, &a.ratios, &reference, exec)
    })?;
    let sigmas = match cfg.params.vol_mode {
        VolMode::Constant => vec![cfg.params.sigma],
        VolMode::Local => {
            let hi = local_volatility_bound(&cfg.grid, &cfg.params);
            vec![cfg.params.sigma.min(hi), hi]
        }
    };
    let mut roots = Vec::new();
    for &n in &a.intervals {
        for &ratio in &a.ratios {
            let grid = GridSpec::with_mesh_ratio(cfg.grid.half_width(), n, ratio, cfg.params.maturity)?;
            for &sigma in &sigmas {
                roots.push(RootSummary::from(&amplification_sweep(&grid, &cfg.params, sigma, a.thetas)?));
            }
        }
    }
    let mut rows = Vec::new();
    for row in &sweep.rows {
        for ((ratio, e), flag) in a.ratios.iter().zip(&row.errors).zip(&row.flagged) {
            rows.push(vec![row.intervals.to_string(), full(row.dx), full(*ratio), full(*e), flag.to_string()]);
        }
    }
    art.csv("stability.csv", &["N", "dx", "ratio", "relative_error", "flagged"], &rows)?;
    let spreads: Vec<f64> = sweep.rows.iter().map(|r| r.spread()).collect();
    let passed = spreads.iter().all(|s| *s < a.threshold) && roots.iter().all(|r| r.violations == 0);
    art.json(
        "stability.json",
        &SweepSummary {
            sweep: &sweep,
            spreads,
            threshold: a.threshold,
            amplification: roots,
            passed,
        },
    )?;
    art.passed = Some(passed);
    Ok(())
}

/// One reference table: its style, volatility mode and cells.
struct TableSpec {
    id: u8,
    style: OptionStyle,
    vol: VolMode,
    prices: [f64; 3],
    greeks: Option<([f64; 3], [f64; 3])>,
}

const TABLE_SPOTS: [f64; 3] = [90.0, 100.0, 110.0];

const TABLES: [TableSpec; 4] = [
    TableSpec {
        id: 2,
        style: OptionStyle::European,
        vol: VolMode::Constant,
        prices: [9.285416, 3.149018, 1.401182],
        greeks: Some(([-0.846716, -0.355661, -0.058103], [0.034862, 0.048828, 0.012131])),
    },
    TableSpec {
        id: 3,
        style: OptionStyle::European,
        vol: VolMode::Local,
        prices: [9.317322, 3.183682, 1.407743],
        greeks: None,
    },
    TableSpec {
        id: 4,
        style: OptionStyle::American,
        vol: VolMode::Constant,
        prices: [10.003862, 3.241208, 1.419791],
        greeks: None,
    },
    TableSpec {
        id: 5,
        style: OptionStyle::American,
        vol: VolMode::Local,
        prices: [10.008880, 3.275955, 1.426403],
        greeks: None,
    },
];

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub table: u8,
    pub quantity: &'static str,
    pub spot: f64,
    pub computed: f64,
    pub target: f64,
    pub deviation: f64,
    pub passed: bool,
}

#[derive(Serialize)]
struct TablesReport<'a> {
    tables: &'a [u8],
    tolerance: f64,
    cells: &'a [Cell],
    passed: bool,
}

fn table_cells(t: &TableSpec, cfg: &Resolved, tolerance: f64) -> Result<(Vec<Cell>, RunStats)> {
    let params = cfg.params.with_vol_mode(t.vol);
    let surface = solve(t.style, &params, &cfg.grid, &cfg.solver)
        .with_context(|| format!("table {} solve failed", t.id))?;
    let cell = |quantity, spot, computed: f64, target: f64| {
        let deviation = (computed - target).abs() / target.abs();
        Cell {
            table: t.id,
            quantity,
            spot,
            computed,
            target,
            deviation,
            passed: deviation <= tolerance,
        }
    };
    let mut cells = Vec::new();
    for (s, target) in TABLE_SPOTS.iter().zip(t.prices) {
        cells.push(cell("price", *s, surface.price_at(*s)?, target));
    }
    if let Some((delta, gamma)) = t.greeks {
        let g = compute_greeks(&surface.final_slice().values, &surface.grid, &params)?;
        for (s, target) in TABLE_SPOTS.iter().zip(delta) {
            cells.push(cell("delta", *s, g.delta_at(*s)?, target));
        }
        for (s, target) in TABLE_SPOTS.iter().zip(gamma) {
            cells.push(cell("gamma", *s, g.gamma_at(*s)?, target));
        }
    }
    Ok((cells, RunStats::new(format!("table-{}", t.id), &surface.stats)))
}

fn tables_command(a: &TablesArgs, cfg: &Resolved, art: &mut Artifacts, exec: Execution) -> Result<()> {
    let selected: Vec<u8> = match &a.tables {
        None => TABLES.iter().map(|t| t.id).collect(),
        Some(ids) => {
            let mut ids = ids.clone();
            ids.sort_unstable();
            ids.dedup();
            if let Some(bad) = ids.iter().find(|i| !TABLES.iter().any(|t| t.id == **i)) {
                anyhow::bail!("unknown table {bad}; choose from 2, 3, 4, 5");
            }
            ids
        }
    };
    let specs: Vec<&TableSpec> = TABLES.iter().filter(|t| selected.contains(&t.id)).collect();
    let results = art.phase("tables", || {
        par::map(exec, &specs, |t| table_cells(t, cfg, a.tolerance))
    });
    let mut cells = Vec::new();
    for r in results {
        let (c, stats) = r?;
        cells.extend(c);
        art.stats.push(stats);
    }
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                c.table.to_string(),
                c.quantity.to_string(),
                full(c.spot),
                price(c.computed),
                price(c.target),
                format!("{:.3e}", c.deviation),
                if c.passed { "pass" } else { "fail" }.to_string(),
            ]
        })
        .collect();
    art.csv(
        "tables.csv",
        &["table", "quantity", "S", "computed", "target", "relative_deviation", "status"],
        &rows,
    )?;
    let passed = cells.iter().all(|c| c.passed);
    art.json(
        "tables.json",
        &TablesReport {
            tables: &selected,
            tolerance: a.tolerance,
            cells: &cells,
            passed,
        },
    )?;
    for c in &cells {
        println!(
            "table {} {:<5} S={:<5} computed {:>10.6} target {:>10.6} dev {:.2e} {}",
            c.table,
            c.quantity,
            c.spot,
            c.computed,
            c.target,
            c.deviation,
            if c.passed { "PASS" } else { "FAIL" }
        );
    }
    art.passed = Some(passed);
    Ok(())
}
