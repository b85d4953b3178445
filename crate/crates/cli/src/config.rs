//! Run configuration: defaults, JSON file values and flag overrides.

use std::path::Path;

use anyhow::{Context, Result};
use merton_cfd::{GridSpec, MarketParams, SolverConfig, VolMode};
use serde::{Deserialize, Serialize};

/// Every tunable of a run. `None` means "not given at this layer".
///
/// The JSON form uses the same keys; a manifest written by a previous run
/// can be passed back as a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub r: Option<f64>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    #[serde(rename = "mu_J")]
    pub mu_j: Option<f64>,
    #[serde(rename = "sigma_J")]
    pub sigma_j: Option<f64>,
    #[serde(rename = "K")]
    pub strike: Option<f64>,
    #[serde(rename = "S0")]
    pub spot: Option<f64>,
    #[serde(rename = "T")]
    pub maturity: Option<f64>,
    pub vol: Option<VolMode>,
    #[serde(rename = "L")]
    pub half_width: Option<f64>,
    #[serde(rename = "N")]
    pub intervals: Option<usize>,
    #[serde(rename = "M")]
    pub steps: Option<usize>,
    pub ratio: Option<f64>,
    pub smoothing: Option<bool>,
    pub epsilon: Option<f64>,
    pub max_inner_iterations: Option<usize>,
    /// Spot prices reported by the pricing commands.
    pub spots: Option<Vec<f64>>,
}

impl ConfigLayer {
    /// Values of `self` take precedence over `lower`.
    pub fn over(self, lower: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            r: self.r.or(lower.r),
            sigma: self.sigma.or(lower.sigma),
            lambda: self.lambda.or(lower.lambda),
            mu_j: self.mu_j.or(lower.mu_j),
            sigma_j: self.sigma_j.or(lower.sigma_j),
            strike: self.strike.or(lower.strike),
            spot: self.spot.or(lower.spot),
            maturity: self.maturity.or(lower.maturity),
            vol: self.vol.or(lower.vol),
            half_width: self.half_width.or(lower.half_width),
            intervals: self.intervals.or(lower.intervals),
            steps: self.steps.or(lower.steps),
            ratio: self.ratio.or(lower.ratio),
            smoothing: self.smoothing.or(lower.smoothing),
            epsilon: self.epsilon.or(lower.epsilon),
            max_inner_iterations: self.max_inner_iterations.or(lower.max_inner_iterations),
            spots: self.spots.or(lower.spots),
        }
    }

    pub fn defaults() -> ConfigLayer {
        let p = MarketParams::reference();
        let s = SolverConfig::default();
        ConfigLayer {
            r: Some(p.rate),
            sigma: Some(p.sigma),
            lambda: Some(p.lambda),
            mu_j: Some(p.jump_mean),
            sigma_j: Some(p.jump_std),
            strike: Some(p.strike),
            spot: Some(p.spot),
            maturity: Some(p.maturity),
            vol: Some(VolMode::Constant),
            half_width: Some(2.0),
            intervals: Some(1536),
            steps: None,
            ratio: Some(s.mesh_ratio),
            smoothing: Some(s.smoothing),
            epsilon: Some(s.epsilon_inner),
            max_inner_iterations: Some(s.max_inner_iterations),
            spots: Some(vec![80.0, 90.0, 100.0, 110.0, 120.0]),
        }
    }
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: ConfigLayer,
}

/// Reads a config file, or the `config` section of a manifest.
pub fn load_file(path: &Path) -> Result<ConfigLayer> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))?;
    if value.get("schema_version").is_some() && value.get("config").is_some() {
        let m: ManifestConfig = serde_json::from_value(value)
            .with_context(|| format!("invalid config section in manifest {}", path.display()))?;
        return Ok(m.config);
    }
    // parse from text again so errors carry line and column
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

/// Fully resolved inputs of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub params: MarketParams,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub spots: Vec<f64>,
    /// The layer the run was resolved from, every field present.
    pub layer: ConfigLayer,
}

fn need<T>(v: Option<T>, name: &str) -> Result<T> {
    v.with_context(|| format!("missing value for `{name}`"))
}

impl Resolved {
    pub fn from_layer(layer: ConfigLayer) -> Result<Self> {
        let params = MarketParams {
            rate: need(layer.r, "r")?,
            sigma: need(layer.sigma, "sigma")?,
            lambda: need(layer.lambda, "lambda")?,
            jump_mean: need(layer.mu_j, "mu_J")?,
            jump_std: need(layer.sigma_j, "sigma_J")?,
            strike: need(layer.strike, "K")?,
            spot: need(layer.spot, "S0")?,
            maturity: need(layer.maturity, "T")?,
            vol_mode: need(layer.vol, "vol")?,
        };
        params.validate()?;
        let half_width = need(layer.half_width, "L")?;
        let intervals = need(layer.intervals, "N")?;
        let ratio = need(layer.ratio, "ratio")?;
        let grid = match layer.steps {
            Some(m) => GridSpec::new(half_width, intervals, m, params.maturity)?,
            None => GridSpec::with_mesh_ratio(half_width, intervals, ratio, params.maturity)?,
        };
        let solver = SolverConfig {
            epsilon_inner: need(layer.epsilon, "epsilon")?,
            max_inner_iterations: need(layer.max_inner_iterations, "max_inner_iterations")?,
            mesh_ratio: grid.mesh_ratio(),
            smoothing: need(layer.smoothing, "smoothing")?,
            ..Default::default()
        };
        solver.validate()?;
        let spots = need(layer.spots.clone(), "spots")?;
        if let Some(s) = spots.iter().find(|s| !(**s > 0.0)) {
            anyhow::bail!("spot prices must be positive, got {s}");
        }
        let mut layer = layer;
        layer.steps = Some(grid.steps());
        Ok(Self {
            params,
            grid,
            solver,
            spots,
            layer,
        })
    }

    /// Comment line embedded at the top of every CSV.
    pub fn header(&self) -> String {
        format!(
            "# L={} N={} M={} ratio={} smoothing={} vol={}",
            self.grid.half_width(),
            self.grid.intervals(),
            self.grid.steps(),
            self.grid.mesh_ratio(),
            if self.solver.smoothing { "on" } else { "off" },
            match self.params.vol_mode {
                VolMode::Constant => "constant",
                VolMode::Local => "local",
            }
        )
    }
}
