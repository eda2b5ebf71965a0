//! TOML experiment configuration: one file describes one experiment and its
//! output directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TrawlError};
use crate::seed::SeedSpec;
use crate::simulator::{EnsembleConfig, DEFAULT_CELL_BUDGET};
use crate::trawl::TrawlSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub trawl: TrawlSpec,
    pub seed: SeedSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub delta: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { delta: 0.05, n: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default = "default_budget")]
    pub cell_budget: u64,
}

fn default_budget() -> u64 {
    DEFAULT_CELL_BUDGET as u64
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            replications: 1000,
            master_seed: 0,
            cell_budget: default_budget(),
        }
    }
}

/// `points` log-spaced values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl LogGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let ratio = self.max / self.min;
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| match i {
                0 => self.min,
                i if i + 1 == self.points => self.max,
                i => self.min * ratio.powf(i as f64 / last),
            })
            .collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.min > 0.0 && self.max > self.min && self.max.is_finite() && self.points >= 2) {
            return Err(TrawlError::Config(format!(
                "{name} must satisfy 0 < min < max with at least two points"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Analytic,
    MonteCarlo,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Cumulant orders evaluated by the `cumulants` command.
    #[serde(default = "default_orders")]
    pub orders: Vec<u32>,
    #[serde(default = "default_q_grid")]
    pub q_grid: Vec<f64>,
    /// Times for cumulant curves.
    #[serde(default = "default_t_grid")]
    pub t_grid: LogGrid,
    /// Times for analytic moment curves; high moments need a far horizon
    /// before the leading power dominates.
    #[serde(default = "default_moment_t_grid")]
    pub moment_t_grid: LogGrid,
    #[serde(default = "default_decades")]
    pub fit_window_decades: f64,
    #[serde(default = "default_route")]
    pub route: Route,
}

fn default_orders() -> Vec<u32> {
    vec![1, 2, 3, 4]
}
fn default_q_grid() -> Vec<f64> {
    vec![2.0, 4.0]
}
fn default_t_grid() -> LogGrid {
    LogGrid {
        min: 1e3,
        max: 1e4,
        points: 20,
    }
}
fn default_moment_t_grid() -> LogGrid {
    LogGrid {
        min: 1e7,
        max: 1e8,
        points: 20,
    }
}
fn default_decades() -> f64 {
    1.0
}
fn default_route() -> Route {
    Route::Analytic
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            orders: default_orders(),
            q_grid: default_q_grid(),
            t_grid: default_t_grid(),
            moment_t_grid: default_moment_t_grid(),
            fit_window_decades: default_decades(),
            route: default_route(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            formats: default_formats(),
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// Settings for the `verify` invariant suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Replications and steps of the Monte Carlo checks.
    pub replications: usize,
    pub n: usize,
    /// Width of statistical acceptance bands in standard errors.
    pub z: f64,
    /// Relative agreement required between kernel and component routes.
    pub kernel_tolerance: f64,
    /// Relative accuracy requested from the 2D kernel quadrature.
    pub quadrature_tolerance: f64,
    pub kernel_orders: Vec<u32>,
    pub kernel_times: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            replications: 2000,
            n: 200,
            z: 4.0,
            kernel_tolerance: 1e-6,
            quadrature_tolerance: 1e-9,
            kernel_orders: vec![2, 3, 4],
            kernel_times: vec![1.0, 5.0, 20.0],
        }
    }
}

fn bad(msg: impl Into<String>) -> TrawlError {
    TrawlError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: TrawlError| bad(e.to_string());
        self.trawl.validate().map_err(wrap)?;
        self.seed.validate().map_err(wrap)?;
        if !(self.grid.delta > 0.0 && self.grid.delta.is_finite()) {
            return Err(bad(format!("grid.delta must be positive, got {}", self.grid.delta)));
        }
        if self.grid.n == 0 {
            return Err(bad("grid.n must be positive"));
        }
        if self.ensemble.replications == 0 {
            return Err(bad("ensemble.replications must be positive"));
        }
        let a = &self.analysis;
        if a.orders.is_empty() || a.orders.contains(&0) {
            return Err(bad("analysis.orders must be non-empty positive integers"));
        }
        if a.q_grid.is_empty() || a.q_grid.iter().any(|q| !(*q > 0.0)) || a.q_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("analysis.q_grid must be positive and strictly increasing"));
        }
        a.t_grid.validate("analysis.t_grid")?;
        a.moment_t_grid.validate("analysis.moment_t_grid")?;
        if !(a.fit_window_decades >= 1.0) {
            return Err(bad("analysis.fit_window_decades must be at least 1"));
        }
        if self.output.formats.is_empty() {
            return Err(bad("output.formats must not be empty"));
        }
        let v = &self.verify;
        if v.replications < 2 || v.n < 10 {
            return Err(bad("verify needs replications >= 2 and n >= 10"));
        }
        if !(v.z > 0.0 && v.kernel_tolerance > 0.0 && v.quadrature_tolerance > 0.0) {
            return Err(bad("verify.z and tolerances must be positive"));
        }
        if v.kernel_orders.contains(&0) || v.kernel_times.iter().any(|t| !(*t > 0.0)) {
            return Err(bad("verify.kernel_orders and kernel_times must be positive"));
        }
        Ok(())
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        EnsembleConfig {
            trawl: self.trawl,
            seed: self.seed,
            delta: self.grid.delta,
            n: self.grid.n,
            replications: self.ensemble.replications,
            master_seed: self.ensemble.master_seed,
            cell_budget: self.ensemble.cell_budget as u128,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[trawl]
family = "gamma"
alpha = 0.5

[seed]
family = "poisson"
nu = 1.0
"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.trawl, TrawlSpec::gamma(0.5).unwrap());
        assert!(cfg.seed.centered);
        assert_eq!(cfg.grid, GridConfig::default());
        assert_eq!(cfg.analysis.route, Route::Analytic);
        assert_eq!(cfg.ensemble.cell_budget, 1 << 33);
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        cfg.seed = SeedSpec::gamma(2.0, 3.0).unwrap().with_centering(false);
        cfg.analysis.route = Route::Both;
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            "[trawl]\nfamily = \"gamma\"\n[seed]\nfamily = \"poisson\"\nnu = 1.0\n",
            &format!("{MINIMAL}\n[grid]\ndelta = 0.0\nn = 4\n"),
            &format!("{MINIMAL}\n[grid]\ndelta = 0.1\nn = 0\n"),
            &format!("{MINIMAL}\n[analysis]\nq_grid = [4.0, 2.0]\n"),
            &format!("{MINIMAL}\n[analysis]\nt_grid = {{ min = 10.0, max = 1.0, points = 5 }}\n"),
            &format!("{MINIMAL}\n[bogus]\nx = 1\n"),
            "[trawl]\nfamily = \"weibull\"\nalpha = 1.0\n[seed]\nfamily = \"poisson\"\nnu = 1.0\n",
            "[trawl]\nfamily = \"gamma\"\nalpha = -1.0\n[seed]\nfamily = \"poisson\"\nnu = 1.0\n",
        ];
        for text in cases {
            assert!(
                matches!(ExperimentConfig::from_toml_str(text), Err(TrawlError::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn log_grid_endpoints_exact() {
        let g = LogGrid {
            min: 1e3,
            max: 1e4,
            points: 20,
        }
        .values();
        assert_eq!(g.len(), 20);
        assert_eq!((g[0], g[19]), (1e3, 1e4));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
