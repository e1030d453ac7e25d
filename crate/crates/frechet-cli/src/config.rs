//! The single JSON configuration schema shared by every subcommand.
//! Unknown keys are rejected so benchmark archives stay diffable.

use serde::{Deserialize, Serialize};

use frechet::estimators::optimize::OptimizerConfig;
use frechet::estimators::EstimatorKind;
use frechet::rkhs::PdKernel;
use frechet::simulation::Scenario;
use frechet::smoothing::SmoothingKernel;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    /// Bandwidth grid for `benchmark`.
    #[serde(default)]
    pub bandwidths: Option<BandwidthGrid>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// Master seed for replicate derivation; defaults to the scenario seed.
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_smoothing")]
    pub smoothing_kernel: SmoothingKernel,
    #[serde(default = "default_pd_kernel")]
    pub pd_kernel: PdKernel,
    /// Pinned generator name; only "chacha8" is supported.
    #[serde(default = "default_rng")]
    pub rng: String,
    /// Benchmark error metric (geodesic by default; the torus reference
    /// values follow the chart-angle convention).
    #[serde(default)]
    pub error_metric: frechet::simulation::ErrorMetric,
    /// Options for `fit` (also supplies the bandwidth to `region`).
    #[serde(default)]
    pub fit: Option<FitOptions>,
    /// Options for `region`.
    #[serde(default)]
    pub region: Option<RegionOptions>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl BandwidthGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if !(self.min > 0.0 && self.max >= self.min && self.step > 0.0) {
            return Err(CliError::config(
                "bandwidths require 0 < min <= max and step > 0".into(),
            ));
        }
        let n = ((self.max - self.min) / self.step).round() as usize + 1;
        Ok((0..n).map(|k| self.min + self.step * k as f64).collect())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    pub h: f64,
    /// Evaluation grid; defaults to the scenario's standard 50-point grid.
    #[serde(default)]
    pub grid: Option<BandwidthGrid>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionOptions {
    pub x0: f64,
    pub alpha: f64,
    pub h: f64,
    #[serde(default = "default_bootstrap_reps")]
    pub bootstrap_reps: usize,
    #[serde(default = "default_region_grid_u")]
    pub grid_u: usize,
    #[serde(default = "default_region_grid_v")]
    pub grid_v: usize,
    #[serde(default)]
    pub bootstrap_seed: Option<u64>,
}

fn default_estimators() -> Vec<EstimatorKind> {
    vec![EstimatorKind::Nw, EstimatorKind::Lfr, EstimatorKind::Lfrk]
}

fn default_reps() -> usize {
    1
}

fn default_parallelism() -> usize {
    1
}

fn default_smoothing() -> SmoothingKernel {
    SmoothingKernel::Epanechnikov
}

fn default_pd_kernel() -> PdKernel {
    PdKernel::gaussian(1.5)
}

fn default_rng() -> String {
    "chacha8".into()
}

fn default_bootstrap_reps() -> usize {
    200
}

fn default_region_grid_u() -> usize {
    64
}

fn default_region_grid_v() -> usize {
    128
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.rng != "chacha8" {
            return Err(CliError::config(format!(
                "field 'rng': only \"chacha8\" is supported, got {:?}",
                self.rng
            )));
        }
        if self.parallelism == 0 {
            return Err(CliError::config("field 'parallelism': must be >= 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(CliError::config("field 'estimators': must be non-empty".into()));
        }
        self.scenario
            .kind
            .validate()
            .map_err(|e| CliError::config(format!("field 'scenario': {e}")))?;
        if self.scenario.n < 2 {
            return Err(CliError::config("field 'scenario.n': need n >= 2".into()));
        }
        self.optimizer
            .validate()
            .map_err(|e| CliError::config(format!("field 'optimizer': {e}")))?;
        if let Some(f) = &self.fit {
            if f.h <= 0.0 {
                return Err(CliError::config("field 'fit.h': must be positive".into()));
            }
        }
        if let Some(r) = &self.region {
            if !(0.0 < r.alpha && r.alpha < 1.0) {
                return Err(CliError::config("field 'region.alpha': must be in (0, 1)".into()));
            }
            if r.h <= 0.0 {
                return Err(CliError::config("field 'region.h': must be positive".into()));
            }
            if r.bootstrap_reps < 50 {
                return Err(CliError::config(
                    "field 'region.bootstrap_reps': must be >= 50".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed.unwrap_or(self.scenario.seed)
    }

    pub fn fit_config(&self, h: f64) -> frechet::estimators::FitConfig {
        frechet::estimators::FitConfig {
            h,
            kernel: self.smoothing_kernel,
            pd_kernel: Some(self.pd_kernel),
            optimizer: self.optimizer,
        }
    }
}
