//! Scenario files: a versioned JSON schema describing one model plus the
//! simulation and output settings.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::credit_events::{DefaultSpec, RecoverySpec};
use crate::error::{Result, TsError};
use crate::forward_fields::{CoefField, CoefficientSpec, CurveSpec, InitialCurves};
use crate::model::{AIntegratorSpec, BondModel, RecoveryMode, ShortRateSpec};
use crate::risky_measure::RiskySpec;
use crate::time_paths::driver::DriverSpec;
use crate::time_paths::grid::TimeGrid;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub horizon: f64,
    pub step: f64,
    #[serde(default)]
    pub forced_times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardSection {
    pub f0: CurveSpec,
    pub g0: CurveSpec,
    pub a: CoefField,
    pub b: Vec<CoefField>,
    pub alpha: CoefField,
    pub beta: Vec<CoefField>,
    #[serde(default = "AIntegratorSpec::lebesgue")]
    pub a_integrator: AIntegratorSpec,
}

impl Default for ForwardSection {
    fn default() -> Self {
        ForwardSection {
            f0: CurveSpec::Const(0.0),
            g0: CurveSpec::Const(0.0),
            a: CoefField::Zero,
            b: vec![CoefField::Zero],
            alpha: CoefField::Zero,
            beta: vec![CoefField::Zero],
            a_integrator: AIntegratorSpec::lebesgue(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    #[serde(default = "default_z")]
    pub z_threshold: f64,
}

fn default_paths() -> usize {
    1000
}
fn default_seed() -> u64 {
    42
}
fn default_z() -> f64 {
    3.0
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            paths: default_paths(),
            seed: default_seed(),
            checkpoints: Vec::new(),
            z_threshold: default_z(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default = "yes")]
    pub prices_csv: bool,
    #[serde(default)]
    pub decomposition_csv: bool,
    #[serde(default = "yes")]
    pub residuals_json: bool,
    #[serde(default = "yes")]
    pub martingale_csv: bool,
    /// Cap on the number of paths written to per-path CSV tables.
    #[serde(default = "default_csv_paths")]
    pub max_csv_paths: usize,
}

fn yes() -> bool {
    true
}
fn default_csv_paths() -> usize {
    100
}

impl Default for OutputsSection {
    fn default() -> Self {
        OutputsSection {
            prices_csv: true,
            decomposition_csv: false,
            residuals_json: true,
            martingale_csv: true,
            max_csv_paths: default_csv_paths(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub grid: GridSection,
    #[serde(default = "default_driver")]
    pub driver: DriverSpec,
    #[serde(default)]
    pub forward_model: ForwardSection,
    #[serde(default = "RiskySpec::empty")]
    pub risky_measure: RiskySpec,
    #[serde(default)]
    pub default: Option<DefaultSpec>,
    #[serde(default)]
    pub recovery: Option<RecoverySpec>,
    #[serde(default = "default_rate")]
    pub short_rate: ShortRateSpec,
    pub maturities: Vec<f64>,
    #[serde(default)]
    pub construct_drift: bool,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub outputs: OutputsSection,
}

fn default_driver() -> DriverSpec {
    DriverSpec::zero(1)
}
fn default_rate() -> ShortRateSpec {
    ShortRateSpec::Diagonal
}

impl ScenarioFile {
    #[allow(clippy::should_implement_trait)] // fallible parse with schema diagnostics
    pub fn from_str(s: &str) -> Result<Self> {
        let sc: ScenarioFile = serde_json::from_str(s).map_err(|e| {
            TsError::Schema(format!("{e} (line {}, column {})", e.line(), e.column()))
        })?;
        sc.validate_header()?;
        Ok(sc)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_str(&s)
    }

    fn validate_header(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(TsError::Schema(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.version
            )));
        }
        if self.maturities.is_empty() {
            return Err(TsError::Schema("maturities must not be empty".into()));
        }
        if self.default.is_some() && self.recovery.is_some() {
            return Err(TsError::Schema(
                "give either a default section (zero recovery) or a recovery section, not both"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Default checkpoints: eight evenly spaced grid times up to the last
    /// maturity.
    pub fn checkpoints(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        if !self.mc.checkpoints.is_empty() {
            for t in &self.mc.checkpoints {
                grid.idx(*t)?;
            }
            return Ok(self.mc.checkpoints.clone());
        }
        let t_max = self
            .maturities
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let n = 8.min(grid.len() - 1);
        let mut out = Vec::with_capacity(n);
        for k in 1..=n {
            let target = t_max * k as f64 / n as f64;
            let idx = grid
                .times()
                .iter()
                .position(|&x| x >= target - 1e-12)
                .unwrap_or(grid.len() - 1);
            let t = grid.time(idx);
            if !out.iter().any(|&x: &f64| (x - t).abs() < 1e-12) {
                out.push(t);
            }
        }
        Ok(out)
    }

    /// Build the model: the grid is the uniform mesh forced through every
    /// scheduled time, maturity and checkpoint.
    pub fn to_model(&self) -> Result<BondModel> {
        let mode = if self.recovery.is_some() {
            RecoveryMode::General
        } else {
            RecoveryMode::Zero
        };
        let mut provisional = BondModel {
            grid: Arc::new(TimeGrid::build(self.grid.horizon, self.grid.step, &[])?),
            curves: InitialCurves {
                f0: self.forward_model.f0.clone(),
                g0: self.forward_model.g0.clone(),
            },
            coefs: CoefficientSpec {
                a: self.forward_model.a.clone(),
                b: self.forward_model.b.clone(),
                alpha: self.forward_model.alpha.clone(),
                beta: self.forward_model.beta.clone(),
            },
            driver: self.driver.clone(),
            a_integrator: self.forward_model.a_integrator.clone(),
            risky: self.risky_measure.clone(),
            mode,
            default_spec: self.default.clone().unwrap_or_else(DefaultSpec::none),
            recovery_spec: self.recovery.clone().unwrap_or_else(RecoverySpec::none),
            short_rate: self.short_rate.clone(),
        };
        let mut forced = self.grid.forced_times.clone();
        forced.extend(provisional.required_times());
        forced.extend(self.maturities.iter().cloned());
        forced.extend(self.mc.checkpoints.iter().cloned());
        let mut grid = TimeGrid::build(self.grid.horizon, self.grid.step, &forced)?;
        for t in provisional.driver.scheduled_times() {
            grid.mark_scheduled(t)?;
        }
        for a in &provisional.risky.atoms {
            grid.mark_risky(a.maturity)?;
        }
        provisional.grid = Arc::new(grid);
        provisional.validate().map_err(|e| match e {
            TsError::Invalid(m) => TsError::Schema(m),
            other => other,
        })?;
        for m in &self.maturities {
            provisional.grid.idx(*m)?;
        }
        Ok(provisional)
    }
}
