//! Experiment configuration files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "setting": 1,
//!   "models": ["D/inf/F", "D/1/Z"],
//!   "x0": [0, 100, 250],
//!   "setup_costs": [0, 1000, 5000]
//! }
//! ```
//!
//! Instead of `setting`, a file may give `intensity` and `costs` directly.
//! Unknown keys are rejected so that a typo never silently falls back to a
//! default.

use std::path::{Path, PathBuf};

use eol_core::costkernel::{CostParameters, LostSalesConvention};
use eol_core::demand::{IntensityKind, IntensityModel};
use eol_core::solver::ModelSpec;
use serde::{Deserialize, Serialize};

use crate::settings::{Setting, STUDY_SETUP_COSTS};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_X_MAX: usize = 1200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum IntensitySpec {
    /// One of the shapes of the numerical study, scaled to `total_demand`.
    Named {
        kind: IntensityKind,
        horizon: usize,
        total_demand: f64,
    },
    /// Explicit per-period rates.
    Rates { rates: Vec<f64> },
    /// A rate table file, one rate per line (`#` comments allowed). Relative
    /// paths resolve against the config file.
    File { rates_file: PathBuf },
}

/// Cost scalars; anything left out takes its base-case value. The setup
/// cost is not here: it comes from `setup_costs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSpec {
    pub c_bar: f64,
    pub c1: f64,
    pub c2_bar: f64,
    pub c3_bar: f64,
    pub gamma: f64,
    pub c4: f64,
    pub delta: f64,
}

impl Default for CostSpec {
    fn default() -> Self {
        let b = CostParameters::base_case();
        Self {
            c_bar: b.c_bar,
            c1: b.c1,
            c2_bar: b.c2_bar,
            c3_bar: b.c3_bar,
            gamma: b.gamma,
            c4: b.c4,
            delta: b.delta,
        }
    }
}

impl CostSpec {
    pub fn params(&self) -> CostParameters {
        CostParameters {
            c_bar: self.c_bar,
            setup_cost: 0.0,
            c1: self.c1,
            c2_bar: self.c2_bar,
            c3_bar: self.c3_bar,
            gamma: self.gamma,
            c4: self.c4,
            delta: self.delta,
        }
    }
}

fn default_x0() -> Vec<usize> {
    vec![0, 100, 250]
}

fn default_setup_costs() -> Vec<f64> {
    STUDY_SETUP_COSTS.to_vec()
}

fn default_x_max() -> usize {
    DEFAULT_X_MAX
}

fn default_tau_step() -> f64 {
    eol_core::analytics::DEFAULT_TAU_STEP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<IntensitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<CostSpec>,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default = "default_x0")]
    pub x0: Vec<usize>,
    #[serde(default = "default_setup_costs")]
    pub setup_costs: Vec<f64>,
    #[serde(default = "default_x_max")]
    pub x_max: usize,
    #[serde(default)]
    pub convention: LostSalesConvention,
    #[serde(default = "default_tau_step")]
    pub tau_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Directory the config was read from; resolves relative rate files.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The base case with the study's K and x grids and no models.
    pub fn base_case() -> Self {
        Self::for_setting(1)
    }

    pub fn for_setting(id: u32) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            setting: Some(id),
            intensity: None,
            costs: None,
            models: Vec::new(),
            x0: default_x0(),
            setup_costs: default_setup_costs(),
            x_max: DEFAULT_X_MAX,
            convention: LostSalesConvention::default(),
            tau_step: default_tau_step(),
            output_dir: None,
            base_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        config.validate_shape()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks that need no solving: version, field ranges, exclusivity.
    pub fn validate_shape(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Validation(msg));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        match (self.setting, &self.intensity, &self.costs) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return fail("setting: give either a setting number or intensity/costs, not both".into())
            }
            (None, None, _) => return fail("intensity: required when no setting number is given".into()),
            _ => {}
        }
        if let Some(id) = self.setting {
            Setting::from_id(id)?;
        }
        if self.x0.is_empty() {
            return fail("x0: at least one initial stock is needed".into());
        }
        if let Some(&x) = self.x0.iter().find(|&&x| x > self.x_max) {
            return fail(format!("x0: initial stock {x} exceeds x_max {}", self.x_max));
        }
        if self.setup_costs.is_empty() {
            return fail("setup_costs: at least one value is needed".into());
        }
        if let Some(k) = self.setup_costs.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return fail(format!("setup_costs: {k} is not a finite non-negative number"));
        }
        if !(self.tau_step.is_finite() && self.tau_step > 0.0) {
            return fail(format!("tau_step: must be positive, got {}", self.tau_step));
        }
        if let Some(costs) = &self.costs {
            costs.params().validate().map_err(|e| CliError::Validation(format!("costs: {e}")))?;
        }
        Ok(())
    }

    /// Like [`validate_shape`](Self::validate_shape), and also requires at least one model.
    pub fn validate(&self) -> Result<(), CliError> {
        self.validate_shape()?;
        if self.models.is_empty() {
            return Err(CliError::Validation("models: the model list is empty".into()));
        }
        Ok(())
    }

    /// Intensity and the cost parameters with K = 0.
    pub fn problem(&self) -> Result<(IntensityModel, CostParameters), CliError> {
        self.validate_shape()?;
        if let Some(id) = self.setting {
            let s = Setting::from_id(id)?;
            return Ok((s.model()?, s.params()));
        }
        let params = self.costs.unwrap_or_default().params();
        let model = match self.intensity.as_ref().expect("checked by validate_shape") {
            IntensitySpec::Named {
                kind,
                horizon,
                total_demand,
            } => IntensityModel::named(*kind, *horizon, *total_demand)?,
            IntensitySpec::Rates { rates } => IntensityModel::from_rates(rates.clone())?,
            IntensitySpec::File { rates_file } => {
                let path = match &self.base_dir {
                    Some(dir) if rates_file.is_relative() => dir.join(rates_file),
                    _ => rates_file.clone(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Validation(format!("intensity: cannot read {}: {e}", path.display())))?;
                IntensityModel::parse_table(&text)?
            }
        };
        Ok((model, params))
    }
}
