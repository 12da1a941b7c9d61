//! Run configuration: a single JSON file validated up front, with optional
//! command-line overrides layered on top.

use crate::continuation::ContinuationConfig;
use crate::error::{Error, Result};
use crate::operator::{self, Grid2D};
use crate::presets;
use crate::vorticity::{VorticitySegment, VorticitySpec};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Vorticity selection: a named preset or an explicit segment list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, untagged)]
pub enum VorticityConfig {
    Preset { preset: String },
    Segments {
        segments: Vec<VorticitySegment>,
        decay_r: f64,
    },
}

impl VorticityConfig {
    pub fn build(&self) -> Result<VorticitySpec> {
        match self {
            VorticityConfig::Preset { preset } => match preset.as_str() {
                "v0" => Ok(presets::v0()),
                "v1" => Ok(presets::v1()),
                "v2" => Ok(presets::v2()),
                other => Err(Error::Config(format!(
                    "unknown vorticity preset '{other}' (expected v0, v1 or v2)"
                ))),
            },
            VorticityConfig::Segments { segments, decay_r } => {
                // JSON has no infinity literal: any s_hi >= 1e300 marks the
                // unbounded final segment
                let segments = segments
                    .iter()
                    .map(|seg| {
                        let mut seg = seg.clone();
                        if seg.s_hi >= 1e300 {
                            seg.s_hi = f64::INFINITY;
                        }
                        seg
                    })
                    .collect();
                VorticitySpec::new(segments, *decay_r)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_nq")]
    pub nq: usize,
    #[serde(default = "default_np_upper")]
    pub np_upper: usize,
    #[serde(default = "default_np_lower")]
    pub np_lower: usize,
    #[serde(default = "default_p_max")]
    pub p_max: f64,
}

fn default_nq() -> usize {
    16
}
fn default_np_upper() -> usize {
    32
}
fn default_np_lower() -> usize {
    512
}
fn default_p_max() -> f64 {
    8.0 * std::f64::consts::PI
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            nq: default_nq(),
            np_upper: default_np_upper(),
            np_lower: default_np_lower(),
            p_max: default_p_max(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_mode_k")]
    pub mode_k: f64,
    /// optional (lo, hi) override of the lambda bracket.
    #[serde(default)]
    pub bracket: Option<(f64, f64)>,
}

fn default_mode_k() -> f64 {
    1.0
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig {
            epsilon: 0.0,
            mode_k: default_mode_k(),
            bracket: None,
        }
    }
}

/// Serializable mirror of [`ContinuationConfig`], all fields optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationOptions {
    pub s0: Option<f64>,
    pub ds: Option<f64>,
    pub ds_min: Option<f64>,
    pub ds_max: Option<f64>,
    pub newton_tol: Option<f64>,
    pub max_newton: Option<usize>,
    pub max_steps: Option<usize>,
    pub delta: Option<f64>,
    pub lambda_max: Option<f64>,
    pub hp_max: Option<f64>,
    pub epsilon_schedule: Option<Vec<f64>>,
}

impl ContinuationOptions {
    pub fn build(&self) -> Result<ContinuationConfig> {
        let d = ContinuationConfig::default();
        let cfg = ContinuationConfig {
            s0: self.s0.unwrap_or(d.s0),
            ds: self.ds.unwrap_or(d.ds),
            ds_min: self.ds_min.unwrap_or(d.ds_min),
            ds_max: self.ds_max.unwrap_or(d.ds_max),
            newton_tol: self.newton_tol.unwrap_or(d.newton_tol),
            max_newton: self.max_newton.unwrap_or(d.max_newton),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
            delta: self.delta.unwrap_or(d.delta),
            lambda_max: self.lambda_max.unwrap_or(d.lambda_max),
            hp_max: self.hp_max.unwrap_or(d.hp_max),
            epsilon_schedule: self
                .epsilon_schedule
                .clone()
                .unwrap_or(d.epsilon_schedule),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default)]
    pub p_atm: f64,
    pub vorticity: VorticityConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub dispersion: DispersionConfig,
    #[serde(default)]
    pub continuation: ContinuationOptions,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_gravity() -> f64 {
    9.81
}
fn default_output_dir() -> String {
    "out".into()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gravity > 0.0) {
            return Err(Error::Config(format!(
                "gravity must be positive, got {}",
                self.gravity
            )));
        }
        if !(self.grid.p_max > 0.0) {
            return Err(Error::Config(format!(
                "p_max must be positive, got {}",
                self.grid.p_max
            )));
        }
        if self.dispersion.epsilon < 0.0 {
            return Err(Error::Config("epsilon must be nonnegative".into()));
        }
        if let Some((lo, hi)) = self.dispersion.bracket {
            if !(lo < hi) {
                return Err(Error::Config(format!(
                    "bracket lower bound {lo} must be below upper bound {hi}"
                )));
            }
        }
        self.continuation.build()?;
        self.vorticity.build()?;
        Ok(())
    }

    pub fn build_spec(&self) -> Result<VorticitySpec> {
        self.vorticity.build()
    }

    pub fn build_grid(&self, spec: &VorticitySpec) -> Result<Grid2D> {
        operator::build_grid(
            self.grid.nq,
            self.grid.np_upper,
            self.grid.np_lower,
            self.grid.p_max,
            spec,
        )
    }
}
