//! Declarative experiment files (TOML) and their resolution into runnable
//! scenario and tracker configurations.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config, Error, Result};
use crate::gibbs::{AlphaMode, ChainConfig, InitStrategy, PriorKind, TrackerConfig};
use crate::metrics::OspaConfig;
use crate::models::kinematics::{KernelConfig, MotionModel};
use crate::models::niw::GaussianNiw;
use crate::simulate::{preset, ScenarioConfig, SensorConfig, PRESETS};

/// Environment variable that replaces `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "BNPMOT_OUTPUT_DIR";

/// Degrees of freedom of the default inverse-Wishart part of `H`.
const DEFAULT_NU: f64 = 10.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    /// Drop the preset's SNR and use its nominal noise variances.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub nominal_noise: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clutter_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSpec {
    Preset {
        preset: String,
        #[serde(default)]
        overrides: ScenarioOverrides,
    },
    Inline(ScenarioConfig),
}

impl ScenarioSpec {
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        match self {
            ScenarioSpec::Preset { preset: name, overrides } => {
                let mut s = preset(name).ok_or_else(|| {
                    config("scenario.preset", format!("unknown preset `{name}`; known: {}", PRESETS.join(", ")))
                })?;
                if overrides.nominal_noise {
                    if overrides.snr_db.is_some() {
                        return Err(config("scenario.overrides", "snr_db and nominal_noise are exclusive"));
                    }
                    s.snr_db = None;
                }
                if let Some(v) = overrides.snr_db {
                    s.snr_db = Some(v);
                }
                if let Some(v) = overrides.clutter_rate {
                    s.clutter_rate = v;
                }
                if let Some(v) = overrides.seed {
                    s.seed = v;
                }
                s.validate()?;
                Ok(s)
            }
            ScenarioSpec::Inline(s) => {
                s.validate()?;
                Ok(s.clone())
            }
        }
    }

    fn preset_name(&self) -> Option<&str> {
        match self {
            ScenarioSpec::Preset { preset, .. } => Some(preset),
            ScenarioSpec::Inline(_) => None,
        }
    }
}

/// A tracker to run. Unset fields take defaults derived from the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerSpec {
    /// Used in output file names.
    pub name: String,
    pub prior: PriorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<GaussianNiw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_survive: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_sd0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_sd0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitStrategy>,
}

impl TrackerSpec {
    pub fn ddp(name: &str) -> Self {
        Self::with_prior(name, PriorKind::DdpEmm)
    }

    pub fn dpy(name: &str, discount: f64) -> Self {
        Self::with_prior(name, PriorKind::DpyStp { discount })
    }

    fn with_prior(name: &str, prior: PriorKind) -> Self {
        Self {
            name: name.into(),
            prior,
            alpha: None,
            base: None,
            kernel: None,
            p_survive: None,
            velocity_sd0: None,
            turn_sd0: None,
            init: None,
        }
    }
}

fn default_mc_runs() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_settle() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub scenario: ScenarioSpec,
    pub trackers: Vec<TrackerSpec>,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub metrics: OspaConfig,
    #[serde(default = "default_mc_runs")]
    pub mc_runs: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads for Monte-Carlo runs; all cores when unset. Does not
    /// affect any output value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Steps after each birth or death excluded from steady-state scores.
    #[serde(default = "default_settle")]
    pub settle_steps: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config("config", e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Invariant(format!("config serialisation: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies [`OUTPUT_DIR_ENV`] if it is set and non-empty.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
            self.output_dir = PathBuf::from(dir);
        }
    }

    /// Checks everything that can be checked without simulating.
    pub fn validate(&self) -> Result<ScenarioConfig> {
        if self.name.trim().is_empty() {
            return Err(config("name", "must not be empty"));
        }
        if self.mc_runs == 0 {
            return Err(config("mc_runs", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(config("threads", "must be at least 1"));
        }
        if self.trackers.is_empty() {
            return Err(config("trackers", "at least one tracker is required"));
        }
        let scenario = self.scenario.resolve()?;
        self.chain.validate()?;
        self.metrics
            .validate()
            .map_err(|e| config("metrics", e.to_string()))?;
        let nominal = scenario.sensor.nominal_variances();
        for (i, t) in self.trackers.iter().enumerate() {
            let ok = !t.name.is_empty()
                && t.name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
            if !ok {
                return Err(config(format!("trackers[{i}].name"), "use letters, digits, '-' or '_'"));
            }
            if self.trackers[..i].iter().any(|u| u.name == t.name) {
                return Err(config(format!("trackers[{i}].name"), "duplicate tracker name"));
            }
            let resolved = self.resolve_tracker(t, &scenario, nominal);
            resolved
                .and_then(|r| r.validate())
                .map_err(|e| match e {
                    Error::Config { field, reason } => config(format!("trackers[{i}].{field}"), reason),
                    other => config(format!("trackers[{i}]"), other.to_string()),
                })?;
            if let Some(k) = &t.kernel {
                if k.param_walk_cov.nrows() != 2 {
                    return Err(config(
                        format!("trackers[{i}].kernel.param_walk_cov"),
                        "must be 2x2 to match the position space",
                    ));
                }
            }
        }
        Ok(scenario)
    }

    /// Fills unset tracker fields. `noise` is the per-component measurement
    /// variance in force for the run.
    pub fn resolve_tracker(
        &self,
        spec: &TrackerSpec,
        scenario: &ScenarioConfig,
        noise: [f64; 2],
    ) -> Result<TrackerConfig> {
        let rate = match self.scenario.preset_name() {
            Some("cars5") => 0.3,
            Some("linear5") => 0.2,
            _ => 0.1,
        };
        let base = match &spec.base {
            Some(b) => b.clone(),
            None => default_base(&scenario.sensor, noise)?,
        };
        let kernel = match &spec.kernel {
            Some(k) => k.clone(),
            None => default_kernel(scenario.motion),
        };
        let ct = scenario.motion == MotionModel::CoordinatedTurn;
        Ok(TrackerConfig {
            prior: spec.prior,
            alpha: spec.alpha.unwrap_or(AlphaMode::Gamma {
                shape: 1.0,
                rate,
                initial: 1.0,
            }),
            base,
            motion: scenario.motion,
            kernel,
            p_survive: spec.p_survive.unwrap_or(scenario.p_survive),
            velocity_sd0: spec.velocity_sd0.unwrap_or(10.0),
            turn_sd0: spec
                .turn_sd0
                .unwrap_or(if ct { std::f64::consts::PI / 180.0 } else { 0.0 }),
            init: spec.init.unwrap_or_default(),
        })
    }

    /// SHA-256 of the configuration with run-placement fields cleared.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.threads = None;
        let bytes = serde_json::to_vec(&c)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }
}

/// Isotropic Cartesian variance of one measurement, plus the centre and
/// half-width of the sensor window.
fn sensor_geometry(sensor: &SensorConfig, noise: [f64; 2]) -> (f64, [f64; 2], f64) {
    match *sensor {
        SensorConfig::Position {
            x_min,
            x_max,
            y_min,
            y_max,
            ..
        } => (
            0.5 * (noise[0] + noise[1]),
            [0.5 * (x_min + x_max), 0.5 * (y_min + y_max)],
            0.5 * (x_max - x_min).max(y_max - y_min),
        ),
        SensorConfig::RangeBearing {
            max_range,
            min_bearing,
            max_bearing,
            ..
        } => {
            let mut phis = vec![min_bearing, max_bearing];
            if min_bearing < 0.0 && max_bearing > 0.0 {
                phis.push(0.0);
            }
            let (mut lo, mut hi) = ([0.0f64, 0.0f64], [0.0f64, 0.0f64]);
            for p in phis {
                let c = [max_range * p.sin(), max_range * p.cos()];
                for a in 0..2 {
                    lo[a] = lo[a].min(c[a]);
                    hi[a] = hi[a].max(c[a]);
                }
            }
            let mid_range = 0.5 * max_range;
            (
                noise[0] + mid_range * mid_range * noise[1],
                [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
                0.5 * (hi[0] - lo[0]).max(hi[1] - lo[1]),
            )
        }
    }
}

/// `H` centred on the window, with the expected cluster covariance equal to
/// the measurement noise and a mean prior spread over the whole window.
pub fn default_base(sensor: &SensorConfig, noise: [f64; 2]) -> Result<GaussianNiw> {
    let (r, centre, half) = sensor_geometry(sensor, noise);
    let lambda = (r / (half * half)).min(1.0);
    GaussianNiw::new(
        DVector::from_row_slice(&centre),
        lambda,
        DEFAULT_NU,
        DMatrix::identity(2, 2) * (r * (DEFAULT_NU - 3.0)),
    )
}

pub fn default_kernel(motion: MotionModel) -> KernelConfig {
    match motion {
        MotionModel::CoordinatedTurn => KernelConfig {
            sigma_w: 1.0,
            sigma_u: 0.1 * std::f64::consts::PI / 180.0,
            dt: 1.0,
            param_walk_cov: DMatrix::identity(2, 2) * 25.0,
        },
        MotionModel::ConstantVelocity => KernelConfig {
            sigma_w: 0.1,
            sigma_u: 0.0,
            dt: 1.0,
            param_walk_cov: DMatrix::identity(2, 2) * 1e-4,
        },
    }
}

/// Steps at least `settle` steps away from every birth and death.
pub fn steady_state_steps(scenario: &ScenarioConfig, settle: usize) -> Vec<bool> {
    let mut steady = vec![true; scenario.steps];
    for o in &scenario.objects {
        for e in [o.birth, o.death] {
            for s in steady.iter_mut().skip(e).take(settle) {
                *s = false;
            }
        }
    }
    steady
}
