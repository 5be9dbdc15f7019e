//! Ground-truth scenarios and measurement generation.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{config, param, Result};
use crate::models::gaussian::standard_normal;
use crate::models::kinematics::{transition, KernelConfig, MotionModel, TargetState};
use crate::models::sensor::{range_bearing_of, Measurement};

/// CSV schema tags written as the first line of exported files.
pub const TRUTH_SCHEMA: &str = "# schema: bnpmot.truth.v1";
pub const FRAMES_SCHEMA: &str = "# schema: bnpmot.frames.v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    /// First step at which the object exists.
    pub birth: usize,
    /// First step at which it no longer exists.
    pub death: usize,
    pub initial: TargetState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SensorConfig {
    RangeBearing {
        sigma_r2: f64,
        sigma_phi2: f64,
        max_range: f64,
        min_bearing: f64,
        max_bearing: f64,
    },
    Position {
        sigma2: f64,
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
}

impl SensorConfig {
    /// Nominal measurement noise variances, one per component.
    pub fn nominal_variances(&self) -> [f64; 2] {
        match *self {
            SensorConfig::RangeBearing {
                sigma_r2, sigma_phi2, ..
            } => [sigma_r2, sigma_phi2],
            SensorConfig::Position { sigma2, .. } => [sigma2, sigma2],
        }
    }

    fn validate(&self) -> Result<()> {
        let [a, b] = self.nominal_variances();
        if !(a > 0.0 && b > 0.0) {
            return Err(config("scenario.sensor", "noise variances must be positive"));
        }
        let ok = match *self {
            SensorConfig::RangeBearing {
                max_range,
                min_bearing,
                max_bearing,
                ..
            } => max_range > 0.0 && min_bearing < max_bearing,
            SensorConfig::Position {
                x_min,
                x_max,
                y_min,
                y_max,
                ..
            } => x_min < x_max && y_min < y_max,
        };
        if ok {
            Ok(())
        } else {
            Err(config("scenario.sensor", "window bounds must be ordered"))
        }
    }

    fn measure(&self, s: &TargetState) -> Result<Measurement> {
        Ok(match self {
            SensorConfig::RangeBearing { .. } => {
                let (range, bearing) = range_bearing_of(s.x, s.y)?;
                Measurement::RangeBearing { range, bearing }
            }
            SensorConfig::Position { .. } => Measurement::Position { x: s.x, y: s.y },
        })
    }

    fn perturb<R: Rng + ?Sized>(&self, z: Measurement, var: [f64; 2], rng: &mut R) -> Measurement {
        let e0 = var[0].sqrt() * standard_normal(rng);
        let e1 = var[1].sqrt() * standard_normal(rng);
        match z {
            Measurement::RangeBearing { range, bearing } => Measurement::RangeBearing {
                range: range + e0,
                bearing: bearing + e1,
            },
            Measurement::Position { x, y } => Measurement::Position { x: x + e0, y: y + e1 },
        }
    }

    fn clutter<R: Rng + ?Sized>(&self, rng: &mut R) -> Measurement {
        match *self {
            SensorConfig::RangeBearing {
                max_range,
                min_bearing,
                max_bearing,
                ..
            } => Measurement::RangeBearing {
                range: rng.random_range(0.0..max_range),
                bearing: rng.random_range(min_bearing..max_bearing),
            },
            SensorConfig::Position {
                x_min,
                x_max,
                y_min,
                y_max,
                ..
            } => Measurement::Position {
                x: rng.random_range(x_min..x_max),
                y: rng.random_range(y_min..y_max),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub steps: usize,
    pub motion: MotionModel,
    pub objects: Vec<ObjectSpec>,
    /// Motion noise used to simulate the truth.
    pub truth_kernel: KernelConfig,
    pub sensor: SensorConfig,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub clutter_rate: f64,
    pub p_survive: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(config("scenario.steps", "must be at least 1"));
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.birth >= o.death || o.death > self.steps {
                return Err(config(
                    format!("scenario.objects[{i}]"),
                    format!("need 0 <= birth < death <= {}, got [{}, {})", self.steps, o.birth, o.death),
                ));
            }
            if !o.initial.is_finite() {
                return Err(config(format!("scenario.objects[{i}].initial"), "must be finite"));
            }
            if o.initial.omega.is_some() != (self.motion == MotionModel::CoordinatedTurn) {
                return Err(config(
                    format!("scenario.objects[{i}].initial.omega"),
                    "turn rate must be present exactly for coordinated-turn motion",
                ));
            }
        }
        if !(self.clutter_rate >= 0.0) || !self.clutter_rate.is_finite() {
            return Err(config("scenario.clutter_rate", "must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.p_survive) {
            return Err(config("scenario.p_survive", "must lie in [0, 1]"));
        }
        if let Some(s) = self.snr_db {
            if !s.is_finite() {
                return Err(config("scenario.snr_db", "must be finite"));
            }
        }
        self.truth_kernel
            .validate()
            .map_err(|e| config("scenario.truth_kernel", e.to_string()))?;
        self.sensor.validate()
    }

    /// True number of objects at each step, from the schedule alone.
    pub fn cardinality(&self) -> Vec<usize> {
        (0..self.steps)
            .map(|k| self.objects.iter().filter(|o| o.birth <= k && k < o.death).count())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `(object id, state)` of every object present at each step.
    pub steps: Vec<Vec<(usize, TargetState)>>,
}

impl GroundTruth {
    pub fn cardinality(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.len()).collect()
    }

    pub fn positions(&self, k: usize) -> Vec<[f64; 2]> {
        self.steps[k].iter().map(|(_, s)| s.position()).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "{TRUTH_SCHEMA}")?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["step", "object", "x", "y", "vx", "vy", "omega"])?;
        for (k, objs) in self.steps.iter().enumerate() {
            for (id, s) in objs {
                w.write_record([
                    k.to_string(),
                    id.to_string(),
                    s.x.to_string(),
                    s.y.to_string(),
                    s.vx.to_string(),
                    s.vy.to_string(),
                    s.omega.map(|v| v.to_string()).unwrap_or_default(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFrame {
    pub step: usize,
    pub measurements: Vec<Measurement>,
}

/// Frames plus the scoring-only record of which object made each measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedMeasurements {
    pub frames: Vec<MeasurementFrame>,
    /// `origins[k][i]` is `Some(object id)` or `None` for clutter.
    pub origins: Vec<Vec<Option<usize>>>,
    /// Per-component noise variances actually used.
    pub noise: [f64; 2],
}

impl SimulatedMeasurements {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "{FRAMES_SCHEMA}")?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["step", "index", "kind", "c0", "c1", "origin"])?;
        for (frame, origin) in self.frames.iter().zip(&self.origins) {
            for (i, (z, o)) in frame.measurements.iter().zip(origin).enumerate() {
                let (kind, c) = match *z {
                    Measurement::RangeBearing { range, bearing } => ("range-bearing", [range, bearing]),
                    Measurement::Position { x, y } => ("position", [x, y]),
                };
                w.write_record([
                    frame.step.to_string(),
                    i.to_string(),
                    kind.to_string(),
                    c[0].to_string(),
                    c[1].to_string(),
                    o.map(|v| v.to_string()).unwrap_or_else(|| "clutter".into()),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn simulate_truth<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<GroundTruth> {
    cfg.validate()?;
    let mut steps = vec![Vec::new(); cfg.steps];
    for (id, o) in cfg.objects.iter().enumerate() {
        let mut s = o.initial;
        for (k, step) in steps.iter_mut().enumerate().take(o.death).skip(o.birth) {
            if k > o.birth {
                s = transition(&s, cfg.motion, &cfg.truth_kernel, rng);
            }
            step.push((id, s));
        }
    }
    Ok(GroundTruth { steps })
}

/// Noise variances after applying the scenario's SNR, if any. Signal power is
/// the mean squared component of the noiseless measurements; noise power is
/// the mean nominal variance; one common factor rescales both variances.
pub fn effective_noise(truth: &GroundTruth, cfg: &ScenarioConfig) -> Result<[f64; 2]> {
    let nominal = cfg.sensor.nominal_variances();
    let Some(snr) = cfg.snr_db else {
        return Ok(nominal);
    };
    let (mut power, mut count) = (0.0, 0usize);
    for step in &truth.steps {
        for (_, s) in step {
            let c = cfg.sensor.measure(s)?.components();
            power += c[0] * c[0] + c[1] * c[1];
            count += 2;
        }
    }
    if count == 0 || power == 0.0 {
        return Err(param("snr_db", "signal power is zero; SNR is undefined"));
    }
    let signal = power / count as f64;
    let noise = 0.5 * (nominal[0] + nominal[1]);
    let scale = signal / (noise * 10f64.powf(snr / 10.0));
    Ok([nominal[0] * scale, nominal[1] * scale])
}

pub fn simulate_measurements<R: Rng + ?Sized>(
    truth: &GroundTruth,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<SimulatedMeasurements> {
    let noise = effective_noise(truth, cfg)?;
    let clutter = if cfg.clutter_rate > 0.0 {
        Some(Poisson::new(cfg.clutter_rate).map_err(|e| param("clutter_rate", e.to_string()))?)
    } else {
        None
    };
    let mut frames = Vec::with_capacity(truth.steps.len());
    let mut origins = Vec::with_capacity(truth.steps.len());
    for (k, objs) in truth.steps.iter().enumerate() {
        let mut tagged: Vec<(Measurement, Option<usize>)> = Vec::new();
        for (id, s) in objs {
            let z = cfg.sensor.measure(s)?;
            tagged.push((cfg.sensor.perturb(z, noise, rng), Some(*id)));
        }
        if let Some(p) = &clutter {
            let n = p.sample(rng) as usize;
            for _ in 0..n {
                tagged.push((cfg.sensor.clutter(rng), None));
            }
        }
        tagged.shuffle(rng);
        let (measurements, origin): (Vec<_>, Vec<_>) = tagged.into_iter().unzip();
        frames.push(MeasurementFrame { step: k, measurements });
        origins.push(origin);
    }
    Ok(SimulatedMeasurements { frames, origins, noise })
}

fn schedule(pairs: &[(usize, usize)], initial: &[TargetState]) -> Vec<ObjectSpec> {
    pairs
        .iter()
        .zip(initial)
        .map(|(&(birth, death), &initial)| ObjectSpec { birth, death, initial })
        .collect()
}

/// Preset names accepted by [`preset`].
pub const PRESETS: [&str; 3] = ["radar10", "cars5", "linear5"];

/// Built-in scenarios. Schedules are half-open `[birth, death)` over steps
/// `0..100`; initial states are this crate's own choice.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let deg = std::f64::consts::PI / 180.0;
    match name {
        "radar10" => {
            let init = [
                TargetState::ct(-800.0, 200.0, 12.0, 8.0, 0.0),
                TargetState::ct(-300.0, 1500.0, 5.0, -15.0, 0.3 * deg),
                TargetState::ct(600.0, 1400.0, -10.0, -10.0, -0.2 * deg),
                TargetState::ct(900.0, 300.0, -12.0, 6.0, 0.0),
                TargetState::ct(-1000.0, 900.0, 15.0, 0.0, -0.4 * deg),
                TargetState::ct(200.0, 200.0, 4.0, 14.0, 0.2 * deg),
                TargetState::ct(-400.0, 600.0, 14.0, 5.0, 0.0),
                TargetState::ct(1100.0, 1000.0, -15.0, 2.0, 0.3 * deg),
                TargetState::ct(-100.0, 1800.0, 8.0, -12.0, 0.0),
                TargetState::ct(500.0, 700.0, -6.0, 10.0, -0.3 * deg),
            ];
            Some(ScenarioConfig {
                name: name.into(),
                steps: 100,
                motion: MotionModel::CoordinatedTurn,
                objects: schedule(
                    &[
                        (0, 100),
                        (10, 100),
                        (10, 100),
                        (10, 60),
                        (20, 80),
                        (40, 100),
                        (40, 100),
                        (40, 80),
                        (60, 100),
                        (60, 100),
                    ],
                    &init,
                ),
                truth_kernel: KernelConfig {
                    sigma_w: 0.5,
                    sigma_u: 0.05 * deg,
                    dt: 1.0,
                    param_walk_cov: DMatrix::zeros(2, 2),
                },
                sensor: SensorConfig::RangeBearing {
                    sigma_r2: 25.0,
                    sigma_phi2: deg * deg,
                    max_range: 2000.0,
                    min_bearing: -std::f64::consts::FRAC_PI_2,
                    max_bearing: std::f64::consts::FRAC_PI_2,
                },
                snr_db: None,
                clutter_rate: 0.0,
                p_survive: 0.95,
                seed: 0,
            })
        }
        "cars5" => {
            let init = [
                TargetState::ct(-150.0, 400.0, 6.0, 1.0, 0.0),
                TargetState::ct(-120.0, 470.0, 6.0, -1.0, 0.2 * deg),
                TargetState::ct(140.0, 380.0, -5.0, 2.0, -0.2 * deg),
                TargetState::ct(0.0, 300.0, 1.0, 5.0, 0.0),
                TargetState::ct(80.0, 560.0, -3.0, -4.0, 0.3 * deg),
            ];
            Some(ScenarioConfig {
                name: name.into(),
                steps: 100,
                motion: MotionModel::CoordinatedTurn,
                objects: schedule(&[(0, 100), (0, 100), (10, 90), (20, 100), (30, 80)], &init),
                truth_kernel: KernelConfig {
                    sigma_w: 0.2,
                    sigma_u: 0.05 * deg,
                    dt: 1.0,
                    param_walk_cov: DMatrix::zeros(2, 2),
                },
                sensor: SensorConfig::RangeBearing {
                    sigma_r2: 25.0,
                    sigma_phi2: deg * deg,
                    max_range: 2000.0,
                    min_bearing: -std::f64::consts::FRAC_PI_2,
                    max_bearing: std::f64::consts::FRAC_PI_2,
                },
                snr_db: None,
                clutter_rate: 0.0,
                p_survive: 0.95,
                seed: 0,
            })
        }
        "linear5" => {
            let init = [
                TargetState::cv(-400.0, -300.0, 8.0, 6.0),
                TargetState::cv(400.0, -350.0, -7.0, 5.0),
                TargetState::cv(-450.0, 300.0, 9.0, -4.0),
                TargetState::cv(300.0, 400.0, -6.0, -8.0),
                TargetState::cv(0.0, -450.0, 1.0, 9.0),
            ];
            Some(ScenarioConfig {
                name: name.into(),
                steps: 100,
                motion: MotionModel::ConstantVelocity,
                objects: schedule(&[(0, 70), (5, 100), (10, 100), (20, 45), (30, 80)], &init),
                truth_kernel: KernelConfig {
                    sigma_w: 0.1,
                    sigma_u: 0.0,
                    dt: 1.0,
                    param_walk_cov: DMatrix::zeros(2, 2),
                },
                sensor: SensorConfig::Position {
                    sigma2: 25.0,
                    x_min: -1000.0,
                    x_max: 1000.0,
                    y_min: -1000.0,
                    y_max: 1000.0,
                },
                snr_db: Some(-3.0),
                clutter_rate: 0.0,
                p_survive: 0.95,
                seed: 0,
            })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn straight_line() {
        let cfg = ScenarioConfig {
            name: "line".into(),
            steps: 10,
            motion: MotionModel::ConstantVelocity,
            objects: vec![ObjectSpec {
                birth: 0,
                death: 10,
                initial: TargetState::cv(5.0, 1.0, 1.0, 0.0),
            }],
            truth_kernel: KernelConfig::new(0.0, 0.0, 1.0, DMatrix::zeros(2, 2)).unwrap(),
            sensor: SensorConfig::Position {
                sigma2: 1.0,
                x_min: -100.0,
                x_max: 100.0,
                y_min: -100.0,
                y_max: 100.0,
            },
            snr_db: None,
            clutter_rate: 0.0,
            p_survive: 1.0,
            seed: 0,
        };
        let truth = simulate_truth(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for (k, step) in truth.steps.iter().enumerate() {
            assert_eq!(step[0].1.x, 5.0 + k as f64);
        }
        let m = simulate_measurements(&truth, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(m.frames.iter().all(|f| f.measurements.len() == 1));
    }

    #[test]
    fn schedule_outside_horizon_is_rejected() {
        let mut cfg = preset("linear5").unwrap();
        cfg.objects[0].death = 101;
        assert!(cfg.validate().is_err());
        cfg.objects[0].death = 3;
        cfg.objects[0].birth = 3;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            let truth = simulate_truth(&cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
            assert_eq!(truth.cardinality(), cfg.cardinality());
        }
    }
}
