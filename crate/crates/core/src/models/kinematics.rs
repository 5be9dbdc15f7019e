//! Object motion kernels and the cluster-parameter random walk.
//!
//! State vectors are laid out as `[x, vx, y, vy]`, with the turn rate
//! appended as a fifth entry for the coordinated-turn model.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gaussian::{cholesky, sample_psd, standard_normal};
use crate::error::{param, Error, Result};

/// Turn rates below this magnitude use the straight-line limit of `A_omega`.
pub const SMALL_OMEGA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

impl TargetState {
    pub fn cv(x: f64, y: f64, vx: f64, vy: f64) -> Self {
        Self {
            x,
            y,
            vx,
            vy,
            omega: None,
        }
    }

    pub fn ct(x: f64, y: f64, vx: f64, vy: f64, omega: f64) -> Self {
        Self {
            x,
            y,
            vx,
            vy,
            omega: Some(omega),
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.vx, self.vy, self.omega.unwrap_or(0.0)]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn to_vector(&self) -> DVector<f64> {
        match self.omega {
            Some(w) => DVector::from_vec(vec![self.x, self.vx, self.y, self.vy, w]),
            None => DVector::from_vec(vec![self.x, self.vx, self.y, self.vy]),
        }
    }

    pub fn from_vector(v: &DVector<f64>) -> Result<Self> {
        match v.len() {
            4 => Ok(Self::cv(v[0], v[2], v[1], v[3])),
            5 => Ok(Self::ct(v[0], v[2], v[1], v[3], v[4])),
            n => Err(Error::Dimension { expected: 4, got: n }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotionModel {
    CoordinatedTurn,
    ConstantVelocity,
}

impl MotionModel {
    pub fn state_dim(self) -> usize {
        match self {
            MotionModel::CoordinatedTurn => 5,
            MotionModel::ConstantVelocity => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub sigma_w: f64,
    pub sigma_u: f64,
    pub dt: f64,
    /// Covariance of the random walk applied to cluster means.
    pub param_walk_cov: DMatrix<f64>,
}

impl KernelConfig {
    pub fn new(sigma_w: f64, sigma_u: f64, dt: f64, param_walk_cov: DMatrix<f64>) -> Result<Self> {
        let cfg = Self {
            sigma_w,
            sigma_u,
            dt,
            param_walk_cov,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_w >= 0.0) || !self.sigma_w.is_finite() {
            return Err(param("sigma_w", "must be finite and non-negative"));
        }
        if !(self.sigma_u >= 0.0) || !self.sigma_u.is_finite() {
            return Err(param("sigma_u", "must be finite and non-negative"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(param("dt", "must be positive"));
        }
        let c = &self.param_walk_cov;
        if c.nrows() != c.ncols() {
            return Err(param("param_walk_cov", "must be square"));
        }
        if c.iter().any(|v| !v.is_finite()) || (c - c.transpose()).amax() > 1e-12 {
            return Err(param("param_walk_cov", "must be finite and symmetric"));
        }
        if nalgebra::SymmetricEigen::new(c.clone())
            .eigenvalues
            .iter()
            .any(|&e| e < -1e-12)
        {
            return Err(param("param_walk_cov", "must be positive semi-definite"));
        }
        Ok(())
    }

    /// The radar example's noise levels with a one-second step.
    pub fn radar_default() -> Self {
        Self {
            sigma_w: 15.0,
            sigma_u: std::f64::consts::PI / 180.0,
            dt: 1.0,
            param_walk_cov: DMatrix::identity(2, 2) * 25.0,
        }
    }
}

/// `B` such that position/velocity noise is `B w`, `w ~ N(0, sigma_w^2 I)`.
pub fn noise_gain(dt: f64) -> DMatrix<f64> {
    let h = 0.5 * dt * dt;
    DMatrix::from_row_slice(4, 2, &[h, 0.0, dt, 0.0, 0.0, h, 0.0, dt])
}

/// The turn matrix `A_omega` acting on `[x, vx, y, vy]`.
pub fn ct_matrix(omega: f64, dt: f64) -> DMatrix<f64> {
    let wt = omega * dt;
    let (s, c) = wt.sin_cos();
    let (a, b) = if omega.abs() < SMALL_OMEGA {
        (dt, 0.0)
    } else {
        (s / omega, 2.0 * (0.5 * wt).sin().powi(2) / omega)
    };
    DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, a, 0.0, -b, //
            0.0, c, 0.0, -s, //
            0.0, b, 1.0, a, //
            0.0, s, 0.0, c,
        ],
    )
}

pub fn cv_matrix(dt: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, dt, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, dt, //
            0.0, 0.0, 0.0, 1.0,
        ],
    )
}

/// Deterministic part of the transition.
pub fn transition_mean(s: &TargetState, model: MotionModel, dt: f64) -> TargetState {
    let a = match model {
        MotionModel::CoordinatedTurn => ct_matrix(s.omega.unwrap_or(0.0), dt),
        MotionModel::ConstantVelocity => cv_matrix(dt),
    };
    let v = &a * DVector::from_vec(vec![s.x, s.vx, s.y, s.vy]);
    let omega = match model {
        MotionModel::CoordinatedTurn => Some(s.omega.unwrap_or(0.0)),
        MotionModel::ConstantVelocity => None,
    };
    TargetState {
        x: v[0],
        vx: v[1],
        y: v[2],
        vy: v[3],
        omega,
    }
}

/// Full process-noise covariance for the model's state vector.
pub fn process_noise_cov(model: MotionModel, cfg: &KernelConfig) -> DMatrix<f64> {
    let b = noise_gain(cfg.dt);
    let q = &b * b.transpose() * cfg.sigma_w.powi(2);
    match model {
        MotionModel::ConstantVelocity => q,
        MotionModel::CoordinatedTurn => {
            let mut full = DMatrix::zeros(5, 5);
            full.view_mut((0, 0), (4, 4)).copy_from(&q);
            full[(4, 4)] = cfg.sigma_u.powi(2);
            full
        }
    }
}

fn add_noise<R: Rng + ?Sized>(s: &mut TargetState, cfg: &KernelConfig, rng: &mut R) {
    let h = 0.5 * cfg.dt * cfg.dt;
    let wx = cfg.sigma_w * standard_normal(rng);
    let wy = cfg.sigma_w * standard_normal(rng);
    s.x += h * wx;
    s.vx += cfg.dt * wx;
    s.y += h * wy;
    s.vy += cfg.dt * wy;
}

pub fn ct_transition<R: Rng + ?Sized>(s: &TargetState, cfg: &KernelConfig, rng: &mut R) -> TargetState {
    let mut out = transition_mean(s, MotionModel::CoordinatedTurn, cfg.dt);
    add_noise(&mut out, cfg, rng);
    out.omega = Some(out.omega.unwrap_or(0.0) + cfg.sigma_u * standard_normal(rng));
    out
}

pub fn cv_transition<R: Rng + ?Sized>(s: &TargetState, cfg: &KernelConfig, rng: &mut R) -> TargetState {
    let mut out = transition_mean(s, MotionModel::ConstantVelocity, cfg.dt);
    add_noise(&mut out, cfg, rng);
    out
}

pub fn transition<R: Rng + ?Sized>(
    s: &TargetState,
    model: MotionModel,
    cfg: &KernelConfig,
    rng: &mut R,
) -> TargetState {
    match model {
        MotionModel::CoordinatedTurn => ct_transition(s, cfg, rng),
        MotionModel::ConstantVelocity => cv_transition(s, cfg, rng),
    }
}

/// Unique parameter of a cluster: the Gaussian that generates its members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl ClusterParams {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::Dimension {
                expected: mean.len(),
                got: cov.nrows(),
            });
        }
        cholesky(&cov, "cluster covariance")?;
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Random walk on the cluster mean; the covariance is carried over untouched.
pub fn param_walk<R: Rng + ?Sized>(theta: &ClusterParams, cfg: &KernelConfig, rng: &mut R) -> ClusterParams {
    ClusterParams {
        mean: sample_psd(&theta.mean, &cfg.param_walk_cov, rng),
        cov: theta.cov.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quiet() -> KernelConfig {
        KernelConfig::new(0.0, 0.0, 1.0, DMatrix::zeros(2, 2)).unwrap()
    }

    #[test]
    fn zero_turn_is_constant_velocity() {
        assert_eq!(ct_matrix(0.0, 2.0), cv_matrix(2.0));
        let a = ct_matrix(1e-8 * (1.0 + 1e-9), 1.0);
        let b = ct_matrix(1e-8 * (1.0 - 1e-9), 1.0);
        assert!((a - b).amax() < 1e-6);
    }

    #[test]
    fn cv_moves_by_velocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = cv_transition(&TargetState::cv(2.0, 3.0, 1.0, 0.0), &quiet(), &mut rng);
        assert_eq!(s, TargetState::cv(3.0, 3.0, 1.0, 0.0));
    }

    #[test]
    fn quarter_turn_rotates_velocity() {
        let w = std::f64::consts::FRAC_PI_2;
        let s = transition_mean(&TargetState::ct(0.0, 0.0, 1.0, 0.0, w), MotionModel::CoordinatedTurn, 1.0);
        assert!((s.vx).abs() < 1e-12 && (s.vy - 1.0).abs() < 1e-12);
        assert!((s.x - 1.0 / w).abs() < 1e-12 && (s.y - 1.0 / w).abs() < 1e-12);
    }

    #[test]
    fn walk_keeps_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta = ClusterParams::new(DVector::from_vec(vec![1.0, 2.0]), DMatrix::identity(2, 2) * 3.0).unwrap();
        let same = param_walk(&theta, &quiet(), &mut rng);
        assert_eq!(same, theta);
        let moved = param_walk(&theta, &KernelConfig::radar_default(), &mut rng);
        assert_eq!(moved.cov, theta.cov);
        assert_ne!(moved.mean, theta.mean);
    }

    #[test]
    fn vector_round_trip() {
        let s = TargetState::ct(1.0, 2.0, 3.0, 4.0, 0.1);
        assert_eq!(TargetState::from_vector(&s.to_vector()).unwrap(), s);
        let s = TargetState::cv(1.0, 2.0, 3.0, 4.0);
        assert_eq!(TargetState::from_vector(&s.to_vector()).unwrap(), s);
    }
}
