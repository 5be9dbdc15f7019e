//! Gaussian kinematic belief carried by each surviving cluster.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::kinematics::{
    process_noise_cov, transition_mean, KernelConfig, MotionModel, TargetState,
};

/// Indices of `x` and `y` in the state vector.
const POS: [usize; 2] = [0, 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Belief {
    /// A freshly born track: position from its measurements, velocity (and
    /// turn rate) centred on zero with the given spreads.
    pub fn born(
        position: [f64; 2],
        position_cov: &DMatrix<f64>,
        model: MotionModel,
        velocity_sd: f64,
        turn_sd: f64,
    ) -> Self {
        let n = model.state_dim();
        let mut mean = DVector::zeros(n);
        mean[0] = position[0];
        mean[2] = position[1];
        let mut cov = DMatrix::zeros(n, n);
        for (a, &i) in POS.iter().enumerate() {
            for (b, &j) in POS.iter().enumerate() {
                cov[(i, j)] = position_cov[(a, b)];
            }
        }
        cov[(1, 1)] = velocity_sd * velocity_sd;
        cov[(3, 3)] = velocity_sd * velocity_sd;
        if n == 5 {
            cov[(4, 4)] = turn_sd * turn_sd;
        }
        Self { mean, cov }
    }

    pub fn state(&self) -> TargetState {
        TargetState::from_vector(&self.mean).expect("belief has a valid state dimension")
    }

    pub fn position(&self) -> DVector<f64> {
        DVector::from_vec(vec![self.mean[0], self.mean[2]])
    }

    pub fn position_cov(&self) -> DMatrix<f64> {
        DMatrix::from_fn(2, 2, |a, b| self.cov[(POS[a], POS[b])])
    }

    /// Kalman (constant velocity) or extended Kalman (coordinated turn)
    /// prediction; `param_walk_cov` is added to the position block.
    pub fn predict(&self, model: MotionModel, cfg: &KernelConfig) -> Self {
        let f = |v: &DVector<f64>| {
            let s = TargetState::from_vector(v).expect("valid state");
            transition_mean(&s, model, cfg.dt).to_vector()
        };
        let mean = f(&self.mean);
        let jac = jacobian(&f, &self.mean);
        let mut cov = &jac * &self.cov * jac.transpose() + process_noise_cov(model, cfg);
        if cfg.param_walk_cov.nrows() == 2 {
            for (a, &i) in POS.iter().enumerate() {
                for (b, &j) in POS.iter().enumerate() {
                    cov[(i, j)] += cfg.param_walk_cov[(a, b)];
                }
            }
        }
        Self {
            mean,
            cov: 0.5 * (&cov + cov.transpose()),
        }
    }

    /// Batch position update with `n` measurements of covariance `r` each,
    /// summarised by their mean.
    pub fn update(&self, mean_point: [f64; 2], n: usize, r: &DMatrix<f64>) -> Result<Self> {
        if n == 0 {
            return Ok(self.clone());
        }
        let dim = self.mean.len();
        let h = DMatrix::from_fn(2, dim, |a, j| if j == POS[a] { 1.0 } else { 0.0 });
        let s = &h * &self.cov * h.transpose() + r / n as f64;
        let s_inv = s.try_inverse().ok_or(Error::NotPositiveDefinite {
            context: "innovation covariance",
        })?;
        let gain = &self.cov * h.transpose() * s_inv;
        let innov = DVector::from_vec(vec![mean_point[0], mean_point[1]]) - &h * &self.mean;
        let mean = &self.mean + &gain * innov;
        // Joseph form keeps the result symmetric and positive semi-definite.
        let ikh = DMatrix::identity(dim, dim) - &gain * &h;
        let cov = &ikh * &self.cov * ikh.transpose() + &gain * (r / n as f64) * gain.transpose();
        Ok(Self {
            mean,
            cov: 0.5 * (&cov + cov.transpose()),
        })
    }
}

fn jacobian<F: Fn(&DVector<f64>) -> DVector<f64>>(f: &F, x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1.0);
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi[j] += h;
        lo[j] -= h;
        let col = (f(&hi) - f(&lo)) / (2.0 * h);
        jac.set_column(j, &col);
    }
    jac
}
