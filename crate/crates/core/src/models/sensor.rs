//! Sensor models. The sensor sits at the origin; bearing is measured from
//! the +y axis towards +x, so `x = r sin(phi)` and `y = r cos(phi)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kinematics::TargetState;
use crate::error::{param, Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Measurement {
    RangeBearing { range: f64, bearing: f64 },
    Position { x: f64, y: f64 },
}

impl Measurement {
    /// Cartesian position implied by the measurement.
    pub fn to_cartesian(&self) -> [f64; 2] {
        match *self {
            Measurement::RangeBearing { range, bearing } => {
                let (s, c) = bearing.sin_cos();
                [range * s, range * c]
            }
            Measurement::Position { x, y } => [x, y],
        }
    }

    /// Components as a pair, in (range, bearing) or (x, y) order.
    pub fn components(&self) -> [f64; 2] {
        match *self {
            Measurement::RangeBearing { range, bearing } => [range, bearing],
            Measurement::Position { x, y } => [x, y],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeBearingNoise {
    pub sigma_r2: f64,
    pub sigma_phi2: f64,
}

impl RangeBearingNoise {
    pub fn new(sigma_r2: f64, sigma_phi2: f64) -> Result<Self> {
        if !(sigma_r2 > 0.0) {
            return Err(param("sigma_r2", "must be positive"));
        }
        if !(sigma_phi2 > 0.0) {
            return Err(param("sigma_phi2", "must be positive"));
        }
        Ok(Self {
            sigma_r2,
            sigma_phi2,
        })
    }

    /// Radar example values: 5 m range and one degree bearing deviation.
    pub fn radar_default() -> Self {
        Self {
            sigma_r2: 25.0,
            sigma_phi2: (std::f64::consts::PI / 180.0).powi(2),
        }
    }
}

/// Noiseless range and bearing of a position seen from the origin.
pub fn range_bearing_of(x: f64, y: f64) -> Result<(f64, f64)> {
    let r = x.hypot(y);
    if r == 0.0 {
        return Err(Error::SensorOrigin);
    }
    Ok((r, x.atan2(y)))
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// `ln R(z | s)` for independent Gaussian range and bearing errors.
pub fn range_bearing_likelihood(z: &Measurement, s: &TargetState, noise: &RangeBearingNoise) -> Result<f64> {
    let (range, bearing) = match *z {
        Measurement::RangeBearing { range, bearing } => (range, bearing),
        Measurement::Position { .. } => {
            return Err(param("z", "expected a range-bearing measurement"));
        }
    };
    let (r, phi) = range_bearing_of(s.x, s.y)?;
    let dr = range - r;
    let dphi = wrap_angle(bearing - phi);
    Ok(-0.5 * (2.0 * LN_2PI + (noise.sigma_r2 * noise.sigma_phi2).ln())
        - 0.5 * (dr * dr / noise.sigma_r2 + dphi * dphi / noise.sigma_phi2))
}

/// First-order Cartesian covariance of a range-bearing measurement.
pub fn cartesian_cov(range: f64, bearing: f64, noise: &RangeBearingNoise) -> DMatrix<f64> {
    let (s, c) = bearing.sin_cos();
    let j = DMatrix::from_row_slice(2, 2, &[s, range * c, c, -range * s]);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![noise.sigma_r2, noise.sigma_phi2]));
    &j * d * j.transpose()
}
