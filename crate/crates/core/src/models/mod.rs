pub mod gaussian;
pub mod kinematics;
pub mod niw;
pub mod sensor;

pub use gaussian::Gaussian;
pub use kinematics::{
    ct_transition, cv_transition, param_walk, process_noise_cov, ClusterParams, KernelConfig,
    MotionModel, TargetState,
};
pub use niw::{GaussianNiw, StudentT, SuffStats};
pub use sensor::{range_bearing_likelihood, Measurement, RangeBearingNoise};
