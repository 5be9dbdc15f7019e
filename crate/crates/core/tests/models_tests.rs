mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bnpmot::models::gaussian::standard_normal;
use bnpmot::models::kinematics::{
    ct_matrix, ct_transition, cv_matrix, cv_transition, process_noise_cov, transition_mean, KernelConfig, MotionModel,
    TargetState,
};
use bnpmot::models::niw::GaussianNiw;
use bnpmot::models::sensor::{range_bearing_likelihood, wrap_angle, Measurement, RangeBearingNoise};

proptest! {
    #[test]
    fn zero_turn_rate_is_constant_velocity(
        x in -1e3f64..1e3, y in -1e3f64..1e3, vx in -30.0f64..30.0, vy in -30.0f64..30.0,
        dt in 0.1f64..5.0, seed in any::<u64>(),
    ) {
        let cfg = KernelConfig::new(3.0, 0.02, dt, DMatrix::zeros(2, 2)).unwrap();
        let ct = TargetState::ct(x, y, vx, vy, 0.0);
        let cv = TargetState::cv(x, y, vx, vy);
        let a = ct_transition(&ct, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = cv_transition(&cv, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        for (u, v) in [(a.x, b.x), (a.y, b.y), (a.vx, b.vx), (a.vy, b.vy)] {
            prop_assert!((u - v).abs() <= 1e-9);
        }
    }

    #[test]
    fn small_turn_rates_approach_the_straight_line(omega in -1e-6f64..1e-6, dt in 0.1f64..5.0) {
        let d = (ct_matrix(omega, dt) - cv_matrix(dt)).amax();
        prop_assert!(d <= 1.01 * omega.abs() * dt * dt.max(1.0) + 1e-15);
    }

    #[test]
    fn turning_preserves_speed(
        vx in -30.0f64..30.0, vy in -30.0f64..30.0, omega in -0.2f64..0.2, dt in 0.1f64..5.0,
    ) {
        let s = TargetState::ct(0.0, 0.0, vx, vy, omega);
        let t = transition_mean(&s, MotionModel::CoordinatedTurn, dt);
        prop_assert!((vx.hypot(vy) - t.vx.hypot(t.vy)).abs() < 1e-9);
        prop_assert_eq!(t.omega, Some(omega));
    }

    #[test]
    fn wrapped_angles_lie_in_range(a in -100.0f64..100.0) {
        let w = wrap_angle(a);
        prop_assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
        prop_assert!(((a - w) / std::f64::consts::TAU).fract().abs() < 1e-9
            || (1.0 - ((a - w) / std::f64::consts::TAU).fract().abs()) < 1e-9);
    }
}

#[test]
fn quarter_turn_by_hand() {
    // omega * dt = pi/2 with unit speed along x: ends at (1/omega, 1/omega)
    // heading along y.
    let omega = std::f64::consts::FRAC_PI_2;
    let s = TargetState::ct(0.0, 0.0, 1.0, 0.0, omega);
    let t = transition_mean(&s, MotionModel::CoordinatedTurn, 1.0);
    assert!((t.x - 1.0 / omega).abs() < 1e-12 && (t.y - 1.0 / omega).abs() < 1e-12);
    assert!(t.vx.abs() < 1e-12 && (t.vy - 1.0).abs() < 1e-12);
}

#[test]
fn cv_noise_matches_its_covariance() {
    let cfg = KernelConfig::new(2.0, 0.0, 1.5, DMatrix::zeros(2, 2)).unwrap();
    let q = process_noise_cov(MotionModel::ConstantVelocity, &cfg);
    let s = TargetState::cv(5.0, 5.0, 1.0, -1.0);
    let mean = transition_mean(&s, MotionModel::ConstantVelocity, cfg.dt);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let mut emp = DMatrix::<f64>::zeros(4, 4);
    for _ in 0..n {
        let t = cv_transition(&s, &cfg, &mut rng);
        let e = DVector::from_vec(vec![t.x - mean.x, t.vx - mean.vx, t.y - mean.y, t.vy - mean.vy]);
        emp += &e * e.transpose() / n as f64;
    }
    for i in 0..4 {
        for j in 0..4 {
            let scale = (q[(i, i)] * q[(j, j)]).sqrt();
            assert!((emp[(i, j)] - q[(i, j)]).abs() < 0.03 * scale, "({i},{j}) {} vs {}", emp[(i, j)], q[(i, j)]);
        }
    }
}

fn niw() -> GaussianNiw {
    GaussianNiw::new(
        DVector::from_vec(vec![1.0, -2.0]),
        0.7,
        5.0,
        DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
    )
    .unwrap()
}

fn data(seed: u64, n: usize) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| [2.0 + standard_normal(&mut rng), -1.0 + 0.5 * standard_normal(&mut rng)])
        .collect()
}

#[test]
fn predictive_is_a_ratio_of_marginals() {
    let h = niw();
    let pts = data(2, 6);
    let post = h
        .posterior(&pts.iter().map(|p| DVector::from_row_slice(p)).collect::<Vec<_>>())
        .unwrap();
    let mu0 = [h.mu0[0], h.mu0[1]];
    let base = common::niw_ln_marginal(&pts, mu0, h.lambda, h.nu, &h.psi);
    for y in [[0.0, 0.0], [2.5, -1.2], [-3.0, 4.0]] {
        let mut with = pts.clone();
        with.push(y);
        let oracle = common::niw_ln_marginal(&with, mu0, h.lambda, h.nu, &h.psi) - base;
        let got = post.ln_predictive(&y).unwrap();
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
    }
    // With no data the predictive is the single-point marginal.
    let y = [0.4, 0.1];
    let oracle = common::niw_ln_marginal(&[y], mu0, h.lambda, h.nu, &h.psi);
    assert!((h.ln_predictive(&y).unwrap() - oracle).abs() < 1e-10);
}

#[test]
fn posterior_is_order_free_and_incremental() {
    let h = niw();
    let pts: Vec<DVector<f64>> = data(3, 8).iter().map(|p| DVector::from_row_slice(p)).collect();
    let all = h.posterior(&pts).unwrap();
    let mut rev = pts.clone();
    rev.reverse();
    let again = h.posterior(&rev).unwrap();
    let step = h.posterior(&pts[..3]).unwrap().posterior(&pts[3..]).unwrap();
    for other in [again, step] {
        assert!((all.lambda - other.lambda).abs() < 1e-12 && (all.nu - other.nu).abs() < 1e-12);
        assert!((&all.mu0 - &other.mu0).amax() < 1e-10);
        assert!((&all.psi - &other.psi).amax() < 1e-9);
    }
    assert_eq!(all.lambda, h.lambda + 8.0);
    assert_eq!(all.nu, h.nu + 8.0);
    assert_eq!(h.posterior(&[]).unwrap(), h);
}

#[test]
fn niw_draws_have_the_prior_moments() {
    let h = niw();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 40_000;
    let mut mean_sum = DVector::zeros(2);
    let mut cov_sum = DMatrix::zeros(2, 2);
    for _ in 0..n {
        let p = h.sample(&mut rng).unwrap();
        mean_sum += &p.mean;
        cov_sum += &p.cov;
    }
    // E[mu] = mu0 and E[Sigma] = psi / (nu - d - 1).
    let m = mean_sum / n as f64;
    let c = cov_sum / n as f64;
    assert!((&m - &h.mu0).amax() < 0.05, "{m}");
    let expected = &h.psi / (h.nu - 3.0);
    assert!((&c - &expected).amax() < 0.05 * expected.amax(), "{c} vs {expected}");
}

#[test]
fn flat_mean_prior_is_refused() {
    let h = GaussianNiw::new(DVector::zeros(2), 0.0, 5.0, DMatrix::identity(2, 2)).unwrap();
    assert!(h.predictive().is_err());
    assert!(h.sample(&mut ChaCha8Rng::seed_from_u64(0)).is_err());
    assert!(GaussianNiw::new(DVector::zeros(2), 1.0, 0.5, DMatrix::identity(2, 2)).is_err());
}

#[test]
fn range_bearing_likelihood_peaks_at_the_truth() {
    let noise = RangeBearingNoise::radar_default();
    let s = TargetState::ct(300.0, 400.0, 0.0, 0.0, 0.0);
    let exact = Measurement::RangeBearing {
        range: 500.0,
        bearing: 300f64.atan2(400.0),
    };
    let peak = range_bearing_likelihood(&exact, &s, &noise).unwrap();
    let norm = -(std::f64::consts::TAU).ln() - 0.5 * (noise.sigma_r2 * noise.sigma_phi2).ln();
    assert!((peak - norm).abs() < 1e-12);
    let off = Measurement::RangeBearing {
        range: 505.0,
        bearing: 300f64.atan2(400.0),
    };
    assert!((range_bearing_likelihood(&off, &s, &noise).unwrap() - (norm - 0.5)).abs() < 1e-12);
    // Bearing errors wrap around.
    let wrapped = Measurement::RangeBearing {
        range: 500.0,
        bearing: 300f64.atan2(400.0) + std::f64::consts::TAU,
    };
    assert!((range_bearing_likelihood(&wrapped, &s, &noise).unwrap() - peak).abs() < 1e-9);
    assert!(range_bearing_likelihood(&exact, &TargetState::cv(0.0, 0.0, 0.0, 0.0), &noise).is_err());
    assert!(range_bearing_likelihood(&Measurement::Position { x: 1.0, y: 1.0 }, &s, &noise).is_err());
}

#[test]
fn polar_to_cartesian_round_trip() {
    let z = Measurement::RangeBearing {
        range: 100.0,
        bearing: 0.5,
    };
    let [x, y] = z.to_cartesian();
    assert!((x.hypot(y) - 100.0).abs() < 1e-12);
    assert!((x.atan2(y) - 0.5).abs() < 1e-12);
}
