//! The dependent priors over time: clusters survive, die and are born.
//!
//! cargo run --example priors

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bnpmot::ddp::{ddp_case_probs, ddp_draw_prior, transition_step, ClusterState};
use bnpmot::dpy::{dpy_case_probs, dpy_draw_prior};
use bnpmot::models::kinematics::{KernelConfig, MotionModel};
use bnpmot::models::niw::GaussianNiw;
use bnpmot::partition::PyParams;
use bnpmot::prior::Slot;

fn main() -> bnpmot::Result<()> {
    // Two survivors carrying 3 and 1 objects, one of them already holding 2
    // objects at this step.
    let slots = [
        Slot { carried: 3, current: 2 },
        Slot { carried: 1, current: 0 },
    ];
    let p = PyParams::new(0.3, 1.0)?;
    println!("DP  {:?}", ddp_case_probs(&slots, 1.0)?);
    println!("PY  {:?}", dpy_case_probs(&slots, &p)?);

    let h = GaussianNiw::new(DVector::zeros(2), 0.01, 6.0, DMatrix::identity(2, 2) * 30.0)?;
    let kernel = KernelConfig::new(0.5, 0.0, 1.0, DMatrix::identity(2, 2) * 0.5)?;
    let model = MotionModel::ConstantVelocity;
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    println!("\nclusters per step with 30 objects per step, p_survive 0.9:");
    println!("{:>4} {:>6} {:>6}", "k", "DDP", "DPY");
    let (mut a, mut b) = (ClusterState::empty(), ClusterState::empty());
    for k in 0..10 {
        let ta = transition_step(&a, 0.9, model, &kernel, &mut rng)?;
        a = ddp_draw_prior(&ta, 30, 1.0, &h, model, &mut rng)?;
        let tb = transition_step(&b, 0.9, model, &kernel, &mut rng)?;
        b = dpy_draw_prior(&tb, 30, &p, &h, model, &mut rng)?.state;
        println!("{k:>4} {:>6} {:>6}", a.n_clusters(), b.n_clusters());
    }
    Ok(())
}
