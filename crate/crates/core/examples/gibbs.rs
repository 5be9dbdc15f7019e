//! Collapsed Gibbs sampling of one frame's partition.
//!
//! cargo run --example gibbs

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bnpmot::ddp::DdpMass;
use bnpmot::dpy::PyMass;
use bnpmot::gibbs::{refresh_unique_params, sweep, BaseMeasure, InitStrategy, SweepState};
use bnpmot::models::niw::GaussianNiw;
use bnpmot::partition::PyParams;
use bnpmot::prior::PriorMass;

fn posterior<M: PriorMass>(label: &str, points: &[[f64; 2]], mass: &M) -> bnpmot::Result<()> {
    let base = BaseMeasure::new(GaussianNiw::new(DVector::zeros(2), 0.1, 6.0, DMatrix::identity(2, 2) * 3.0)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut st = SweepState::new(0, points.to_vec(), vec![], InitStrategy::Sequential, &base, mass, &mut rng)?;
    let sweeps = 20_000;
    let mut freq: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for _ in 0..sweeps {
        sweep(&mut st, &base, mass, &mut rng)?;
        *freq.entry(st.partition()).or_default() += 1;
    }
    let mut top: Vec<_> = freq.into_iter().collect();
    top.sort_by_key(|e| std::cmp::Reverse(e.1));
    println!("{label}: most visited partitions");
    for (p, c) in top.iter().take(4) {
        println!("  {p:?}  {:.3}", *c as f64 / sweeps as f64);
    }
    refresh_unique_params(&mut st, &base, &mut rng)?;
    for j in 0..st.n_slots() {
        if let Some(t) = st.slot_params(j) {
            println!("  slot {j}: mean ({:.2}, {:.2})", t.mean[0], t.mean[1]);
        }
    }
    Ok(())
}

fn main() -> bnpmot::Result<()> {
    let points = [[0.0, 0.0], [0.4, -0.3], [-0.2, 0.5], [6.0, 6.2], [5.6, 5.8], [3.0, 3.1]];
    posterior("DP(1)", &points, &DdpMass::new(1.0)?)?;
    posterior("PY(0.5, 1)", &points, &PyMass { p: PyParams::new(0.5, 1.0)? })?;
    Ok(())
}
