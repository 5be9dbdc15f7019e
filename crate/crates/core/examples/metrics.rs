//! OSPA distances between point sets, and the per-step scoring used in
//! experiments.
//!
//! cargo run --example metrics

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bnpmot::metrics::{naive_estimates, ospa, score_run, OspaConfig};
use bnpmot::simulate::{preset, simulate_measurements, simulate_truth};

fn main() -> bnpmot::Result<()> {
    let cfg = OspaConfig::new(1.0, 100.0)?;
    let truth = [[0.0, 0.0], [100.0, 0.0]];
    for (label, est) in [
        ("exact", vec![[0.0, 0.0], [100.0, 0.0]]),
        ("shifted", vec![[3.0, 4.0], [100.0, 5.0]]),
        ("one missed", vec![[0.0, 0.0]]),
        ("one extra", vec![[0.0, 0.0], [100.0, 0.0], [50.0, 50.0]]),
        ("empty", vec![]),
    ] {
        let o = ospa(&truth, &est, &cfg);
        println!("{label:>10}: total {:6.2}  location {:6.2}  cardinality {:6.2}", o.total, o.location, o.cardinality);
    }

    // Reporting every measurement as an object, on a cluttered scene.
    let mut s = preset("linear5").expect("preset");
    s.snr_db = None;
    s.clutter_rate = 10.0;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let t = simulate_truth(&s, &mut rng)?;
    let m = simulate_measurements(&t, &s, &mut rng)?;
    let naive = score_run(&t, &naive_estimates(&m.frames), &cfg)?;
    println!("\nnaive baseline on linear5, nominal noise, 10 clutter points per step: mean OSPA {:.2}", naive.mean_ospa());
    Ok(())
}
