//! Simulates a built-in scenario and writes its truth and measurements.
//!
//! cargo run --example simulate -- radar10 /tmp/sim

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bnpmot::simulate::{preset, simulate_measurements, simulate_truth, PRESETS};

fn main() -> bnpmot::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "radar10".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| "sim".into()));
    let Some(scenario) = preset(&name) else {
        eprintln!("unknown preset {name}; try one of {PRESETS:?}");
        std::process::exit(1);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let truth = simulate_truth(&scenario, &mut rng)?;
    let meas = simulate_measurements(&truth, &scenario, &mut rng)?;

    let card = truth.cardinality();
    let n: usize = meas.frames.iter().map(|f| f.measurements.len()).sum();
    println!("{name}: {} steps, up to {} objects, {n} measurements", card.len(), card.iter().max().unwrap_or(&0));
    println!("noise variances in use: {:?}", meas.noise);

    std::fs::create_dir_all(&out)?;
    truth.write_csv(&out.join("truth.csv"))?;
    meas.write_csv(&out.join("frames.csv"))?;
    for f in ["truth.csv", "frames.csv"] {
        let svg = bnpmot::experiment::plot_csv(&out.join(f))?;
        println!("wrote {}", svg.display());
    }
    Ok(())
}
