//! Tracks one simulated scene with both priors and compares them with the
//! naive baseline.
//!
//! cargo run --release --example tracking

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bnpmot::experiment::{ExperimentConfig, ScenarioOverrides, ScenarioSpec, TrackerSpec};
use bnpmot::gibbs::{extract_tracks, run_chain, ChainConfig};
use bnpmot::metrics::{naive_estimates, score_run, OspaConfig};
use bnpmot::simulate::{simulate_measurements, simulate_truth};

fn main() -> bnpmot::Result<()> {
    let cfg = ExperimentConfig {
        name: "tracking-example".into(),
        scenario: ScenarioSpec::Preset {
            preset: "linear5".into(),
            overrides: ScenarioOverrides {
                nominal_noise: true,
                ..Default::default()
            },
        },
        trackers: vec![TrackerSpec::ddp("ddp"), TrackerSpec::dpy("dpy", 0.3)],
        chain: ChainConfig {
            n_sweeps: 300,
            burn_in: 150,
            thin: 2,
            seed: 1,
        },
        metrics: OspaConfig::default(),
        mc_runs: 1,
        output_dir: "unused".into(),
        threads: None,
        settle_steps: 5,
    };
    let scenario = cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let truth = simulate_truth(&scenario, &mut rng)?;
    let meas = simulate_measurements(&truth, &scenario, &mut rng)?;
    let naive = score_run(&truth, &naive_estimates(&meas.frames), &cfg.metrics)?;
    println!("naive      mean OSPA {:6.2}", naive.mean_ospa());

    for spec in &cfg.trackers {
        let tracker = cfg.resolve_tracker(spec, &scenario, meas.noise)?;
        let out = run_chain(&meas.frames, &tracker, &cfg.chain)?;
        let tracks = extract_tracks(&out.steps)?;
        let est: Vec<Vec<[f64; 2]>> = (0..tracks.steps.len()).map(|k| tracks.positions(k)).collect();
        let score = score_run(&truth, &est, &cfg.metrics)?;
        let hits = tracks
            .cardinality()
            .iter()
            .zip(truth.cardinality())
            .filter(|(a, b)| **a == *b)
            .count();
        println!(
            "{:<10} mean OSPA {:6.2}, cardinality right at {hits}/{} steps, {} labels used",
            spec.name,
            score.mean_ospa(),
            truth.steps.len(),
            tracks.tracks.len()
        );
    }
    Ok(())
}
