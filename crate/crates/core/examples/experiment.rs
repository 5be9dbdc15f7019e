//! Runs a configured Monte-Carlo experiment and writes CSV, SVG and JSON
//! results. Rerunning with the same output directory resumes from the
//! per-run checkpoints.
//!
//! cargo run --release --example experiment -- configs/linear5.toml /tmp/exp

use std::path::PathBuf;

use bnpmot::experiment::{run_experiment, ExperimentConfig};

fn main() -> bnpmot::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "configs/linear5.toml".into()));
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.apply_env();
    if let Some(dir) = args.next() {
        cfg.output_dir = dir.into();
    }
    let out = run_experiment(&cfg)?;
    println!("{} runs of {} ({} resumed)", out.summary.runs, out.summary.name, out.manifest.resumed_runs);
    println!("naive mean OSPA {:.2}", out.summary.naive_mean_ospa);
    for t in &out.summary.trackers {
        println!(
            "{:<8} mean OSPA {:6.2}  reduction {:5.1}%  cardinality right {:5.1}% (steady) {:5.1}% (all)",
            t.name,
            t.mean_ospa,
            100.0 * t.ospa_reduction,
            100.0 * t.card_accuracy_steady,
            100.0 * t.card_accuracy_all
        );
    }
    println!("files in {}:", cfg.output_dir.display());
    for f in &out.manifest.files {
        println!("  {f}");
    }
    Ok(())
}
