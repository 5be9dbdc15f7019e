//! Monte-Carlo experiment driver and its on-disk artifacts.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{steady_state_steps, ExperimentConfig};
use super::plot::{render, Panel, Series};
use crate::error::{config, Error, Result};
use crate::gibbs::{chain_rng, extract_tracks, run_chain_with, TrackSet};
use crate::metrics::{aggregate_mc, naive_estimates, score_run, ScoreSeries, METRICS_SCHEMA};
use crate::simulate::{simulate_measurements, simulate_truth, GroundTruth, ScenarioConfig, TRUTH_SCHEMA};

pub const TRACKS_SCHEMA: &str = "# schema: bnpmot.tracks.v1";
pub const CARDINALITY_SCHEMA: &str = "# schema: bnpmot.cardinality.v1";

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("BNPMOT_GIT_DESCRIBE"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerRun {
    pub name: String,
    pub series: ScoreSeries,
    /// Modal cardinality per step.
    pub cardinality: Vec<usize>,
    pub tracks: TrackSet,
}

/// Everything one Monte-Carlo replication produces; also its checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub run: usize,
    pub noise: [f64; 2],
    pub naive: ScoreSeries,
    pub trackers: Vec<TrackerRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerSummary {
    pub name: String,
    /// OSPA averaged over steps and runs.
    pub mean_ospa: f64,
    /// `1 - mean_ospa / naive_mean_ospa`.
    pub ospa_reduction: f64,
    /// Fraction of steady-state (run, step) pairs with the modal cardinality
    /// equal to the truth.
    pub card_accuracy_steady: f64,
    pub card_accuracy_all: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub config_hash: String,
    pub runs: usize,
    pub naive_mean_ospa: f64,
    pub trackers: Vec<TrackerSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub config_hash: String,
    pub scenario_seed: u64,
    pub chain_seed: u64,
    pub mc_runs: usize,
    pub threads: usize,
    pub resumed_runs: usize,
    pub wall_time_s: f64,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    pub records: Vec<RunRecord>,
    pub manifest: Manifest,
}

/// Truth and frames of replication `run`.
pub fn simulate_run(
    scenario: &ScenarioConfig,
    run: usize,
) -> Result<(GroundTruth, crate::simulate::SimulatedMeasurements)> {
    let mut rng = chain_rng(scenario.seed, run as u64);
    let truth = simulate_truth(scenario, &mut rng)?;
    let meas = simulate_measurements(&truth, scenario, &mut rng)?;
    Ok((truth, meas))
}

/// One replication: simulate, run every tracker, score.
pub fn run_single(cfg: &ExperimentConfig, scenario: &ScenarioConfig, run: usize, hash: &str) -> Result<RunRecord> {
    let (truth, meas) = simulate_run(scenario, run)?;
    let naive = score_run(&truth, &naive_estimates(&meas.frames), &cfg.metrics)?;
    let mut trackers = Vec::with_capacity(cfg.trackers.len());
    for spec in &cfg.trackers {
        let tracker = cfg.resolve_tracker(spec, scenario, meas.noise)?;
        let mut rng = chain_rng(cfg.chain.seed, run as u64);
        let out = run_chain_with(&meas.frames, &tracker, &cfg.chain, &mut rng)?;
        let tracks = extract_tracks(&out.steps)?;
        let est: Vec<Vec<[f64; 2]>> = (0..tracks.steps.len()).map(|i| tracks.positions(i)).collect();
        trackers.push(TrackerRun {
            name: spec.name.clone(),
            series: score_run(&truth, &est, &cfg.metrics)?,
            cardinality: tracks.cardinality(),
            tracks,
        });
    }
    Ok(RunRecord {
        config_hash: hash.to_string(),
        run,
        noise: meas.noise,
        naive,
        trackers,
    })
}

fn checkpoint_path(dir: &Path, run: usize) -> PathBuf {
    dir.join("runs").join(format!("run_{run:04}.json"))
}

fn load_checkpoint(path: &Path, hash: &str) -> Option<RunRecord> {
    let text = std::fs::read(path).ok()?;
    let rec: RunRecord = serde_json::from_slice(&text).ok()?;
    (rec.config_hash == hash).then_some(rec)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs the whole experiment, resuming any replication whose checkpoint
/// matches the configuration hash.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let started = Instant::now();
    let scenario = cfg.validate()?;
    let hash = cfg.hash()?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir.join("runs")).map_err(|e| {
        config("output_dir", format!("cannot create {}: {e}", dir.display()))
    })?;

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cfg.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::Invariant(format!("thread pool: {e}")))?
    };
    let threads = pool.current_num_threads();
    let results: Vec<Result<(RunRecord, bool)>> = pool.install(|| {
        (0..cfg.mc_runs)
            .into_par_iter()
            .map(|r| {
                let path = checkpoint_path(dir, r);
                if let Some(rec) = load_checkpoint(&path, &hash) {
                    return Ok((rec, true));
                }
                let rec = run_single(cfg, &scenario, r, &hash)?;
                write_atomic(&path, &serde_json::to_vec(&rec)?)?;
                Ok((rec, false))
            })
            .collect()
    });
    let mut records = Vec::with_capacity(cfg.mc_runs);
    let mut resumed = 0;
    for r in results {
        let (rec, loaded) = r?;
        resumed += loaded as usize;
        records.push(rec);
    }

    let (truth, _) = simulate_run(&scenario, 0)?;
    let steady = steady_state_steps(&scenario, cfg.settle_steps);
    let mut files = Vec::new();
    let mut emit = |name: String| -> PathBuf {
        let p = dir.join(&name);
        files.push(name);
        p
    };

    truth.write_csv(&emit("truth.csv".into()))?;
    let naive: Vec<ScoreSeries> = records.iter().map(|r| r.naive.clone()).collect();
    let naive = aggregate_mc(&naive)?;
    naive.write_csv(&emit("naive_ospa.csv".into()))?;

    let mut summaries = Vec::with_capacity(cfg.trackers.len());
    for (t, spec) in cfg.trackers.iter().enumerate() {
        let runs: Vec<&TrackerRun> = records.iter().map(|r| &r.trackers[t]).collect();
        let agg = aggregate_mc(&runs.iter().map(|r| r.series.clone()).collect::<Vec<_>>())?;
        let name = &spec.name;
        agg.write_csv(&emit(format!("{name}_ospa.csv")))?;
        write_cardinality_csv(&emit(format!("{name}_cardinality.csv")), &truth, &runs)?;
        write_tracks_csv(&emit(format!("{name}_tracks.csv")), &runs[0].tracks)?;
        plot_tracks(&emit(format!("{name}_xy.svg")), name, &truth, &runs[0].tracks)?;
        plot_cardinality(&emit(format!("{name}_cardinality.svg")), name, &agg)?;
        plot_ospa(&emit(format!("{name}_ospa.svg")), name, &agg, &naive)?;

        let (mut hit, mut total, mut hit_all) = (0usize, 0usize, 0usize);
        for r in &runs {
            for (k, (&est, objs)) in r.cardinality.iter().zip(&truth_cardinality(&scenario)).enumerate() {
                let ok = est == *objs;
                hit_all += ok as usize;
                if steady[k] {
                    total += 1;
                    hit += ok as usize;
                }
            }
        }
        let steps = runs.len() * scenario.steps;
        summaries.push(TrackerSummary {
            name: name.clone(),
            mean_ospa: agg.mean_ospa(),
            ospa_reduction: 1.0 - agg.mean_ospa() / naive.mean_ospa(),
            card_accuracy_steady: if total == 0 { 0.0 } else { hit as f64 / total as f64 },
            card_accuracy_all: hit_all as f64 / steps as f64,
        });
    }
    let summary = ExperimentSummary {
        name: cfg.name.clone(),
        config_hash: hash.clone(),
        runs: records.len(),
        naive_mean_ospa: naive.mean_ospa(),
        trackers: summaries,
    };
    let summary_path = emit("summary.json".into());
    write_atomic(&summary_path, &serde_json::to_vec_pretty(&summary)?)?;
    files.push("manifest.json".into());
    let manifest = Manifest {
        name: cfg.name.clone(),
        version: VERSION.into(),
        config_hash: hash,
        scenario_seed: scenario.seed,
        chain_seed: cfg.chain.seed,
        mc_runs: cfg.mc_runs,
        threads,
        resumed_runs: resumed,
        wall_time_s: started.elapsed().as_secs_f64(),
        files,
    };
    write_atomic(&dir.join("manifest.json"), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(ExperimentOutput {
        summary,
        records,
        manifest,
    })
}

/// True cardinality from the schedule (truth simulation never drops objects).
fn truth_cardinality(s: &ScenarioConfig) -> Vec<usize> {
    s.cardinality()
}

fn csv_with_schema(path: &Path, schema: &str) -> Result<csv::Writer<std::fs::File>> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{schema}")?;
    Ok(csv::Writer::from_writer(f))
}

pub fn write_tracks_csv(path: &Path, tracks: &TrackSet) -> Result<()> {
    let mut w = csv_with_schema(path, TRACKS_SCHEMA)?;
    w.write_record(["step", "label", "x", "y", "vx", "vy", "omega", "support"])?;
    for s in &tracks.steps {
        for e in &s.estimates {
            let st = &e.state;
            w.write_record([
                s.step.to_string(),
                e.label.0.to_string(),
                st.x.to_string(),
                st.y.to_string(),
                st.vx.to_string(),
                st.vy.to_string(),
                st.omega.map(|v| v.to_string()).unwrap_or_default(),
                e.support.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_cardinality_csv(path: &Path, truth: &GroundTruth, runs: &[&TrackerRun]) -> Result<()> {
    let mut w = csv_with_schema(path, CARDINALITY_SCHEMA)?;
    w.write_record(["step", "card_true", "card_est_mean", "card_est_stderr", "card_hit_rate"])?;
    let r = runs.len() as f64;
    for (k, objs) in truth.steps.iter().enumerate() {
        let vals: Vec<f64> = runs.iter().map(|t| t.cardinality[k] as f64).collect();
        let mean = vals.iter().sum::<f64>() / r;
        let se = if runs.len() > 1 {
            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0) / r).sqrt()
        } else {
            0.0
        };
        let hits = runs.iter().filter(|t| t.cardinality[k] == objs.len()).count() as f64 / r;
        w.write_record([
            k.to_string(),
            objs.len().to_string(),
            mean.to_string(),
            se.to_string(),
            hits.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn plot_tracks(path: &Path, name: &str, truth: &GroundTruth, tracks: &TrackSet) -> Result<()> {
    let mut by_object: BTreeMap<usize, Vec<(f64, [f64; 2])>> = BTreeMap::new();
    for (k, objs) in truth.steps.iter().enumerate() {
        for (id, s) in objs {
            by_object.entry(*id).or_default().push((k as f64, s.position()));
        }
    }
    let panel = |axis: usize, label: &str| {
        let mut series: Vec<Series> = by_object
            .values()
            .enumerate()
            .map(|(i, pts)| {
                let name = if i == 0 { "truth" } else { "" };
                Series::line(name, pts.iter().map(|&(k, p)| (k, p[axis])).collect()).behind()
            })
            .collect();
        for pts in tracks.tracks.values() {
            series.push(Series::points("", pts.iter().map(|(k, s)| (*k as f64, s.position()[axis])).collect()));
        }
        Panel {
            title: format!("{name}: {label} coordinate"),
            x_label: "step".into(),
            y_label: label.into(),
            series,
        }
    };
    render(path, &[panel(0, "x"), panel(1, "y")])
}

fn plot_cardinality(path: &Path, name: &str, agg: &ScoreSeries) -> Result<()> {
    let steps = |v: &[f64]| v.iter().enumerate().map(|(k, &y)| (k as f64, y)).collect();
    render(
        path,
        &[Panel {
            title: format!("{name}: cardinality"),
            x_label: "step".into(),
            y_label: "objects".into(),
            series: vec![
                Series::line("true", steps(&agg.card_true)),
                Series::line("estimated (mean)", steps(&agg.card_est)),
            ],
        }],
    )
}

fn plot_ospa(path: &Path, name: &str, agg: &ScoreSeries, naive: &ScoreSeries) -> Result<()> {
    let steps = |v: &[f64]| v.iter().enumerate().map(|(k, &y)| (k as f64, y)).collect();
    render(
        path,
        &[Panel {
            title: format!("{name}: OSPA"),
            x_label: "step".into(),
            y_label: "OSPA".into(),
            series: vec![
                Series::line(name, steps(&agg.ospa_total)),
                Series::line("raw measurements", steps(&naive.ospa_total)),
            ],
        }],
    )
}

/// Reads one of this crate's CSV exports (or any numeric CSV whose first
/// column is the x axis) and writes an SVG next to it.
pub fn plot_csv(path: &Path) -> Result<PathBuf> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config(path.display().to_string(), format!("cannot read: {e}")))?;
    let schema = text.lines().next().filter(|l| l.starts_with('#')).unwrap_or("").trim().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let rows: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    if headers.len() < 2 || rows.is_empty() {
        return Err(config(path.display().to_string(), "needs a header and at least one row"));
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let num = |row: &csv::StringRecord, i: usize| row.get(i).and_then(|v| v.parse::<f64>().ok()).unwrap_or(f64::NAN);
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("plot").to_string();
    let line_of = |name: &str| -> Option<Series> {
        let i = col(name)?;
        Some(Series::line(name, rows.iter().map(|r| (num(r, 0), num(r, i))).collect()))
    };
    let panels = if schema == METRICS_SCHEMA {
        vec![
            Panel {
                title: format!("{stem}: OSPA"),
                x_label: "step".into(),
                y_label: "OSPA".into(),
                series: ["ospa_total", "ospa_loc", "ospa_card"].iter().filter_map(|n| line_of(n)).collect(),
            },
            Panel {
                title: format!("{stem}: cardinality"),
                x_label: "step".into(),
                y_label: "objects".into(),
                series: ["card_true", "card_est_mean"].iter().filter_map(|n| line_of(n)).collect(),
            },
        ]
    } else if schema == TRACKS_SCHEMA || schema == TRUTH_SCHEMA {
        let id = col("label").or(col("object")).unwrap_or(1);
        let (xi, yi) = (col("x").unwrap_or(2), col("y").unwrap_or(3));
        let mut groups: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
        for r in &rows {
            groups
                .entry(r.get(id).unwrap_or("").to_string())
                .or_default()
                .push((num(r, 0), num(r, xi), num(r, yi)));
        }
        let make = |axis: usize, label: &str| Panel {
            title: format!("{stem}: {label} coordinate"),
            x_label: "step".into(),
            y_label: label.into(),
            series: groups
                .values()
                .map(|g| {
                    let pts = g.iter().map(|&(k, x, y)| (k, if axis == 0 { x } else { y })).collect();
                    if schema == TRUTH_SCHEMA {
                        Series::line("", pts)
                    } else {
                        Series::points("", pts)
                    }
                })
                .collect(),
        };
        vec![make(0, "x"), make(1, "y")]
    } else {
        vec![Panel {
            title: stem.clone(),
            x_label: headers[0].clone(),
            y_label: String::new(),
            series: (1..headers.len())
                .filter(|&i| rows.iter().all(|r| r.get(i).is_some_and(|v| v.parse::<f64>().is_ok())))
                .map(|i| Series::line(headers[i].clone(), rows.iter().map(|r| (num(r, 0), num(r, i))).collect()))
                .collect(),
        }]
    };
    let out = path.with_extension("svg");
    render(&out, &panels)?;
    Ok(out)
}
