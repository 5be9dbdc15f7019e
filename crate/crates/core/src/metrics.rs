//! OSPA distance, Monte-Carlo aggregation and the measurement-only baseline.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::simulate::{GroundTruth, MeasurementFrame};

pub const METRICS_SCHEMA: &str = "# schema: bnpmot.metrics.v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OspaConfig {
    pub p: f64,
    pub c: f64,
}

impl Default for OspaConfig {
    fn default() -> Self {
        Self { p: 1.0, c: 100.0 }
    }
}

impl OspaConfig {
    pub fn new(p: f64, c: f64) -> Result<Self> {
        let cfg = Self { p, c };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(param("p", "OSPA order must be >= 1"));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(param("c", "OSPA cutoff must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ospa {
    pub total: f64,
    pub location: f64,
    pub cardinality: f64,
}

/// Minimum-cost assignment of every row to a distinct column (`rows <= cols`),
/// by the Hungarian method with potentials. Returns the column of each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "hungarian needs rows <= cols");
    // 1-based arrays; column 0 is a virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=m {
        if row_of[j] > 0 {
            col_of[row_of[j] - 1] = j - 1;
        }
    }
    col_of
}

fn cut_cost(a: &[f64; 2], b: &[f64; 2], cfg: &OspaConfig) -> f64 {
    let d = (a[0] - b[0]).hypot(a[1] - b[1]);
    d.min(cfg.c).powf(cfg.p)
}

/// Sum in ascending order, so the result does not depend on which set
/// indexes the rows.
pub fn sorted_sum(costs: &mut [f64]) -> f64 {
    costs.sort_by(f64::total_cmp);
    costs.iter().fold(0.0, |a, b| a + b)
}

/// OSPA from an assignment cost that has already been minimised.
pub fn ospa_from_cost(assigned: f64, m: usize, n: usize, cfg: &OspaConfig) -> Ospa {
    if n == 0 {
        return Ospa {
            total: 0.0,
            location: 0.0,
            cardinality: 0.0,
        };
    }
    let card = cfg.c.powf(cfg.p) * (n - m) as f64;
    let nf = n as f64;
    let inv = 1.0 / cfg.p;
    Ospa {
        total: ((assigned + card) / nf).powf(inv),
        location: (assigned / nf).powf(inv),
        cardinality: (card / nf).powf(inv),
    }
}

/// OSPA between two finite sets of planar points.
pub fn ospa(x: &[[f64; 2]], y: &[[f64; 2]], cfg: &OspaConfig) -> Ospa {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|a| large.iter().map(|b| cut_cost(a, b, cfg)).collect())
        .collect();
    let cols = hungarian(&cost);
    let mut matched: Vec<f64> = cols.iter().enumerate().map(|(i, &j)| cost[i][j]).collect();
    ospa_from_cost(sorted_sum(&mut matched), small.len(), large.len(), cfg)
}

/// Per-step scores, either of one run or averaged over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries {
    pub ospa_total: Vec<f64>,
    pub ospa_loc: Vec<f64>,
    pub ospa_card: Vec<f64>,
    pub card_true: Vec<f64>,
    pub card_est: Vec<f64>,
    /// Standard error of `ospa_total` across runs.
    pub stderr: Vec<f64>,
    /// Standard error of `card_est` across runs.
    pub card_stderr: Vec<f64>,
    pub runs: usize,
}

impl ScoreSeries {
    pub fn len(&self) -> usize {
        self.ospa_total.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ospa_total.is_empty()
    }

    pub fn mean_ospa(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.ospa_total.iter().sum::<f64>() / self.len() as f64
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "{METRICS_SCHEMA}")?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["step", "ospa_total", "ospa_loc", "ospa_card", "card_true", "card_est_mean", "stderr"])?;
        for k in 0..self.len() {
            w.write_record([
                k.to_string(),
                self.ospa_total[k].to_string(),
                self.ospa_loc[k].to_string(),
                self.ospa_card[k].to_string(),
                self.card_true[k].to_string(),
                self.card_est[k].to_string(),
                self.stderr[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scores one run: `estimates[k]` are the reported positions at step `k`.
pub fn score_run(truth: &GroundTruth, estimates: &[Vec<[f64; 2]>], cfg: &OspaConfig) -> Result<ScoreSeries> {
    if estimates.len() != truth.steps.len() {
        return Err(Error::Length(format!(
            "{} estimate steps for {} truth steps",
            estimates.len(),
            truth.steps.len()
        )));
    }
    let k = estimates.len();
    let mut s = ScoreSeries {
        ospa_total: Vec::with_capacity(k),
        ospa_loc: Vec::with_capacity(k),
        ospa_card: Vec::with_capacity(k),
        card_true: Vec::with_capacity(k),
        card_est: Vec::with_capacity(k),
        stderr: vec![0.0; k],
        card_stderr: vec![0.0; k],
        runs: 1,
    };
    for (i, est) in estimates.iter().enumerate() {
        let o = ospa(&truth.positions(i), est, cfg);
        s.ospa_total.push(o.total);
        s.ospa_loc.push(o.location);
        s.ospa_card.push(o.cardinality);
        s.card_true.push(truth.steps[i].len() as f64);
        s.card_est.push(est.len() as f64);
    }
    Ok(s)
}

/// The no-inference baseline: every measurement is reported as an object.
pub fn naive_estimates(frames: &[MeasurementFrame]) -> Vec<Vec<[f64; 2]>> {
    frames
        .iter()
        .map(|f| f.measurements.iter().map(|z| z.to_cartesian()).collect())
        .collect()
}

fn mean_se(values: impl Iterator<Item = f64> + Clone, r: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / r as f64;
    if r < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
    (mean, (var / r as f64).sqrt())
}

/// Pointwise mean and standard error over runs.
pub fn aggregate_mc(runs: &[ScoreSeries]) -> Result<ScoreSeries> {
    let first = runs.first().ok_or_else(|| Error::Length("no runs to aggregate".into()))?;
    let k = first.len();
    if runs.iter().any(|r| r.len() != k) {
        return Err(Error::Length("runs differ in length".into()));
    }
    let r = runs.len();
    let mut out = ScoreSeries {
        ospa_total: Vec::with_capacity(k),
        ospa_loc: Vec::with_capacity(k),
        ospa_card: Vec::with_capacity(k),
        card_true: Vec::with_capacity(k),
        card_est: Vec::with_capacity(k),
        stderr: Vec::with_capacity(k),
        card_stderr: Vec::with_capacity(k),
        runs: runs.iter().map(|s| s.runs).sum(),
    };
    for i in 0..k {
        let (t, se) = mean_se(runs.iter().map(|s| s.ospa_total[i]), r);
        out.ospa_total.push(t);
        out.stderr.push(se);
        out.ospa_loc.push(mean_se(runs.iter().map(|s| s.ospa_loc[i]), r).0);
        out.ospa_card.push(mean_se(runs.iter().map(|s| s.ospa_card[i]), r).0);
        out.card_true.push(mean_se(runs.iter().map(|s| s.card_true[i]), r).0);
        let (c, cse) = mean_se(runs.iter().map(|s| s.card_est[i]), r);
        out.card_est.push(c);
        out.card_stderr.push(cse);
    }
    Ok(out)
}
