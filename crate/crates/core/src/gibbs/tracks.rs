//! Point estimates of tracks from per-step posterior samples.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::chain::StepPosterior;
use crate::error::{Error, Result};
use crate::models::kinematics::TargetState;
use crate::partition::ClusterLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub label: ClusterLabel,
    pub state: TargetState,
    /// Fraction of retained samples containing this cluster.
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEstimate {
    pub step: usize,
    /// Posterior mode of the number of clusters.
    pub cardinality: usize,
    /// Mean number of clusters over retained samples.
    pub cardinality_mean: f64,
    pub estimates: Vec<TrackPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSet {
    pub steps: Vec<StepEstimate>,
    /// Time-indexed states of every label that was ever reported.
    pub tracks: BTreeMap<ClusterLabel, Vec<(usize, TargetState)>>,
}

impl TrackSet {
    pub fn positions(&self, i: usize) -> Vec<[f64; 2]> {
        self.steps[i].estimates.iter().map(|e| e.state.position()).collect()
    }

    pub fn cardinality(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.cardinality).collect()
    }
}

/// Smallest most frequent value.
pub fn mode(values: &[usize]) -> Option<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_default() += 1;
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|&(_, c)| c == best).map(|(v, _)| v)
}

/// Identity of a cluster across samples of one step: survived clusters by
/// label, born clusters by their first member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Key {
    Survived(usize),
    Born(usize),
}

/// Per step, reports the modal number of clusters, choosing the clusters
/// that appear in the most samples and averaging their states.
pub fn extract_tracks(steps: &[StepPosterior]) -> Result<TrackSet> {
    let mut out = Vec::with_capacity(steps.len());
    let mut tracks: BTreeMap<ClusterLabel, Vec<(usize, TargetState)>> = BTreeMap::new();
    for sp in steps {
        if sp.samples.is_empty() {
            return Err(Error::Invariant(format!("step {} has no samples", sp.step)));
        }
        let cards: Vec<usize> = sp.samples.iter().map(|s| s.cardinality()).collect();
        let card = mode(&cards).expect("non-empty");
        let card_mean = cards.iter().sum::<usize>() as f64 / cards.len() as f64;

        let mut acc: HashMap<Key, (usize, [f64; 5], ClusterLabel, bool)> = HashMap::new();
        for s in &sp.samples {
            for c in &s.clusters {
                let key = if c.survived {
                    Key::Survived(c.label.0)
                } else {
                    Key::Born(c.members[0])
                };
                let e = acc.entry(key).or_insert((0, [0.0; 5], c.label, c.state.omega.is_some()));
                e.0 += 1;
                let v = [c.state.x, c.state.y, c.state.vx, c.state.vy, c.state.omega.unwrap_or(0.0)];
                for (a, b) in e.1.iter_mut().zip(v) {
                    *a += b;
                }
                // Report the label used by the latest sample, which is the one
                // carried forward.
                e.2 = c.label;
            }
        }
        let mut ranked: Vec<(Key, (usize, [f64; 5], ClusterLabel, bool))> = acc.into_iter().collect();
        ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.0.cmp(&b.0)));
        let n = sp.samples.len() as f64;
        let mut estimates: Vec<TrackPoint> = ranked
            .into_iter()
            .take(card)
            .map(|(_, (count, sum, label, has_omega))| {
                let m = sum.map(|v| v / count as f64);
                TrackPoint {
                    label,
                    state: TargetState {
                        x: m[0],
                        y: m[1],
                        vx: m[2],
                        vy: m[3],
                        omega: has_omega.then_some(m[4]),
                    },
                    support: count as f64 / n,
                }
            })
            .collect();
        estimates.sort_by_key(|e| e.label);
        for e in &estimates {
            tracks.entry(e.label).or_default().push((sp.step, e.state));
        }
        out.push(StepEstimate {
            step: sp.step,
            cardinality: card,
            cardinality_mean: card_mean,
            estimates,
        });
    }
    Ok(TrackSet { steps: out, tracks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_prefers_smallest_on_ties() {
        assert_eq!(mode(&[2, 2, 3]), Some(2));
        assert_eq!(mode(&[3, 2]), Some(2));
        assert_eq!(mode(&[]), None);
    }
}
