//! Dependent Dirichlet process prior: survival bookkeeping between steps and
//! the DP form of the three-case selection rule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::models::kinematics::{param_walk, transition, ClusterParams, KernelConfig, MotionModel, TargetState};
use crate::models::niw::GaussianNiw;
use crate::partition::ClusterLabel;
use crate::prior::{case_probs, draw_prior, CaseProbs, PriorMass, Slot};

/// Partition bookkeeping at one step. `assignments[i]` indexes `labels`,
/// `params` and `sizes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub labels: Vec<ClusterLabel>,
    pub params: Vec<ClusterParams>,
    pub sizes: Vec<usize>,
    pub assignments: Vec<usize>,
    pub object_states: Vec<TargetState>,
    /// First label not yet used by any cluster.
    pub next_label: usize,
}

impl ClusterState {
    pub fn empty() -> Self {
        Self {
            labels: Vec::new(),
            params: Vec::new(),
            sizes: Vec::new(),
            assignments: Vec::new(),
            object_states: Vec::new(),
            next_label: 0,
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub fn n_objects(&self) -> usize {
        self.assignments.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.sizes.len();
        if self.labels.len() != d || self.params.len() != d {
            return Err(Error::Invariant(format!(
                "{} labels, {} params, {} sizes",
                self.labels.len(),
                self.params.len(),
                d
            )));
        }
        if self.object_states.len() != self.assignments.len() {
            return Err(Error::Invariant("one state per object required".into()));
        }
        let mut count = vec![0usize; d];
        for &a in &self.assignments {
            if a >= d {
                return Err(Error::Invariant(format!("assignment {a} out of range")));
            }
            count[a] += 1;
        }
        if count != self.sizes || self.sizes.contains(&0) {
            return Err(Error::Invariant("sizes disagree with assignments".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if !self.labels.iter().all(|l| seen.insert(*l) && l.0 < self.next_label) {
            return Err(Error::Invariant("labels must be unique and below next_label".into()));
        }
        Ok(())
    }
}

/// Result of moving a [`ClusterState`] from `k-1` to `k`, indexed by the
/// previous step's clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionedState {
    /// Per previous object: did it survive?
    pub survivors: Vec<bool>,
    /// `V*_{k|k-1}`.
    pub surviving_sizes: Vec<usize>,
    /// `lambda`: cluster has at least one survivor.
    pub alive: Vec<bool>,
    pub labels: Vec<ClusterLabel>,
    /// Parameters after the random walk; dead clusters keep their old value.
    pub params: Vec<ClusterParams>,
    /// Moved states of the survivors, grouped by cluster.
    pub surviving_states: Vec<Vec<TargetState>>,
    pub next_label: usize,
}

impl TransitionedState {
    /// Nothing carried over, e.g. at the first step.
    pub fn empty(next_label: usize) -> Self {
        Self {
            survivors: Vec::new(),
            surviving_sizes: Vec::new(),
            alive: Vec::new(),
            labels: Vec::new(),
            params: Vec::new(),
            surviving_states: Vec::new(),
            next_label,
        }
    }

    /// `D_{k|k-1}`.
    pub fn n_alive(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    /// One slot per previous cluster with nothing placed yet.
    pub fn slots(&self) -> Vec<Slot> {
        self.surviving_sizes
            .iter()
            .zip(&self.alive)
            .map(|(&c, &a)| Slot {
                carried: if a { c } else { 0 },
                current: 0,
            })
            .collect()
    }
}

pub fn transition_step<R: Rng + ?Sized>(
    prev: &ClusterState,
    p_survive: f64,
    model: MotionModel,
    cfg: &KernelConfig,
    rng: &mut R,
) -> Result<TransitionedState> {
    if !(0.0..=1.0).contains(&p_survive) {
        return Err(param("p_survive", format!("must lie in [0, 1], got {p_survive}")));
    }
    let d = prev.n_clusters();
    let mut survivors = Vec::with_capacity(prev.n_objects());
    let mut sizes = vec![0usize; d];
    let mut states = vec![Vec::new(); d];
    for (i, &c) in prev.assignments.iter().enumerate() {
        let s = rng.random::<f64>() < p_survive;
        survivors.push(s);
        if s {
            sizes[c] += 1;
            states[c].push(transition(&prev.object_states[i], model, cfg, rng));
        }
    }
    let alive: Vec<bool> = sizes.iter().map(|&s| s > 0).collect();
    let params = prev
        .params
        .iter()
        .zip(&alive)
        .map(|(p, &a)| if a { param_walk(p, cfg, rng) } else { p.clone() })
        .collect();
    Ok(TransitionedState {
        survivors,
        surviving_sizes: sizes,
        alive,
        labels: prev.labels.clone(),
        params,
        surviving_states: states,
        next_label: prev.next_label,
    })
}

/// DP masses: `V + V*` for Case 1, `V*` for Case 2, `alpha` for Case 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdpMass {
    pub alpha: f64,
}

impl DdpMass {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(param("alpha", format!("must be positive, got {alpha}")));
        }
        Ok(Self { alpha })
    }
}

impl PriorMass for DdpMass {
    fn occupied(&self, carried: usize, current: usize) -> f64 {
        (current + carried) as f64
    }
    fn dormant(&self, carried: usize) -> f64 {
        carried as f64
    }
    fn fresh(&self, _occupied: usize) -> f64 {
        self.alpha
    }
}

/// Selection probabilities for the next object. `slots` lists every
/// candidate cluster at step `k` (see [`TransitionedState::slots`]).
pub fn ddp_case_probs(slots: &[Slot], alpha: f64) -> Result<CaseProbs> {
    case_probs(slots, &DdpMass::new(alpha)?)
}

pub fn ddp_draw_prior<R: Rng + ?Sized>(
    trans: &TransitionedState,
    n_objects: usize,
    alpha: f64,
    h: &GaussianNiw,
    model: MotionModel,
    rng: &mut R,
) -> Result<ClusterState> {
    draw_prior(trans, n_objects, &DdpMass::new(alpha)?, h, model, rng)
}
