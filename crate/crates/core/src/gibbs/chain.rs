//! Per-step Gibbs chains linked through survival of the last retained sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::alpha::sample_alpha;
use super::belief::Belief;
use super::sweep::{
    ddp_gibbs_sweep, dpy_gibbs_sweep, refresh_unique_params, BaseMeasure, InitStrategy, Survivor, SweepState,
};
use crate::ddp::{transition_step, ClusterState, DdpMass};
use crate::dpy::PyMass;
use crate::error::{config, Error, Result};
use crate::models::kinematics::{ClusterParams, KernelConfig, MotionModel, TargetState};
use crate::models::niw::GaussianNiw;
use crate::partition::{ClusterLabel, PyParams};
use crate::simulate::MeasurementFrame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorKind {
    DdpEmm,
    DpyStp { discount: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlphaMode {
    Fixed { alpha: f64 },
    /// `Gamma(shape, rate)` hyperprior, resampled once per sweep.
    Gamma { shape: f64, rate: f64, initial: f64 },
}

impl AlphaMode {
    fn initial(&self) -> f64 {
        match *self {
            AlphaMode::Fixed { alpha } => alpha,
            AlphaMode::Gamma { initial, .. } => initial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub prior: PriorKind,
    pub alpha: AlphaMode,
    /// Base measure `H` over cluster parameters in Cartesian position space.
    pub base: GaussianNiw,
    pub motion: MotionModel,
    pub kernel: KernelConfig,
    pub p_survive: f64,
    /// Prior spread of a new track's velocity components.
    pub velocity_sd0: f64,
    /// Prior spread of a new track's turn rate.
    #[serde(default)]
    pub turn_sd0: f64,
    #[serde(default)]
    pub init: InitStrategy,
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if let PriorKind::DpyStp { discount } = self.prior {
            PyParams::new(discount, self.alpha.initial()).map_err(|e| config("tracker.prior.discount", e.to_string()))?;
        }
        match self.alpha {
            AlphaMode::Fixed { alpha } if !(alpha > 0.0) => {
                return Err(config("tracker.alpha.alpha", "must be positive"));
            }
            AlphaMode::Gamma { shape, rate, initial } if !(shape > 0.0 && rate > 0.0 && initial > 0.0) => {
                return Err(config("tracker.alpha", "shape, rate and initial must be positive"));
            }
            _ => {}
        }
        if self.base.dim() != 2 {
            return Err(config("tracker.base", "cluster space is two-dimensional"));
        }
        if !(self.base.lambda > 0.0) {
            return Err(config("tracker.base.lambda", "must be positive for a proper predictive"));
        }
        self.kernel.validate().map_err(|e| config("tracker.kernel", e.to_string()))?;
        if !(0.0..=1.0).contains(&self.p_survive) {
            return Err(config("tracker.p_survive", "must lie in [0, 1]"));
        }
        if !(self.velocity_sd0 >= 0.0) || !(self.turn_sd0 >= 0.0) {
            return Err(config("tracker.velocity_sd0", "spreads must be non-negative"));
        }
        Ok(())
    }
}

/// Sweeps per time step: the first `burn_in` are discarded and every
/// `thin`-th of the rest is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub n_sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_sweeps: 1500,
            burn_in: 500,
            thin: 2,
            seed: 0,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_sweeps {
            return Err(config("chain.burn_in", "must be smaller than n_sweeps"));
        }
        if self.thin == 0 {
            return Err(config("chain.thin", "must be at least 1"));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        (self.n_sweeps - self.burn_in) / self.thin
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCluster {
    pub label: ClusterLabel,
    pub survived: bool,
    /// Indices into the step's measurement frame.
    pub members: Vec<usize>,
    pub params: ClusterParams,
    /// Posterior mean of the object state given this configuration.
    pub state: TargetState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSample {
    /// Cluster label of every measurement.
    pub assignments: Vec<ClusterLabel>,
    pub clusters: Vec<SampleCluster>,
    pub alpha: f64,
}

impl PosteriorSample {
    pub fn cardinality(&self) -> usize {
        self.clusters.len()
    }

    pub fn unique_params(&self) -> Vec<&ClusterParams> {
        self.clusters.iter().map(|c| &c.params).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepPosterior {
    pub step: usize,
    pub n_measurements: usize,
    pub samples: Vec<PosteriorSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub steps: Vec<StepPosterior>,
    /// `CA_k`: the committed assignments of every step so far.
    pub history: Vec<Vec<ClusterLabel>>,
}

#[derive(Debug, Clone)]
struct Committed {
    label: ClusterLabel,
    params: ClusterParams,
    belief: Belief,
    members: usize,
}

/// Seeded generator for replication `stream` of a run.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn run_chain(frames: &[MeasurementFrame], tracker: &TrackerConfig, chain: &ChainConfig) -> Result<ChainOutput> {
    run_chain_with(frames, tracker, chain, &mut chain_rng(chain.seed, 0))
}

pub fn run_chain_with(
    frames: &[MeasurementFrame],
    tracker: &TrackerConfig,
    chain: &ChainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ChainOutput> {
    tracker.validate()?;
    chain.validate()?;
    let base = BaseMeasure::new(tracker.base.clone())?;
    let quiet = KernelConfig {
        param_walk_cov: nalgebra::DMatrix::zeros(2, 2),
        ..tracker.kernel.clone()
    };
    let mut committed: Vec<Committed> = Vec::new();
    let mut next_label = 0usize;
    let mut alpha = tracker.alpha.initial();
    let mut steps = Vec::with_capacity(frames.len());
    let mut history = Vec::with_capacity(frames.len());

    for frame in frames {
        let (survivors, predicted) = transition(&committed, next_label, tracker, &quiet, rng)?;
        let points: Vec<[f64; 2]> = frame.measurements.iter().map(|z| z.to_cartesian()).collect();
        let n = points.len();
        let mut st = match tracker.prior {
            PriorKind::DdpEmm => {
                SweepState::new(frame.step, points, survivors, tracker.init, &base, &DdpMass::new(alpha)?, rng)?
            }
            PriorKind::DpyStp { discount } => SweepState::new(
                frame.step,
                points,
                survivors,
                tracker.init,
                &base,
                &PyMass {
                    p: PyParams::new(discount, alpha)?,
                },
                rng,
            )?,
        };
        let mut samples = Vec::with_capacity(chain.retained());
        let mut commit = None;
        for t in 0..chain.n_sweeps {
            match tracker.prior {
                PriorKind::DdpEmm => ddp_gibbs_sweep(&mut st, &base, alpha, rng)?,
                PriorKind::DpyStp { discount } => {
                    dpy_gibbs_sweep(&mut st, &base, &PyParams::new(discount, alpha)?, rng)?
                }
            }
            if let AlphaMode::Gamma { shape, rate, .. } = tracker.alpha {
                alpha = sample_alpha(alpha, st.cardinality(), n, shape, rate, rng)?;
            }
            if t >= chain.burn_in && (t - chain.burn_in) % chain.thin == chain.thin - 1 {
                refresh_unique_params(&mut st, &base, rng)?;
                let (sample, next) = summarize(&st, &predicted, next_label, alpha, tracker)?;
                samples.push(sample);
                commit = Some(next);
            }
        }
        let last = samples.last().ok_or_else(|| Error::Invariant("no retained samples".into()))?;
        history.push(last.assignments.clone());
        committed = commit.unwrap_or_default();
        next_label = committed.iter().map(|c| c.label.0 + 1).max().unwrap_or(0).max(next_label);
        steps.push(StepPosterior {
            step: frame.step,
            n_measurements: n,
            samples,
        });
    }
    Ok(ChainOutput { steps, history })
}

/// Survival draw for every committed cluster, then the kinematic prediction
/// of those that survive.
fn transition(
    committed: &[Committed],
    next_label: usize,
    tracker: &TrackerConfig,
    quiet: &KernelConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Survivor>, Vec<Belief>)> {
    let mut prev = ClusterState::empty();
    prev.next_label = next_label;
    for (j, c) in committed.iter().enumerate() {
        prev.labels.push(c.label);
        prev.params.push(c.params.clone());
        prev.sizes.push(c.members);
        let s = c.belief.state();
        for _ in 0..c.members {
            prev.assignments.push(j);
            prev.object_states.push(s);
        }
    }
    let trans = transition_step(&prev, tracker.p_survive, tracker.motion, quiet, rng)?;
    let mut survivors = Vec::new();
    let mut predicted = Vec::new();
    for (j, c) in committed.iter().enumerate() {
        if !trans.alive[j] {
            continue;
        }
        let pred = c.belief.predict(tracker.motion, &tracker.kernel);
        survivors.push(Survivor {
            label: c.label,
            carried: trans.surviving_sizes[j],
            theta: ClusterParams {
                mean: pred.position(),
                cov: c.params.cov.clone(),
            },
            mean_prior: (pred.position(), pred.position_cov()),
        });
        predicted.push(pred);
    }
    Ok((survivors, predicted))
}

/// Turns the current configuration into a posterior sample and the state
/// that would be carried forward if it were the last one.
fn summarize(
    st: &SweepState,
    predicted: &[Belief],
    next_label: usize,
    alpha: f64,
    tracker: &TrackerConfig,
) -> Result<(PosteriorSample, Vec<Committed>)> {
    let mut occupied: Vec<(usize, usize)> = (0..st.n_slots())
        .filter(|&j| st.slot_size(j) > 0)
        .map(|j| (j, st.slot_members(j)[0]))
        .collect();
    // Survived slots keep their order; born ones are ranked by first member.
    occupied.sort_by_key(|&(j, first)| match st.slot_survivor(j) {
        Some(si) => (0, si),
        None => (1, first),
    });
    let mut born_rank = 0;
    let mut label_of = vec![ClusterLabel(usize::MAX); st.n_slots()];
    let mut clusters = Vec::with_capacity(occupied.len());
    let mut commit = Vec::with_capacity(occupied.len());
    for &(j, _) in &occupied {
        let members = st.slot_members(j);
        let n = members.len();
        let ybar = st.slot_mean(j).expect("occupied slot");
        let params = st
            .slot_params(j)
            .cloned()
            .ok_or_else(|| Error::Invariant("slot parameter missing after refresh".into()))?;
        let (label, belief, survived) = match st.slot_survivor(j) {
            Some(si) => (
                st.survivors()[si].label,
                predicted[si].update(ybar, n, &params.cov)?,
                true,
            ),
            None => {
                let l = ClusterLabel(next_label + born_rank);
                born_rank += 1;
                let pos_cov = &params.cov / n as f64;
                (
                    l,
                    Belief::born(ybar, &pos_cov, tracker.motion, tracker.velocity_sd0, tracker.turn_sd0),
                    false,
                )
            }
        };
        label_of[j] = label;
        clusters.push(SampleCluster {
            label,
            survived,
            members,
            params: params.clone(),
            state: belief.state(),
        });
        commit.push(Committed {
            label,
            params,
            belief,
            members: n,
        });
    }
    let assignments = st.assignments().iter().map(|&j| label_of[j]).collect();
    Ok((
        PosteriorSample {
            assignments,
            clusters,
            alpha,
        },
        commit,
    ))
}
