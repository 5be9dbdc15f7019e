//! Three-case cluster selection shared by the dependent DP and PY priors.
//!
//! At step `k` every candidate cluster is a [`Slot`]. A slot carries the
//! number of surviving objects it inherited from step `k-1` (zero for a
//! cluster born at `k`) and the number of objects placed in it so far.
//! Occupied slots are Case 1, survived-but-empty slots are Case 2, and the
//! extra trailing option is Case 3 (a new cluster).

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::models::gaussian::{cholesky, sample_with_chol};
use crate::models::kinematics::{ClusterParams, MotionModel, TargetState};
use crate::models::niw::GaussianNiw;
use crate::partition::ClusterLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Slot {
    /// Surviving objects inherited from the previous step, `V* lambda`.
    pub carried: usize,
    /// Objects placed in this slot at the current step, `V_k`.
    pub current: usize,
}

impl Slot {
    pub fn is_live(&self) -> bool {
        self.carried > 0 || self.current > 0
    }
}

/// Unnormalised prior masses of the three cases.
pub trait PriorMass {
    /// Case 1: a slot already holding `current >= 1` objects.
    fn occupied(&self, carried: usize, current: usize) -> f64;
    /// Case 2: a survived slot with no objects placed yet.
    fn dormant(&self, carried: usize) -> f64;
    /// Case 3, given the number of occupied slots.
    fn fresh(&self, occupied: usize) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    Occupied,
    Dormant,
    New,
}

/// Normalised selection probabilities; `slots[j]` is zero for dead slots.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseProbs {
    pub slots: Vec<f64>,
    pub new: f64,
}

impl CaseProbs {
    pub fn total(&self) -> f64 {
        self.slots.iter().sum::<f64>() + self.new
    }

    /// Samples an option: `Some(j)` for slot `j`, `None` for a new cluster.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        let u: f64 = rng.random::<f64>();
        let mut acc = 0.0;
        for (j, &p) in self.slots.iter().enumerate() {
            acc += p;
            if u < acc {
                return Some(j);
            }
        }
        None
    }
}

pub fn case_of(slot: &Slot) -> Option<Case> {
    match (slot.current, slot.carried) {
        (0, 0) => None,
        (0, _) => Some(Case::Dormant),
        _ => Some(Case::Occupied),
    }
}

/// Unnormalised masses for every slot plus the new-cluster option.
pub fn case_masses<M: PriorMass>(slots: &[Slot], mass: &M) -> Result<(Vec<f64>, f64)> {
    let mut occupied = 0;
    let mut out = Vec::with_capacity(slots.len());
    for (j, s) in slots.iter().enumerate() {
        let m = match case_of(s) {
            None => 0.0,
            Some(Case::Dormant) => mass.dormant(s.carried),
            Some(_) => {
                occupied += 1;
                mass.occupied(s.carried, s.current)
            }
        };
        if !(m >= 0.0) {
            return Err(Error::Invariant(format!("negative selection mass {m} for slot {j}")));
        }
        out.push(m);
    }
    let fresh = mass.fresh(occupied);
    if !(fresh >= 0.0) {
        return Err(Error::Invariant(format!("negative new-cluster mass {fresh}")));
    }
    Ok((out, fresh))
}

/// Selection probabilities normalised by their actual total.
pub fn case_probs<M: PriorMass>(slots: &[Slot], mass: &M) -> Result<CaseProbs> {
    let (mut masses, fresh) = case_masses(slots, mass)?;
    let g: f64 = masses.iter().sum::<f64>() + fresh;
    if g == 0.0 {
        // Nothing placed yet and alpha = 0: the first object opens a cluster.
        return Ok(CaseProbs {
            slots: masses,
            new: 1.0,
        });
    }
    for m in &mut masses {
        *m /= g;
    }
    Ok(CaseProbs {
        slots: masses,
        new: fresh / g,
    })
}

/// Draws the step-`k` configuration from the prior by placing objects one at
/// a time. Case 1 reuses the slot's parameter, Case 2 installs the walked
/// parameter, Case 3 draws a fresh one from `h`.
pub fn draw_prior<M: PriorMass, R: Rng + ?Sized>(
    trans: &crate::ddp::TransitionedState,
    n_objects: usize,
    mass: &M,
    h: &GaussianNiw,
    model: MotionModel,
    rng: &mut R,
) -> Result<crate::ddp::ClusterState> {
    let mut slots: Vec<Slot> = trans
        .surviving_sizes
        .iter()
        .zip(&trans.alive)
        .map(|(&c, &a)| Slot {
            carried: if a { c } else { 0 },
            current: 0,
        })
        .collect();
    let mut params: Vec<ClusterParams> = trans.params.clone();
    let mut labels: Vec<ClusterLabel> = trans.labels.clone();
    let mut next_label = trans.next_label;
    let mut slot_of = Vec::with_capacity(n_objects);
    let mut states = Vec::with_capacity(n_objects);

    for _ in 0..n_objects {
        let probs = case_probs(&slots, mass)?;
        let j = match probs.sample(rng) {
            Some(j) => j,
            None => {
                slots.push(Slot::default());
                params.push(h.sample(rng)?);
                labels.push(ClusterLabel(next_label));
                next_label += 1;
                slots.len() - 1
            }
        };
        let template = trans
            .surviving_states
            .get(j)
            .filter(|v| !v.is_empty())
            .map(|v| v[slots[j].current % v.len()]);
        slots[j].current += 1;
        slot_of.push(j);
        states.push(draw_object(&params[j], template, model, rng)?);
    }

    // Compact to occupied slots, keeping first-use order stable.
    let mut remap = vec![usize::MAX; slots.len()];
    let mut out = crate::ddp::ClusterState::empty();
    out.next_label = next_label;
    for (j, s) in slots.iter().enumerate() {
        if s.current > 0 {
            remap[j] = out.labels.len();
            out.labels.push(labels[j]);
            out.params.push(params[j].clone());
            out.sizes.push(s.current);
        }
    }
    out.assignments = slot_of.iter().map(|&j| remap[j]).collect();
    out.object_states = states;
    out.validate()?;
    Ok(out)
}

/// Object state given its cluster: position from `f(. | theta)`, kinematics
/// from a surviving member when one exists.
fn draw_object<R: Rng + ?Sized>(
    theta: &ClusterParams,
    template: Option<TargetState>,
    model: MotionModel,
    rng: &mut R,
) -> Result<TargetState> {
    let chol = cholesky(&theta.cov, "cluster covariance")?;
    let mean = DVector::from_column_slice(&theta.mean.as_slice()[..2]);
    let sub = chol.view((0, 0), (2, 2)).into_owned();
    let pos = sample_with_chol(&mean, &sub, rng);
    let base = template.unwrap_or(match model {
        MotionModel::CoordinatedTurn => TargetState::ct(0.0, 0.0, 0.0, 0.0, 0.0),
        MotionModel::ConstantVelocity => TargetState::cv(0.0, 0.0, 0.0, 0.0),
    });
    Ok(TargetState {
        x: pos[0],
        y: pos[1],
        ..base
    })
}
