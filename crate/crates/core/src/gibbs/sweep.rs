//! Collapsed Gibbs sweeps over measurement-to-cluster assignments.
//!
//! Cluster parameters are integrated out while assignments are resampled.
//! Born clusters use the NIW posterior predictive; survived clusters keep
//! their covariance and integrate their mean against a Gaussian prior, which
//! gives a Gaussian predictive. [`refresh_unique_params`] draws explicit
//! parameters from the matching conditionals.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dpy::PyMass;
use crate::ddp::DdpMass;
use crate::error::{Error, Result};
use crate::models::gaussian::{log_sum_exp, sample_psd, Gaussian};
use crate::models::kinematics::ClusterParams;
use crate::models::niw::{GaussianNiw, StudentT, SuffStats};
use crate::partition::{canonicalize, ClusterLabel, PyParams};
use crate::prior::{case_masses, PriorMass, Slot};

/// Base measure `H` with its predictive cached.
#[derive(Debug, Clone)]
pub struct BaseMeasure {
    pub h: GaussianNiw,
    predictive: StudentT,
}

impl BaseMeasure {
    pub fn new(h: GaussianNiw) -> Result<Self> {
        if h.dim() != 2 {
            return Err(Error::Dimension { expected: 2, got: h.dim() });
        }
        let predictive = h.predictive()?;
        Ok(Self { h, predictive })
    }

    pub fn ln_predictive(&self, z: &[f64]) -> f64 {
        self.predictive.ln_pdf(z)
    }
}

/// A cluster carried over from the previous step.
#[derive(Debug, Clone, PartialEq)]
pub struct Survivor {
    pub label: ClusterLabel,
    /// Surviving objects, `V*_{k|k-1}`; must be at least one.
    pub carried: usize,
    /// Transitioned parameter. Its covariance is held fixed within the step.
    pub theta: ClusterParams,
    /// Gaussian prior on the cluster mean at this step.
    pub mean_prior: (DVector<f64>, DMatrix<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Place measurements one at a time from their conditional.
    #[default]
    Sequential,
    /// Every measurement in one new cluster.
    SingleCluster,
    /// Every measurement in its own new cluster.
    Singletons,
}

#[derive(Debug, Clone)]
enum Predictive {
    Gaussian(Gaussian),
    Student(StudentT),
}

impl Predictive {
    fn ln_pdf(&self, z: &[f64]) -> f64 {
        match self {
            Predictive::Gaussian(g) => g.ln_pdf(z),
            Predictive::Student(t) => t.ln_pdf(z),
        }
    }
}

#[derive(Debug, Clone)]
struct SlotData {
    /// Index into `survivors`, or `None` for a cluster born at this step.
    survivor: Option<usize>,
    carried: usize,
    stats: SuffStats,
    theta: Option<ClusterParams>,
    cache: Option<Predictive>,
}

/// Assignment state of one frame.
#[derive(Debug, Clone)]
pub struct SweepState {
    step: usize,
    points: Vec<[f64; 2]>,
    survivors: Vec<Survivor>,
    /// Survived slots come first, in `survivors` order, and are never removed.
    slots: Vec<SlotData>,
    assign: Vec<Option<usize>>,
    scratch_slots: Vec<Slot>,
    scratch_w: Vec<f64>,
}

impl SweepState {
    /// Builds the state with nothing assigned, then initialises it.
    pub fn new<M: PriorMass, R: Rng + ?Sized>(
        step: usize,
        points: Vec<[f64; 2]>,
        survivors: Vec<Survivor>,
        init: InitStrategy,
        base: &BaseMeasure,
        mass: &M,
        rng: &mut R,
    ) -> Result<Self> {
        for s in &survivors {
            if s.carried == 0 {
                return Err(Error::Invariant(format!("survivor {:?} carries no objects", s.label)));
            }
        }
        let slots = survivors
            .iter()
            .enumerate()
            .map(|(i, s)| SlotData {
                survivor: Some(i),
                carried: s.carried,
                stats: SuffStats::new(2),
                theta: Some(s.theta.clone()),
                cache: None,
            })
            .collect();
        let n = points.len();
        let mut st = Self {
            step,
            points,
            survivors,
            slots,
            assign: vec![None; n],
            scratch_slots: Vec::new(),
            scratch_w: Vec::new(),
        };
        match init {
            InitStrategy::Sequential => sweep(&mut st, base, mass, rng)?,
            InitStrategy::SingleCluster => {
                if n > 0 {
                    let j = st.push_born();
                    for i in 0..n {
                        st.attach(i, j);
                    }
                }
            }
            InitStrategy::Singletons => {
                for i in 0..n {
                    let j = st.push_born();
                    st.attach(i, j);
                }
            }
        }
        Ok(st)
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn survivors(&self) -> &[Survivor] {
        &self.survivors
    }

    /// Number of occupied clusters.
    pub fn cardinality(&self) -> usize {
        self.slots.iter().filter(|s| s.stats.n > 0).count()
    }

    /// Restricted-growth string of the current partition.
    pub fn partition(&self) -> Vec<usize> {
        let raw: Vec<usize> = self.assign.iter().map(|a| a.expect("all placed")).collect();
        canonicalize(&raw)
    }

    /// Slot index of every measurement.
    pub fn assignments(&self) -> Vec<usize> {
        self.assign.iter().map(|a| a.expect("all placed")).collect()
    }

    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }

    /// Survivor index of slot `j`, or `None` if it was born at this step.
    pub fn slot_survivor(&self, j: usize) -> Option<usize> {
        self.slots[j].survivor
    }

    pub fn slot_size(&self, j: usize) -> usize {
        self.slots[j].stats.n
    }

    pub fn slot_members(&self, j: usize) -> Vec<usize> {
        (0..self.assign.len()).filter(|&i| self.assign[i] == Some(j)).collect()
    }

    pub fn slot_mean(&self, j: usize) -> Option<[f64; 2]> {
        self.slots[j].stats.mean().map(|m| [m[0], m[1]])
    }

    /// Last drawn parameter of slot `j`, if any.
    pub fn slot_params(&self, j: usize) -> Option<&ClusterParams> {
        self.slots[j].theta.as_ref()
    }

    fn push_born(&mut self) -> usize {
        self.slots.push(SlotData {
            survivor: None,
            carried: 0,
            stats: SuffStats::new(2),
            theta: None,
            cache: None,
        });
        self.slots.len() - 1
    }

    fn attach(&mut self, i: usize, j: usize) {
        let z = self.points[i];
        self.slots[j].stats.add(&z).expect("two-dimensional point");
        self.slots[j].cache = None;
        self.assign[i] = Some(j);
    }

    fn detach(&mut self, i: usize) {
        let Some(j) = self.assign[i].take() else {
            return;
        };
        let z = self.points[i];
        let slot = &mut self.slots[j];
        slot.stats.remove(&z);
        if slot.stats.n == 0 {
            // Drop rounding residue left by add/remove.
            slot.stats = SuffStats::new(2);
        }
        slot.cache = None;
        if slot.stats.n == 0 && slot.survivor.is_none() {
            let last = self.slots.len() - 1;
            self.slots.swap_remove(j);
            if j != last {
                for a in self.assign.iter_mut() {
                    if *a == Some(last) {
                        *a = Some(j);
                    }
                }
            }
        }
    }

    /// Mean posterior of a survived slot given its members.
    fn survivor_posterior(&self, j: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let slot = &self.slots[j];
        let s = &self.survivors[slot.survivor.expect("survived slot")];
        let (m0, p0) = &s.mean_prior;
        let Some(ybar) = slot.stats.mean() else {
            return Ok((m0.clone(), p0.clone()));
        };
        let r = &s.theta.cov / slot.stats.n as f64;
        let inn = (p0 + &r).try_inverse().ok_or(Error::NotPositiveDefinite {
            context: "survivor innovation",
        })?;
        let gain = p0 * inn;
        let mean = m0 + &gain * (ybar - m0);
        let cov = p0 - &gain * p0;
        Ok((mean, 0.5 * (&cov + cov.transpose())))
    }

    fn predictive(&mut self, j: usize, base: &BaseMeasure) -> Result<&Predictive> {
        if self.slots[j].cache.is_none() {
            let p = match self.slots[j].survivor {
                Some(si) => {
                    let (m, p) = self.survivor_posterior(j)?;
                    let cov = p + &self.survivors[si].theta.cov;
                    Predictive::Gaussian(Gaussian::new(m, &cov)?)
                }
                None => Predictive::Student(base.h.posterior_stats(&self.slots[j].stats).predictive()?),
            };
            self.slots[j].cache = Some(p);
        }
        Ok(self.slots[j].cache.as_ref().expect("filled above"))
    }
}

/// One pass over all measurements in index order. Unplaced measurements are
/// placed; placed ones are removed and re-placed from their conditional.
pub fn sweep<M: PriorMass, R: Rng + ?Sized>(
    st: &mut SweepState,
    base: &BaseMeasure,
    mass: &M,
    rng: &mut R,
) -> Result<()> {
    for i in 0..st.points.len() {
        st.detach(i);
        let z = st.points[i];

        let mut slots = std::mem::take(&mut st.scratch_slots);
        slots.clear();
        slots.extend(st.slots.iter().map(|s| Slot {
            carried: s.carried,
            current: s.stats.n,
        }));
        let (masses, fresh) = case_masses(&slots, mass).map_err(|e| sweep_error(st.step, i, e.to_string()))?;
        st.scratch_slots = slots;

        let mut w = std::mem::take(&mut st.scratch_w);
        w.clear();
        for (j, &m) in masses.iter().enumerate() {
            let lw = if m > 0.0 {
                m.ln() + st.predictive(j, base)?.ln_pdf(&z)
            } else {
                f64::NEG_INFINITY
            };
            w.push(lw);
        }
        w.push(if fresh > 0.0 { fresh.ln() + base.ln_predictive(&z) } else { f64::NEG_INFINITY });
        if w.iter().any(|v| v.is_nan()) {
            return Err(sweep_error(st.step, i, format!("NaN log weight in {w:?}")));
        }
        let total = log_sum_exp(&w);
        if !total.is_finite() {
            return Err(sweep_error(st.step, i, format!("weights do not normalise: {w:?}")));
        }
        let u: f64 = rng.random::<f64>();
        let mut acc = 0.0;
        let mut choice = w.len() - 1;
        for (j, lw) in w.iter().enumerate() {
            acc += (lw - total).exp();
            if u < acc {
                choice = j;
                break;
            }
        }
        // Guard against rounding sending u past the last positive weight.
        while w[choice] == f64::NEG_INFINITY {
            choice -= 1;
        }
        st.scratch_w = w;
        let j = if choice == st.slots.len() { st.push_born() } else { choice };
        st.attach(i, j);
    }
    Ok(())
}

fn sweep_error(step: usize, index: usize, detail: String) -> Error {
    Error::Sweep { step, index, detail }
}

pub fn ddp_gibbs_sweep<R: Rng + ?Sized>(
    st: &mut SweepState,
    base: &BaseMeasure,
    alpha: f64,
    rng: &mut R,
) -> Result<()> {
    sweep(st, base, &DdpMass::new(alpha)?, rng)
}

pub fn dpy_gibbs_sweep<R: Rng + ?Sized>(
    st: &mut SweepState,
    base: &BaseMeasure,
    p: &PyParams,
    rng: &mut R,
) -> Result<()> {
    sweep(st, base, &PyMass { p: *p }, rng)
}

/// Redraws one slot's parameter from its conditional given its members.
/// Born slots draw from the NIW posterior (the prior `H` when empty);
/// survived slots draw their mean and keep their covariance.
pub fn refresh_slot<R: Rng + ?Sized>(st: &mut SweepState, j: usize, base: &BaseMeasure, rng: &mut R) -> Result<()> {
    let theta = match st.slots[j].survivor {
        Some(si) => {
            let (m, p) = st.survivor_posterior(j)?;
            ClusterParams {
                mean: sample_psd(&m, &p, rng),
                cov: st.survivors[si].theta.cov.clone(),
            }
        }
        None => base.h.posterior_stats(&st.slots[j].stats).sample(rng)?,
    };
    st.slots[j].theta = Some(theta);
    Ok(())
}

pub fn refresh_unique_params<R: Rng + ?Sized>(st: &mut SweepState, base: &BaseMeasure, rng: &mut R) -> Result<()> {
    for j in 0..st.slots.len() {
        refresh_slot(st, j, base, rng)?;
    }
    Ok(())
}
