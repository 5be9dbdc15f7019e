//! Dependent Pitman-Yor prior: the PY form of the three-case rule and the
//! posterior decomposition of the random measure.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::ddp::{ClusterState, TransitionedState};
use crate::error::{param, Error, Result};
use crate::models::kinematics::{ClusterParams, MotionModel};
use crate::models::niw::GaussianNiw;
use crate::partition::PyParams;
use crate::prior::{case_probs, draw_prior, CaseProbs, PriorMass, Slot};

/// PY masses: `V* + V - d`, `V* - d` and `alpha + d |D_k|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PyMass {
    pub p: PyParams,
}

impl PriorMass for PyMass {
    fn occupied(&self, carried: usize, current: usize) -> f64 {
        (current + carried) as f64 - self.p.discount()
    }
    fn dormant(&self, carried: usize) -> f64 {
        carried as f64 - self.p.discount()
    }
    fn fresh(&self, occupied: usize) -> f64 {
        self.p.concentration() + self.p.discount() * occupied as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PyClusterState {
    pub state: ClusterState,
    pub params: PyParams,
    /// Survival flag of each previous-step cluster.
    pub eta: Vec<bool>,
}

pub fn dpy_case_probs(slots: &[Slot], p: &PyParams) -> Result<CaseProbs> {
    case_probs(slots, &PyMass { p: *p })
}

pub fn dpy_draw_prior<R: Rng + ?Sized>(
    trans: &TransitionedState,
    n_objects: usize,
    p: &PyParams,
    h: &GaussianNiw,
    model: MotionModel,
    rng: &mut R,
) -> Result<PyClusterState> {
    let state = draw_prior(trans, n_objects, &PyMass { p: *p }, h, model, rng)?;
    Ok(PyClusterState {
        state,
        params: *p,
        eta: trans.alive.clone(),
    })
}

/// Atoms of the posterior random measure plus the mass left to the
/// continuation process `PY(d, alpha + D d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMeasure {
    pub atoms: Vec<(f64, ClusterParams)>,
    pub residual: f64,
    pub continuation: PyParams,
}

pub fn py_posterior_measure<R: Rng + ?Sized>(s: &PyClusterState, rng: &mut R) -> Result<PosteriorMeasure> {
    let d = s.params.discount();
    let alpha = s.params.concentration();
    if d <= 0.0 {
        return Err(param(
            "discount",
            "posterior decomposition needs d > 0; with d = 0 use the Dirichlet posterior",
        ));
    }
    let k = s.state.n_clusters();
    if k == 0 {
        return Err(param("state", "needs at least one occupied cluster"));
    }
    let n = s.state.n_objects() as f64;
    let kd = k as f64 * d;
    let b = Beta::new(n - kd, alpha + kd)
        .map_err(|e| Error::Invariant(format!("posterior Beta: {e}")))?
        .sample(rng);
    let pis = dirichlet(&s.state.sizes.iter().map(|&v| v as f64 - d).collect::<Vec<_>>(), rng)?;
    let atoms: Vec<(f64, ClusterParams)> = pis
        .iter()
        .zip(&s.state.params)
        .map(|(&pi, theta)| (b * pi, theta.clone()))
        .collect();
    let residual = 1.0 - atoms.iter().map(|a| a.0).sum::<f64>();
    Ok(PosteriorMeasure {
        atoms,
        residual,
        continuation: PyParams::new(d, alpha + kd)?,
    })
}

/// `Dirichlet(a)` through normalised Gamma draws.
pub fn dirichlet<R: Rng + ?Sized>(a: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if a.len() == 1 {
        return Ok(vec![1.0]);
    }
    let mut g = Vec::with_capacity(a.len());
    for &ai in a {
        let dist = Gamma::new(ai, 1.0).map_err(|e| param("dirichlet", e.to_string()))?;
        g.push(dist.sample(rng));
    }
    let total: f64 = g.iter().sum();
    Ok(g.into_iter().map(|x| x / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddp::ddp_case_probs;
    use crate::partition::ClusterLabel;
    use crate::models::kinematics::TargetState;
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn worked_example() {
        let p = PyParams::new(0.5, 1.0).unwrap();
        let probs = dpy_case_probs(&[Slot { carried: 2, current: 1 }], &p).unwrap();
        assert_eq!(probs.slots, vec![0.625]);
        assert_eq!(probs.new, 0.375);
    }

    #[test]
    fn zero_discount_matches_dp() {
        let slots = [
            Slot { carried: 2, current: 1 },
            Slot { carried: 1, current: 0 },
            Slot { carried: 0, current: 3 },
            Slot { carried: 0, current: 0 },
        ];
        let a = dpy_case_probs(&slots, &PyParams::new(0.0, 1.7).unwrap()).unwrap();
        let b = ddp_case_probs(&slots, 1.7).unwrap();
        assert_eq!(a, b);
    }

    fn one_cluster(n: usize, d: f64) -> PyClusterState {
        let mut s = ClusterState::empty();
        s.labels.push(ClusterLabel(0));
        s.params.push(ClusterParams::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap());
        s.sizes.push(n);
        s.assignments = vec![0; n];
        s.object_states = vec![TargetState::cv(0.0, 0.0, 0.0, 0.0); n];
        s.next_label = 1;
        PyClusterState {
            state: s,
            params: PyParams::new(d, 1.0).unwrap(),
            eta: vec![],
        }
    }

    #[test]
    fn single_atom_gets_all_of_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = py_posterior_measure(&one_cluster(4, 0.3), &mut rng).unwrap();
        assert_eq!(m.atoms.len(), 1);
        assert!((m.atoms[0].0 + m.residual - 1.0).abs() < 1e-12);
        assert!((m.continuation.concentration() - 1.3).abs() < 1e-12);
    }

    #[test]
    fn zero_discount_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(py_posterior_measure(&one_cluster(4, 0.0), &mut rng).is_err());
    }
}
