//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

/// All set partitions of `n` items as restricted growth strings, found by
/// filtering every labelling in `0..n` (exhaustive; keep `n` small).
pub fn partitions_bruteforce(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let total = n.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let labels: Vec<usize> = (0..n)
            .map(|_| {
                let l = c % n;
                c /= n;
                l
            })
            .collect();
        let mut max_seen: isize = -1;
        let ok = labels.iter().all(|&l| {
            if l as isize > max_seen + 1 {
                return false;
            }
            max_seen = max_seen.max(l as isize);
            true
        });
        if ok {
            out.push(labels);
        }
    }
    out.sort();
    out
}

pub fn block_sizes(rgs: &[usize]) -> Vec<usize> {
    let k = rgs.iter().max().map_or(0, |m| m + 1);
    let mut s = vec![0; k];
    for &l in rgs {
        s[l] += 1;
    }
    s
}

/// `alpha^K prod (n_j - 1)! / (alpha)_n`, computed directly.
pub fn eppf_dp(sizes: &[usize], alpha: f64) -> f64 {
    let n: usize = sizes.iter().sum();
    let mut num = alpha.powi(sizes.len() as i32);
    for &s in sizes {
        for l in 1..s {
            num *= l as f64;
        }
    }
    let mut den = 1.0;
    for i in 0..n {
        den *= alpha + i as f64;
    }
    num / den
}

/// Pitman-Yor EPPF in its standard product form.
pub fn eppf_py(sizes: &[usize], d: f64, alpha: f64) -> f64 {
    let n: usize = sizes.iter().sum();
    let mut num = 1.0;
    for i in 1..sizes.len() {
        num *= alpha + i as f64 * d;
    }
    for &s in sizes {
        for l in 1..s {
            num *= l as f64 - d;
        }
    }
    let mut den = 1.0;
    for i in 1..n {
        den *= alpha + i as f64;
    }
    num / den
}

fn ln_mv_gamma(p: usize, a: f64) -> f64 {
    let pf = p as f64;
    pf * (pf - 1.0) / 4.0 * std::f64::consts::PI.ln()
        + (0..p).map(|j| ln_gamma(a - j as f64 / 2.0)).sum::<f64>()
}

/// Closed-form log marginal likelihood of `points` under Gaussian data with
/// a Normal-Inverse-Wishart prior.
pub fn niw_ln_marginal(points: &[[f64; 2]], mu0: [f64; 2], lambda: f64, nu: f64, psi: &DMatrix<f64>) -> f64 {
    let d = 2usize;
    let n = points.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let mut mean = [0.0; 2];
    for p in points {
        mean[0] += p[0] / nf;
        mean[1] += p[1] / nf;
    }
    let mut s = DMatrix::<f64>::zeros(2, 2);
    for p in points {
        let v = DVector::from_vec(vec![p[0] - mean[0], p[1] - mean[1]]);
        s += &v * v.transpose();
    }
    let dm = DVector::from_vec(vec![mean[0] - mu0[0], mean[1] - mu0[1]]);
    let psi_n = psi + s + (&dm * dm.transpose()) * (lambda * nf / (lambda + nf));
    let (lam_n, nu_n) = (lambda + nf, nu + nf);
    -(nf * d as f64 / 2.0) * std::f64::consts::PI.ln() + ln_mv_gamma(d, nu_n / 2.0) - ln_mv_gamma(d, nu / 2.0)
        + (nu / 2.0) * psi.determinant().ln()
        - (nu_n / 2.0) * psi_n.determinant().ln()
        + (d as f64 / 2.0) * (lambda / lam_n).ln()
}

/// Log density of the stacked block under `y_i = m + e_i`, `m ~ N(m0, p0)`,
/// `e_i ~ N(0, sigma)` independently.
pub fn gaussian_block_ln_marginal(points: &[[f64; 2]], m0: [f64; 2], p0: &DMatrix<f64>, sigma: &DMatrix<f64>) -> f64 {
    let n = points.len();
    if n == 0 {
        return 0.0;
    }
    let dim = 2 * n;
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            for a in 0..2 {
                for b in 0..2 {
                    let mut v = p0[(a, b)];
                    if i == j {
                        v += sigma[(a, b)];
                    }
                    cov[(2 * i + a, 2 * j + b)] = v;
                }
            }
        }
    }
    let r = DVector::from_iterator(dim, points.iter().flat_map(|p| [p[0] - m0[0], p[1] - m0[1]]));
    let chol = cov.cholesky().expect("positive definite");
    let sol = chol.solve(&r);
    let ln_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (dim as f64 * (2.0 * std::f64::consts::PI).ln() + ln_det + r.dot(&sol))
}

/// Normalised posterior over `partitions` given unnormalised log weights.
pub fn normalise_ln(ln_w: &[f64]) -> Vec<f64> {
    let m = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = ln_w.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// Exhaustive OSPA: the minimum over every injection of the smaller set,
/// with matched costs summed in ascending order.
pub fn ospa_bruteforce(x: &[[f64; 2]], y: &[[f64; 2]], p: f64, c: f64) -> (f64, f64, f64) {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let (m, n) = (small.len(), large.len());
    if n == 0 {
        return (0.0, 0.0, 0.0);
    }
    let cost = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]).min(c).powf(p);
    let mut best = f64::INFINITY;
    let mut used = vec![false; n];
    let mut chosen = Vec::with_capacity(m);
    fn rec(
        i: usize,
        small: &[[f64; 2]],
        large: &[[f64; 2]],
        used: &mut [bool],
        chosen: &mut Vec<f64>,
        best: &mut f64,
        cost: &dyn Fn(&[f64; 2], &[f64; 2]) -> f64,
    ) {
        if i == small.len() {
            let mut v = chosen.clone();
            v.sort_by(f64::total_cmp);
            let s: f64 = v.iter().sum();
            if s < *best {
                *best = s;
            }
            return;
        }
        for j in 0..large.len() {
            if !used[j] {
                used[j] = true;
                chosen.push(cost(&small[i], &large[j]));
                rec(i + 1, small, large, used, chosen, best, cost);
                chosen.pop();
                used[j] = false;
            }
        }
    }
    rec(0, small, large, &mut used, &mut chosen, &mut best, &cost);
    if m == 0 {
        best = 0.0;
    }
    let card = c.powf(p) * (n - m) as f64;
    let nf = n as f64;
    (
        ((best + card) / nf).powf(1.0 / p),
        (best / nf).powf(1.0 / p),
        (card / nf).powf(1.0 / p),
    )
}

/// Batch-means standard error of the mean of an indicator series.
pub fn batch_se(indicator: &[f64], batches: usize) -> f64 {
    let len = indicator.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| indicator[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let mu = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

pub mod gibbs_check {
    use super::*;
    use bnpmot::gibbs::{sweep, BaseMeasure, InitStrategy, Survivor, SweepState};
    use bnpmot::models::niw::GaussianNiw;
    use bnpmot::prior::PriorMass;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub struct Comparison {
        pub partitions: Vec<Vec<usize>>,
        pub exact: Vec<f64>,
        pub empirical: Vec<f64>,
        pub se: Vec<f64>,
    }

    impl Comparison {
        /// Largest |empirical - exact| in units of its standard error, using
        /// the exact-probability binomial error as a floor for the batch
        /// estimate.
        pub fn worst_z(&self, retained: usize) -> f64 {
            self.partitions
                .iter()
                .enumerate()
                .map(|(i, _)| {
                    let binom = (self.exact[i] * (1.0 - self.exact[i]) / retained as f64).sqrt();
                    let se = self.se[i].max(binom).max(1e-12);
                    (self.empirical[i] - self.exact[i]).abs() / se
                })
                .fold(0.0, f64::max)
        }
    }

    pub fn base_niw() -> GaussianNiw {
        GaussianNiw::new(DVector::zeros(2), 0.5, 4.0, DMatrix::identity(2, 2)).unwrap()
    }

    /// Exact partition posterior with no survivors: prior EPPF times NIW
    /// block marginals.
    pub fn exact_posterior(points: &[[f64; 2]], h: &GaussianNiw, eppf: &dyn Fn(&[usize]) -> f64) -> (Vec<Vec<usize>>, Vec<f64>) {
        let parts = partitions_bruteforce(points.len());
        let mu0 = [h.mu0[0], h.mu0[1]];
        let ln_w: Vec<f64> = parts
            .iter()
            .map(|rgs| {
                let sizes = block_sizes(rgs);
                let mut lw = eppf(&sizes).ln();
                for b in 0..sizes.len() {
                    let block: Vec<[f64; 2]> = rgs
                        .iter()
                        .zip(points)
                        .filter(|(l, _)| **l == b)
                        .map(|(_, p)| *p)
                        .collect();
                    lw += niw_ln_marginal(&block, mu0, h.lambda, h.nu, &h.psi);
                }
                lw
            })
            .collect();
        (parts.clone(), normalise_ln(&ln_w))
    }

    /// Runs the sampler and tallies the canonical partition after each
    /// retained sweep.
    pub fn run<M: PriorMass>(
        points: &[[f64; 2]],
        survivors: Vec<Survivor>,
        h: &GaussianNiw,
        mass: &M,
        burn_in: usize,
        retained: usize,
        seed: u64,
        partitions: &[Vec<usize>],
    ) -> (Vec<f64>, Vec<f64>) {
        let base = BaseMeasure::new(h.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut st = SweepState::new(0, points.to_vec(), survivors, InitStrategy::Sequential, &base, mass, &mut rng)
            .unwrap();
        for _ in 0..burn_in {
            sweep(&mut st, &base, mass, &mut rng).unwrap();
        }
        let mut series = vec![Vec::with_capacity(retained); partitions.len()];
        for _ in 0..retained {
            sweep(&mut st, &base, mass, &mut rng).unwrap();
            let p = st.partition();
            let idx = partitions.iter().position(|q| *q == p).expect("known partition");
            for (k, s) in series.iter_mut().enumerate() {
                s.push((k == idx) as u8 as f64);
            }
        }
        let freq = series.iter().map(|s| s.iter().sum::<f64>() / retained as f64).collect();
        let se = series.iter().map(|s| batch_se(s, 50)).collect();
        (freq, se)
    }

    pub fn compare<M: PriorMass>(
        points: &[[f64; 2]],
        h: &GaussianNiw,
        mass: &M,
        eppf: &dyn Fn(&[usize]) -> f64,
        retained: usize,
        seed: u64,
    ) -> Comparison {
        let (partitions, exact) = exact_posterior(points, h, eppf);
        let (empirical, se) = run(points, Vec::new(), h, mass, 1000, retained, seed, &partitions);
        Comparison {
            partitions,
            exact,
            empirical,
            se,
        }
    }
}
