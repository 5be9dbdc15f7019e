//! Exchangeable-partition mathematics shared by both trackers.
//!
//! Everything here is evaluated in log space: partition probabilities for a
//! few hundred items overflow factorials long before they become interesting.
//! Partitions are represented canonically as restricted growth strings
//! (`a[0] = 0`, `a[i] <= max(a[..i]) + 1`).

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{param, Error, Result};

/// Index of a cluster inside one time step's unique-parameter list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClusterLabel(pub usize);

/// Block sizes of a partition of `n` items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSizes {
    sizes: Vec<usize>,
}

impl PartitionSizes {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(param("sizes", "every block must hold at least one item"));
        }
        Ok(Self { sizes })
    }

    pub fn empty() -> Self {
        Self { sizes: Vec::new() }
    }

    /// Block sizes of a label vector. Labels need not be contiguous.
    pub fn from_assignments(assignments: &[usize]) -> Self {
        let max = assignments.iter().copied().max().map_or(0, |m| m + 1);
        let mut counts = vec![0usize; max];
        for &a in assignments {
            counts[a] += 1;
        }
        counts.retain(|&c| c > 0);
        Self { sizes: counts }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of occupied blocks.
    pub fn blocks(&self) -> usize {
        self.sizes.len()
    }

    /// Total number of items.
    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Copy with block `j` grown by one item.
    pub fn with_increment(&self, j: usize) -> Self {
        let mut sizes = self.sizes.clone();
        sizes[j] += 1;
        Self { sizes }
    }

    /// Copy with a new singleton block appended.
    pub fn with_singleton(&self) -> Self {
        let mut sizes = self.sizes.clone();
        sizes.push(1);
        Self { sizes }
    }
}

/// Discount and concentration of a Pitman-Yor process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PyParams {
    discount: f64,
    concentration: f64,
}

impl PyParams {
    pub fn new(discount: f64, concentration: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(param("discount", format!("must lie in [0, 1), got {discount}")));
        }
        if !(concentration > -discount) || !concentration.is_finite() {
            return Err(param(
                "concentration",
                format!("must exceed -discount ({}), got {concentration}", -discount),
            ));
        }
        Ok(Self {
            discount,
            concentration,
        })
    }

    /// The Dirichlet-process special case `d = 0`.
    pub fn dirichlet(concentration: f64) -> Result<Self> {
        check_alpha(concentration)?;
        Self::new(0.0, concentration)
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(param("alpha", format!("must be positive and finite, got {alpha}")))
    }
}

/// Truncated stick-breaking weights with the unbroken remainder kept explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickBreakingWeights {
    weights: Vec<f64>,
    residual: f64,
}

impl StickBreakingWeights {
    /// Builds weights from explicit break fractions `V_1..V_K`.
    pub fn from_fractions(fractions: &[f64]) -> Result<Self> {
        if fractions.is_empty() {
            return Err(param("truncation", "need at least one stick"));
        }
        let mut remaining = 1.0;
        let mut weights = Vec::with_capacity(fractions.len());
        for &v in fractions {
            if !(0.0..=1.0).contains(&v) {
                return Err(param("fraction", format!("must lie in [0, 1], got {v}")));
            }
            weights.push(v * remaining);
            remaining *= 1.0 - v;
        }
        Ok(Self {
            weights,
            residual: remaining,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn truncation(&self) -> usize {
        self.weights.len()
    }
}

/// GEM(alpha) weights: `V_j ~ Beta(1, alpha)`.
pub fn stick_break_dp<R: Rng + ?Sized>(
    alpha: f64,
    truncation: usize,
    rng: &mut R,
) -> Result<StickBreakingWeights> {
    check_alpha(alpha)?;
    stick_break_py(&PyParams::new(0.0, alpha)?, truncation, rng)
}

/// Two-parameter GEM weights: `V_j ~ Beta(1 - d, alpha + j d)`.
pub fn stick_break_py<R: Rng + ?Sized>(
    p: &PyParams,
    truncation: usize,
    rng: &mut R,
) -> Result<StickBreakingWeights> {
    if truncation == 0 {
        return Err(param("truncation", "must be at least 1"));
    }
    let mut fractions = Vec::with_capacity(truncation);
    for j in 1..=truncation {
        let b = p.concentration + j as f64 * p.discount;
        let beta = Beta::new(1.0 - p.discount, b).map_err(|e| param("beta", e.to_string()))?;
        fractions.push(beta.sample(rng));
    }
    StickBreakingWeights::from_fractions(&fractions)
}

/// Sequential DP predictive: join block `j` w.p. `n_j/(n+alpha)`, open a new
/// block (last entry) w.p. `alpha/(n+alpha)`.
pub fn crp_predictive_dp(sizes: &PartitionSizes, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let denom = sizes.n() as f64 + alpha;
    let mut out: Vec<f64> = sizes.sizes.iter().map(|&s| s as f64 / denom).collect();
    out.push(alpha / denom);
    Ok(out)
}

/// Sequential PY predictive: `(n_j - d)/(n+alpha)` per block and
/// `(alpha + D d)/(n+alpha)` for a new block.
pub fn crp_predictive_py(sizes: &PartitionSizes, p: &PyParams) -> Vec<f64> {
    let d = p.discount;
    let denom = sizes.n() as f64 + p.concentration;
    if sizes.n() == 0 {
        return vec![1.0];
    }
    let mut out: Vec<f64> = sizes.sizes.iter().map(|&s| (s as f64 - d) / denom).collect();
    out.push((p.concentration + sizes.blocks() as f64 * d) / denom);
    out
}

/// `ln(x (x+1) ... (x+n-1))` for `x > 0`.
pub fn ln_rising(x: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        ln_gamma(x + n as f64) - ln_gamma(x)
    }
}

/// Log of the Dirichlet-process EPPF
/// `alpha^D / alpha^[n] * prod_j (n_j - 1)!`.
pub fn ln_eppf_dp(sizes: &PartitionSizes, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let n = sizes.n();
    if n == 0 {
        return Ok(0.0);
    }
    let d = sizes.blocks() as f64;
    let blocks: f64 = sizes.sizes.iter().map(|&s| ln_gamma(s as f64)).sum();
    Ok(d * alpha.ln() - ln_rising(alpha, n) + blocks)
}

pub fn eppf_dp(sizes: &PartitionSizes, alpha: f64) -> Result<f64> {
    ln_eppf_dp(sizes, alpha).map(f64::exp)
}

/// Which form of the Pitman-Yor EPPF to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EppfVariant {
    /// `prod_{j=1}^{D} (alpha + j d) / alpha^[n] * prod_i (1-d)^[n_i]`,
    /// evaluated as commonly printed. It does not normalize.
    Literal,
    /// `prod_{j=1}^{D-1} (alpha + j d) / (alpha+1)^[n-1] * prod_i (1-d)^[n_i - 1]`,
    /// the form consistent with the sequential predictive.
    #[default]
    Corrected,
}

/// Log of the Pitman-Yor EPPF. For the literal variant the value may be
/// negative when `alpha < 0`; the log of its absolute value is returned with
/// the sign as the second element.
pub fn ln_eppf_py_signed(sizes: &PartitionSizes, p: &PyParams, variant: EppfVariant) -> (f64, f64) {
    let n = sizes.n();
    let (a, d) = (p.concentration, p.discount);
    let blocks = sizes.blocks();
    match variant {
        EppfVariant::Corrected => {
            if n == 0 {
                return (0.0, 1.0);
            }
            let head: f64 = (1..blocks).map(|j| (a + j as f64 * d).ln()).sum();
            let tail: f64 = sizes
                .sizes
                .iter()
                .map(|&s| ln_rising(1.0 - d, s - 1))
                .sum();
            (head - ln_rising(a + 1.0, n - 1) + tail, 1.0)
        }
        EppfVariant::Literal => {
            let mut sign = 1.0;
            let mut acc = 0.0;
            for j in 1..=blocks {
                let f = a + j as f64 * d;
                sign *= f.signum();
                acc += f.abs().ln();
            }
            for i in 0..n {
                let f = a + i as f64;
                sign *= f.signum();
                acc -= f.abs().ln();
            }
            acc += sizes
                .sizes
                .iter()
                .map(|&s| ln_rising(1.0 - d, s))
                .sum::<f64>();
            (acc, sign)
        }
    }
}

pub fn ln_eppf_py(sizes: &PartitionSizes, p: &PyParams, variant: EppfVariant) -> f64 {
    ln_eppf_py_signed(sizes, p, variant).0
}

pub fn eppf_py(sizes: &PartitionSizes, p: &PyParams, variant: EppfVariant) -> f64 {
    let (ln, sign) = ln_eppf_py_signed(sizes, p, variant);
    sign * ln.exp()
}

/// `|p_{n-1}(sizes) - [sum_j p_n(sizes + e_j) + p_n(sizes ++ [1])]|`.
///
/// Any valid EPPF gives zero up to rounding.
pub fn partition_consistency_check<F>(eppf: F, sizes: &PartitionSizes) -> f64
where
    F: Fn(&PartitionSizes) -> f64,
{
    let parent = eppf(sizes);
    let mut children: f64 = (0..sizes.blocks())
        .map(|j| eppf(&sizes.with_increment(j)))
        .sum();
    children += eppf(&sizes.with_singleton());
    (parent - children).abs()
}

/// Largest `n` accepted by [`enumerate_partitions`] (Bell(12) = 4 213 597).
pub const MAX_ENUMERATION: usize = 12;

/// Every set partition of `{0..n}` as a restricted growth string, in
/// lexicographic order.
pub fn enumerate_partitions(n: usize) -> Result<Vec<Vec<usize>>> {
    if n == 0 {
        return Err(param("n", "must be positive"));
    }
    if n > MAX_ENUMERATION {
        return Err(Error::Size(format!(
            "cannot enumerate partitions of {n} > {MAX_ENUMERATION} items"
        )));
    }
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fill(&mut current, 1, 0, &mut out);
    Ok(out)
}

fn fill(current: &mut Vec<usize>, pos: usize, max: usize, out: &mut Vec<Vec<usize>>) {
    if pos == current.len() {
        out.push(current.clone());
        return;
    }
    for label in 0..=max + 1 {
        current[pos] = label;
        fill(current, pos + 1, max.max(label), out);
    }
}

/// Relabels an assignment vector into restricted-growth form (first
/// appearance order).
pub fn canonicalize(assignments: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    assignments
        .iter()
        .map(|&a| match map.iter().find(|(from, _)| *from == a) {
            Some(&(_, to)) => to,
            None => {
                let to = map.len();
                map.push((a, to));
                to
            }
        })
        .collect()
}

/// Draws a partition of `n` items by running the Pitman-Yor urn forward.
pub fn sample_crp<R: Rng + ?Sized>(n: usize, p: &PyParams, rng: &mut R) -> Vec<usize> {
    let mut sizes: Vec<usize> = Vec::new();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let probs = crp_predictive_py(
            &PartitionSizes {
                sizes: sizes.clone(),
            },
            p,
        );
        let u: f64 = rng.random::<f64>();
        let mut acc = 0.0;
        let mut pick = probs.len() - 1;
        for (j, &w) in probs.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = j;
                break;
            }
        }
        if pick == sizes.len() {
            sizes.push(1);
        } else {
            sizes[pick] += 1;
        }
        out.push(pick);
    }
    out
}

/// Number of occupied blocks after each of `m` sequential draws from the
/// Pitman-Yor urn. Only block creation matters for the count, so this runs in
/// `O(m)`.
pub fn sample_block_counts<R: Rng + ?Sized>(m: usize, p: &PyParams, rng: &mut R) -> Vec<usize> {
    let mut blocks = 0usize;
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let p_new = if i == 0 {
            1.0
        } else {
            (p.concentration + blocks as f64 * p.discount) / (i as f64 + p.concentration)
        };
        if rng.random::<f64>() < p_new {
            blocks += 1;
        }
        out.push(blocks);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sizes(v: &[usize]) -> PartitionSizes {
        PartitionSizes::new(v.to_vec()).unwrap()
    }

    #[test]
    fn forced_single_stick() {
        let w = StickBreakingWeights::from_fractions(&[0.3]).unwrap();
        assert_eq!(w.weights(), &[0.3]);
        assert!((w.residual() - 0.7).abs() < 1e-15);

        let w = StickBreakingWeights::from_fractions(&[1.0]).unwrap();
        assert_eq!(w.weights(), &[1.0]);
        assert_eq!(w.residual(), 0.0);
    }

    #[test]
    fn stick_breaking_rejects_bad_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(stick_break_dp(0.0, 4, &mut rng).is_err());
        assert!(stick_break_dp(-1.0, 4, &mut rng).is_err());
        assert!(stick_break_dp(1.0, 0, &mut rng).is_err());
    }

    #[test]
    fn stick_breaking_telescopes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &alpha in &[0.1, 1.0, 5.0, 50.0] {
            for &k in &[1, 3, 40, 200] {
                let w = stick_break_dp(alpha, k, &mut rng).unwrap();
                let total: f64 = w.weights().iter().sum::<f64>() + w.residual();
                assert!((total - 1.0).abs() < 1e-12);
                assert!(w.weights().iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn first_dp_weight_has_beta_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let mean: f64 = (0..draws)
            .map(|_| stick_break_dp(5.0, 200, &mut rng).unwrap().weights()[0])
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 1.0 / 6.0).abs() < 0.003, "mean {mean}");
    }

    #[test]
    fn first_py_fraction_has_beta_mean() {
        let p = PyParams::new(0.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let draws = 100_000;
        let mean: f64 = (0..draws)
            .map(|_| stick_break_py(&p, 1, &mut rng).unwrap().weights()[0])
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 0.25).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn py_params_validation() {
        assert!(PyParams::new(1.0, 1.0).is_err());
        assert!(PyParams::new(-0.1, 1.0).is_err());
        assert!(PyParams::new(0.5, -0.5).is_err());
        assert!(PyParams::new(0.5, -0.4).is_ok());
        assert!(PyParams::dirichlet(0.0).is_err());
    }

    #[test]
    fn predictive_examples() {
        assert_eq!(crp_predictive_dp(&PartitionSizes::empty(), 2.0).unwrap(), vec![1.0]);
        assert_eq!(
            crp_predictive_dp(&sizes(&[2, 1]), 1.0).unwrap(),
            vec![0.5, 0.25, 0.25]
        );
        let p = PyParams::new(0.5, 1.0).unwrap();
        let got = crp_predictive_py(&sizes(&[2, 1]), &p);
        for (g, e) in got.iter().zip([0.375, 0.125, 0.5]) {
            assert!((g - e).abs() < 1e-15);
        }
    }

    #[test]
    fn eppf_examples() {
        for &a in &[0.2, 1.0, 7.5] {
            assert!((eppf_dp(&sizes(&[1]), a).unwrap() - 1.0).abs() < 1e-12);
            let p = PyParams::new(0.4, a).unwrap();
            assert!((eppf_py(&sizes(&[1]), &p, EppfVariant::Corrected) - 1.0).abs() < 1e-12);
        }
        assert!((eppf_dp(&sizes(&[3]), 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((eppf_dp(&sizes(&[2, 1]), 1.0).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert!((eppf_dp(&sizes(&[1, 1, 1]), 1.0).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(ln_eppf_dp(&PartitionSizes::empty(), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn literal_eppf_does_not_normalize_single_item() {
        let p = PyParams::new(0.5, 1.0).unwrap();
        let v = eppf_py(&sizes(&[1]), &p, EppfVariant::Literal);
        assert!((v - 1.5 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn enumeration_counts_match_bell_numbers() {
        let bell = [1usize, 2, 5, 15, 52, 203, 877, 4140];
        for (n, &b) in (1..=8).zip(bell.iter()) {
            let parts = enumerate_partitions(n).unwrap();
            assert_eq!(parts.len(), b);
            for part in &parts {
                assert_eq!(&canonicalize(part), part);
            }
        }
        assert!(enumerate_partitions(13).is_err());
        assert!(enumerate_partitions(0).is_err());
    }

    #[test]
    fn consistency_of_dp_eppf() {
        let r = partition_consistency_check(|s| eppf_dp(s, 1.0).unwrap(), &sizes(&[2]));
        assert!(r <= 1e-12);
    }

    #[test]
    fn consistency_of_literal_eppf_fails() {
        let p = PyParams::new(0.5, 1.0).unwrap();
        let r = partition_consistency_check(
            |s| eppf_py(s, &p, EppfVariant::Literal),
            &sizes(&[1]),
        );
        assert!(r > 1e-3, "residual {r}");
    }

    #[test]
    fn block_count_paths_are_monotone() {
        let p = PyParams::new(0.3, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let path = sample_block_counts(500, &p, &mut rng);
        assert_eq!(path[0], 1);
        assert!(path.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
    }

    proptest! {
        #[test]
        fn predictive_is_probability_vector(
            raw in proptest::collection::vec(1usize..20, 0..8),
            alpha in 0.01f64..20.0,
            d in 0.0f64..0.99,
        ) {
            let s = PartitionSizes::new(raw).unwrap();
            let dp = crp_predictive_dp(&s, alpha).unwrap();
            prop_assert!((dp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(dp.iter().all(|&x| x >= 0.0));
            let p = PyParams::new(d, alpha).unwrap();
            let py = crp_predictive_py(&s, &p);
            prop_assert!((py.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(py.iter().all(|&x| x >= 0.0));
            let p0 = PyParams::new(0.0, alpha).unwrap();
            prop_assert_eq!(crp_predictive_py(&s, &p0), dp);
        }

        #[test]
        fn eppf_is_exchangeable(
            raw in proptest::collection::vec(1usize..6, 1..6),
            alpha in 0.1f64..5.0,
            d in 0.0f64..0.9,
        ) {
            let s = PartitionSizes::new(raw.clone()).unwrap();
            let mut rev = raw.clone();
            rev.reverse();
            let r = PartitionSizes::new(rev).unwrap();
            prop_assert!((ln_eppf_dp(&s, alpha).unwrap() - ln_eppf_dp(&r, alpha).unwrap()).abs() < 1e-12);
            let p = PyParams::new(d, alpha).unwrap();
            for v in [EppfVariant::Corrected, EppfVariant::Literal] {
                prop_assert!((ln_eppf_py(&s, &p, v) - ln_eppf_py(&r, &p, v)).abs() < 1e-12);
            }
        }

        #[test]
        fn corrected_py_reduces_to_dp(
            raw in proptest::collection::vec(1usize..9, 1..8),
            alpha in 0.05f64..10.0,
        ) {
            let s = PartitionSizes::new(raw).unwrap();
            let p = PyParams::new(0.0, alpha).unwrap();
            let a = ln_eppf_py(&s, &p, EppfVariant::Corrected);
            let b = ln_eppf_dp(&s, alpha).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
