//! Small dense Gaussian helpers used on hot paths of the samplers.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A multivariate normal with its Cholesky factor cached.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
    ln_norm: f64,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: cov.nrows(),
            });
        }
        let chol = cholesky(cov, "gaussian covariance")?;
        let ln_det: f64 = 2.0 * chol.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self {
            mean,
            chol,
            ln_norm: -0.5 * (dim as f64 * LN_2PI + ln_det),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Lower Cholesky factor of the covariance.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn ln_pdf(&self, x: &[f64]) -> f64 {
        self.ln_norm - 0.5 * mahalanobis_sq(&self.chol, self.mean.as_slice(), x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        sample_with_chol(&self.mean, &self.chol, rng)
    }
}

/// Lower Cholesky factor, or an error naming the context.
pub fn cholesky(m: &DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite { context });
    }
    let sym = 0.5 * (m + m.transpose());
    sym.cholesky()
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite { context })
}

/// `(x - mu)^T (L L^T)^{-1} (x - mu)` by forward substitution, without
/// allocating for dimensions up to eight.
pub fn mahalanobis_sq(chol: &DMatrix<f64>, mu: &[f64], x: &[f64]) -> f64 {
    let n = mu.len();
    debug_assert_eq!(x.len(), n);
    let mut stack = [0.0f64; 8];
    let mut heap;
    let z: &mut [f64] = if n <= 8 {
        &mut stack[..n]
    } else {
        heap = vec![0.0; n];
        &mut heap[..]
    };
    let mut total = 0.0;
    for i in 0..n {
        let mut acc = x[i] - mu[i];
        for j in 0..i {
            acc -= chol[(i, j)] * z[j];
        }
        z[i] = acc / chol[(i, i)];
        total += z[i] * z[i];
    }
    total
}

pub fn sample_with_chol<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    chol: &DMatrix<f64>,
    rng: &mut R,
) -> DVector<f64> {
    let z = DVector::from_iterator(mean.len(), (0..mean.len()).map(|_| standard_normal(rng)));
    mean + chol * z
}

/// Draws from `N(mean, cov)` for a positive *semi*-definite `cov` through its
/// eigen-decomposition, so rank-deficient and zero covariances are accepted.
pub fn sample_psd<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> DVector<f64> {
    let eig = nalgebra::SymmetricEigen::new(0.5 * (cov + cov.transpose()));
    let mut out = mean.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let z = standard_normal(rng);
        if lambda > 0.0 {
            out += eig.eigenvectors.column(k) * (lambda.sqrt() * z);
        }
    }
    out
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `ln N(x; mu, cov)` without caching; convenient outside hot loops.
pub fn ln_normal_pdf(x: &[f64], mu: &[f64], cov: &DMatrix<f64>) -> Result<f64> {
    Ok(Gaussian::new(DVector::from_column_slice(mu), cov)?.ln_pdf(x))
}

/// Numerically stable `ln(sum(exp(v)))`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_univariate_formula() {
        let g = Gaussian::new(DVector::from_vec(vec![1.0]), &dmatrix![4.0]).unwrap();
        let expect = -0.5 * (2.0 * std::f64::consts::PI * 4.0).ln() - 0.5 * (2.0f64 * 2.0) / 4.0;
        assert!((g.ln_pdf(&[3.0]) - expect).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let err = Gaussian::new(DVector::zeros(2), &dmatrix![1.0, 2.0; 2.0, 1.0]);
        assert!(matches!(err, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn psd_sampler_accepts_zero_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mean = DVector::from_vec(vec![1.0, -2.0]);
        let x = sample_psd(&mean, &DMatrix::zeros(2, 2), &mut rng);
        assert_eq!(x, mean);
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
