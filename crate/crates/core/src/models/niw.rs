//! Normal-Inverse-Wishart prior over a Gaussian's mean and covariance.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::gaussian::{cholesky, mahalanobis_sq, sample_with_chol, standard_normal};
use super::kinematics::ClusterParams;
use crate::error::{param, Error, Result};

const LN_PI: f64 = 1.144_729_885_849_400_2;

/// `NIW(mu0, lambda, nu, psi)`: `Sigma ~ IW(psi, nu)`, `mu | Sigma ~ N(mu0, Sigma / lambda)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianNiw {
    pub mu0: DVector<f64>,
    pub lambda: f64,
    pub nu: f64,
    pub psi: DMatrix<f64>,
}

/// Sufficient statistics of a set of vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats {
    pub n: usize,
    pub sum: DVector<f64>,
    pub scatter: DMatrix<f64>,
}

impl SuffStats {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            sum: DVector::zeros(dim),
            scatter: DMatrix::zeros(dim, dim),
        }
    }

    pub fn from_points<'a, I>(dim: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut s = Self::new(dim);
        for p in points {
            s.add(p)?;
        }
        Ok(s)
    }

    pub fn add(&mut self, y: &[f64]) -> Result<()> {
        let dim = self.sum.len();
        if y.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: y.len(),
            });
        }
        self.n += 1;
        for i in 0..dim {
            self.sum[i] += y[i];
            for j in 0..dim {
                self.scatter[(i, j)] += y[i] * y[j];
            }
        }
        Ok(())
    }

    /// Inverse of [`SuffStats::add`]; the caller guarantees `y` was added.
    pub fn remove(&mut self, y: &[f64]) {
        let dim = self.sum.len();
        debug_assert!(self.n > 0 && y.len() == dim);
        self.n -= 1;
        for i in 0..dim {
            self.sum[i] -= y[i];
            for j in 0..dim {
                self.scatter[(i, j)] -= y[i] * y[j];
            }
        }
    }

    pub fn mean(&self) -> Option<DVector<f64>> {
        (self.n > 0).then(|| &self.sum / self.n as f64)
    }
}

impl GaussianNiw {
    pub fn new(mu0: DVector<f64>, lambda: f64, nu: f64, psi: DMatrix<f64>) -> Result<Self> {
        let dim = mu0.len();
        if dim == 0 {
            return Err(param("mu0", "must be non-empty"));
        }
        if psi.nrows() != dim || psi.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: psi.nrows(),
            });
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(param("lambda", format!("must be finite and >= 0, got {lambda}")));
        }
        if !(nu > dim as f64 - 1.0) || !nu.is_finite() {
            return Err(param("nu", format!("must exceed dim - 1 = {}, got {nu}", dim - 1)));
        }
        cholesky(&psi, "NIW scale matrix")?;
        Ok(Self {
            mu0,
            lambda,
            nu,
            psi,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    /// Conjugate update on a batch of vectors; empty data returns the prior.
    pub fn posterior(&self, data: &[DVector<f64>]) -> Result<Self> {
        let stats = SuffStats::from_points(self.dim(), data.iter().map(|v| v.as_slice()))?;
        Ok(self.posterior_stats(&stats))
    }

    pub fn posterior_stats(&self, s: &SuffStats) -> Self {
        if s.n == 0 {
            return self.clone();
        }
        let n = s.n as f64;
        let ybar = &s.sum / n;
        let lambda_n = self.lambda + n;
        let mu_n = (&self.mu0 * self.lambda + &s.sum) / lambda_n;
        // centred scatter: sum y y^T - n ybar ybar^T
        let centred = &s.scatter - &ybar * ybar.transpose() * n;
        let diff = &ybar - &self.mu0;
        let psi_n = &self.psi + centred + &diff * diff.transpose() * (self.lambda * n / lambda_n);
        Self {
            mu0: mu_n,
            lambda: lambda_n,
            nu: self.nu + n,
            psi: 0.5 * (&psi_n + psi_n.transpose()),
        }
    }

    /// Student-t predictive for a single new observation.
    pub fn predictive(&self) -> Result<StudentT> {
        if self.lambda <= 0.0 {
            return Err(Error::ImproperPrior(
                "NIW predictive needs lambda > 0; the mean prior is flat",
            ));
        }
        let d = self.dim() as f64;
        let dof = self.nu - d + 1.0;
        let scale = &self.psi * ((self.lambda + 1.0) / (self.lambda * dof));
        StudentT::new(self.mu0.clone(), &scale, dof)
    }

    pub fn ln_predictive(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(self.predictive()?.ln_pdf(y))
    }

    /// Draws `(mu, Sigma)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ClusterParams> {
        if self.lambda <= 0.0 {
            return Err(Error::ImproperPrior("cannot sample a mean from a flat prior"));
        }
        let cov = sample_inverse_wishart(&self.psi, self.nu, rng)?;
        let chol = cholesky(&(&cov / self.lambda), "NIW mean covariance")?;
        let mean = sample_with_chol(&self.mu0, &chol, rng);
        ClusterParams::new(mean, cov)
    }
}

/// `IW(psi, nu)` via the Bartlett decomposition of the matching Wishart.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(
    psi: &DMatrix<f64>,
    nu: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let p = psi.nrows();
    let psi_inv = psi
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite {
            context: "inverse-Wishart scale",
        })?;
    let l = cholesky(&psi_inv, "inverse-Wishart scale")?;
    let mut a = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(nu - i as f64).map_err(|e| param("nu", e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = standard_normal(rng);
        }
    }
    let la = l * a;
    let w = &la * la.transpose();
    let sigma = w.try_inverse().ok_or(Error::NotPositiveDefinite {
        context: "Wishart draw",
    })?;
    Ok(0.5 * (&sigma + sigma.transpose()))
}

/// Multivariate Student-t with cached factorisation.
#[derive(Debug, Clone)]
pub struct StudentT {
    loc: DVector<f64>,
    chol: DMatrix<f64>,
    dof: f64,
    ln_norm: f64,
}

impl StudentT {
    pub fn new(loc: DVector<f64>, scale: &DMatrix<f64>, dof: f64) -> Result<Self> {
        if !(dof > 0.0) {
            return Err(param("dof", format!("must be positive, got {dof}")));
        }
        let chol = cholesky(scale, "Student-t scale")?;
        let p = loc.len() as f64;
        let ln_det: f64 = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let ln_norm = ln_gamma(0.5 * (dof + p))
            - ln_gamma(0.5 * dof)
            - 0.5 * p * (dof.ln() + LN_PI)
            - 0.5 * ln_det;
        Ok(Self {
            loc,
            chol,
            dof,
            ln_norm,
        })
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn loc(&self) -> &DVector<f64> {
        &self.loc
    }

    pub fn ln_pdf(&self, y: &[f64]) -> f64 {
        let p = self.loc.len() as f64;
        let m = mahalanobis_sq(&self.chol, self.loc.as_slice(), y);
        self.ln_norm - 0.5 * (self.dof + p) * (m / self.dof).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn prior2() -> GaussianNiw {
        GaussianNiw::new(DVector::zeros(2), 1.0, 5.0, DMatrix::identity(2, 2)).unwrap()
    }

    #[test]
    fn empty_data_is_identity() {
        let p = prior2();
        assert_eq!(p.posterior(&[]).unwrap(), p);
    }

    #[test]
    fn flat_mean_prior_takes_observation_as_mean() {
        let p = GaussianNiw::new(DVector::zeros(2), 0.0, 3.0, DMatrix::identity(2, 2)).unwrap();
        let y = DVector::from_vec(vec![3.0, -1.5]);
        let post = p.posterior(std::slice::from_ref(&y)).unwrap();
        assert_eq!(post.mu0, y);
        assert!(matches!(p.ln_predictive(&[0.0, 0.0]), Err(Error::ImproperPrior(_))));
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(GaussianNiw::new(DVector::zeros(2), -1.0, 5.0, DMatrix::identity(2, 2)).is_err());
        assert!(GaussianNiw::new(DVector::zeros(2), 1.0, 0.5, DMatrix::identity(2, 2)).is_err());
        assert!(GaussianNiw::new(DVector::zeros(2), 1.0, 5.0, -DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn predictive_is_symmetric_for_isotropic_scale() {
        let p = prior2();
        let a = p.ln_predictive(&[1.3, -0.4]).unwrap();
        let b = p.ln_predictive(&[-1.3, 0.4]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predictive_1d_integrates_to_one() {
        let p = GaussianNiw::new(DVector::from_vec(vec![0.5]), 2.0, 4.0, dmatrix![3.0]).unwrap();
        let h = 1e-3;
        let total: f64 = (-200_000..=200_000)
            .map(|i| p.ln_predictive(&[0.5 + i as f64 * h]).unwrap().exp() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn inverse_wishart_mean_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = dmatrix![2.0, 0.5; 0.5, 1.0];
        let nu = 8.0;
        let n = 40_000;
        let mut acc = DMatrix::zeros(2, 2);
        for _ in 0..n {
            acc += sample_inverse_wishart(&psi, nu, &mut rng).unwrap();
        }
        let mean = acc / n as f64;
        let expect = &psi / (nu - 2.0 - 1.0);
        for (a, b) in mean.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 0.02, "{mean} vs {expect}");
        }
    }
}
