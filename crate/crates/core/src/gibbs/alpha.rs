//! Concentration resampling under a `Gamma(a, b)` hyperprior (`b` is a rate).

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};

use crate::error::{param, Result};

/// Auxiliary-variable update for the concentration given `clusters`
/// occupied clusters among `n` items.
pub fn sample_alpha<R: Rng + ?Sized>(
    alpha: f64,
    clusters: usize,
    n: usize,
    shape: f64,
    rate: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(shape > 0.0) || !(rate > 0.0) {
        return Err(param("alpha_prior", format!("need a, b > 0, got ({shape}, {rate})")));
    }
    if !(alpha > 0.0) {
        return Err(param("alpha", format!("must be positive, got {alpha}")));
    }
    let draw_gamma = |k: f64, r: f64, rng: &mut R| -> Result<f64> {
        Ok(Gamma::new(k, 1.0 / r).map_err(|e| param("alpha_prior", e.to_string()))?.sample(rng))
    };
    if n == 0 || clusters == 0 {
        return Ok(draw_gamma(shape, rate, rng)?.max(f64::MIN_POSITIVE));
    }
    let eta = Beta::new(alpha + 1.0, n as f64)
        .map_err(|e| param("alpha", e.to_string()))?
        .sample(rng);
    let r = rate - eta.ln();
    let k = clusters as f64;
    let odds = (shape + k - 1.0) / (n as f64 * r);
    let pick_upper = rng.random::<f64>() < odds / (1.0 + odds);
    let draw = if pick_upper || shape + k - 1.0 <= 0.0 {
        draw_gamma(shape + k, r, rng)?
    } else {
        draw_gamma(shape + k - 1.0, r, rng)?
    };
    Ok(draw.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn always_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = 1.0;
        for i in 0..2000 {
            a = sample_alpha(a, 1 + i % 7, 10, 1.0, 0.1, &mut rng).unwrap();
            assert!(a > 0.0);
        }
    }

    #[test]
    fn huge_rate_pins_alpha_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, b) = (1.0, 1e6);
        let mut alpha = 1.0;
        let mut total = 0.0;
        for _ in 0..10_000 {
            alpha = sample_alpha(alpha, 3, 10, a, b, &mut rng).unwrap();
            total += alpha;
        }
        assert!(total / 10_000.0 < 10.0 * a / b);
    }

    #[test]
    fn rejects_bad_hyperprior() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(sample_alpha(1.0, 1, 1, 0.0, 1.0, &mut rng).is_err());
        assert!(sample_alpha(1.0, 1, 1, 1.0, -1.0, &mut rng).is_err());
    }
}
