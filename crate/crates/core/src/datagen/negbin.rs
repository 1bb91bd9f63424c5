//! Negative binomial in the mean-precision parametrization.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

fn check(mu: f64, phi: f64) -> Result<()> {
    if !(mu > 0.0) || !(phi > 0.0) || !mu.is_finite() || !phi.is_finite() {
        return Err(Error::Domain(format!(
            "negative binomial needs mu > 0 and phi > 0, got mu = {mu}, phi = {phi}"
        )));
    }
    Ok(())
}

/// Draws a count with mean `mu` and variance `mu + mu^2 / phi`.
pub fn negbin_sample<R: Rng + ?Sized>(mu: f64, phi: f64, rng: &mut R) -> Result<u64> {
    check(mu, phi)?;
    let rate = Gamma::new(phi, mu / phi)
        .map_err(|e| Error::Domain(format!("gamma mixing distribution: {e}")))?
        .sample(rng);
    if !(rate > 0.0) {
        return Ok(0);
    }
    let n: f64 = Poisson::new(rate)
        .map_err(|e| Error::Domain(format!("Poisson rate {rate}: {e}")))?
        .sample(rng);
    Ok(n as u64)
}

pub fn negbin_log_pmf(n: u64, mu: f64, phi: f64) -> Result<f64> {
    check(mu, phi)?;
    let k = n as f64;
    Ok(ln_gamma(k + phi) - ln_gamma(phi) - ln_gamma(k + 1.0)
        + phi * (phi / (mu + phi)).ln()
        + k * (mu / (mu + phi)).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn pmf_at_zero() {
        assert!((negbin_log_pmf(0, 5.0, 5.0).unwrap().exp() - 0.03125).abs() < 1e-14);
    }

    #[test]
    fn pmf_sums_to_one_with_matching_moments() {
        let (mu, phi) = (5.0, 5.0);
        let mut total = 0.0;
        let mut mean = 0.0;
        let mut second = 0.0;
        for n in 0..400u64 {
            let p = negbin_log_pmf(n, mu, phi).unwrap().exp();
            total += p;
            mean += n as f64 * p;
            second += (n * n) as f64 * p;
        }
        assert!((total - 1.0).abs() < 1e-12);
        assert!((mean - mu).abs() < 1e-10);
        assert!((second - mean * mean - (mu + mu * mu / phi)).abs() < 1e-9);
    }

    fn moments(mu: f64, phi: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n)
            .map(|_| negbin_sample(mu, phi, &mut rng).unwrap() as f64)
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        (m, v)
    }

    #[test]
    fn sample_moments() {
        let (m, v) = moments(5.0, 5.0, 100_000, 21);
        assert!((m - 5.0).abs() < 0.05, "{m}");
        assert!((v - 10.0).abs() < 0.4, "{v}");
    }

    #[test]
    fn poisson_limit() {
        let (_, v) = moments(5.0, 1e6, 100_000, 22);
        assert!((v - 5.0).abs() / 5.0 < 0.1, "{v}");
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(negbin_sample(0.0, 5.0, &mut rng).is_err());
        assert!(negbin_sample(5.0, -1.0, &mut rng).is_err());
    }
}
