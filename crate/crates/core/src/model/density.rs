//! Scalar log-densities used for priors and likelihoods.

use rand::Rng;
use statrs::function::erf::{erfc, erfc_inv};

/// `0.5 * ln(2 pi)`
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_logpdf(x: f64, loc: f64, scale: f64) -> f64 {
    let z = (x - loc) / scale;
    -HALF_LN_2PI - scale.ln() - 0.5 * z * z
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile function.
pub fn std_normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Normal prior on an unbounded real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalPrior {
    pub loc: f64,
    pub scale: f64,
}

impl NormalPrior {
    pub fn log_density(&self, x: f64) -> f64 {
        normal_logpdf(x, self.loc, self.scale)
    }

    pub fn grad(&self, x: f64) -> f64 {
        -(x - self.loc) / (self.scale * self.scale)
    }
}

/// Half-normal prior on a non-negative scale parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfNormalPrior {
    pub scale: f64,
}

impl HalfNormalPrior {
    pub fn log_density(&self, x: f64) -> f64 {
        if !(x >= 0.0) {
            return f64::NEG_INFINITY;
        }
        std::f64::consts::LN_2 + normal_logpdf(x, 0.0, self.scale)
    }

    pub fn median(&self) -> f64 {
        self.scale * std_normal_quantile(0.75)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        (z * self.scale).abs()
    }
}

/// Normal distribution truncated to `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    pub loc: f64,
    pub scale: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TruncatedNormal {
    pub fn new(loc: f64, scale: f64, lower: f64, upper: f64) -> Self {
        Self {
            loc,
            scale,
            lower,
            upper,
        }
    }

    fn cdf_bounds(&self) -> (f64, f64) {
        (
            std_normal_cdf((self.lower - self.loc) / self.scale),
            std_normal_cdf((self.upper - self.loc) / self.scale),
        )
    }

    /// Probability mass of the untruncated normal inside the bounds.
    pub fn mass(&self) -> f64 {
        let (a, b) = self.cdf_bounds();
        b - a
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if !self.contains(x) {
            return f64::NEG_INFINITY;
        }
        normal_logpdf(x, self.loc, self.scale) - self.mass().ln()
    }

    pub fn grad(&self, x: f64) -> f64 {
        -(x - self.loc) / (self.scale * self.scale)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        if x >= self.upper {
            return 1.0;
        }
        let (a, b) = self.cdf_bounds();
        (std_normal_cdf((x - self.loc) / self.scale) - a) / (b - a)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let (a, b) = self.cdf_bounds();
        let x = self.loc + self.scale * std_normal_quantile(a + p * (b - a));
        x.clamp(self.lower, self.upper)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_normal_at_origin() {
        let hn = HalfNormalPrior { scale: 0.5 };
        let expected = 2f64.ln() - 0.5f64.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((hn.log_density(0.0) - expected).abs() < 1e-14);
        assert!((hn.log_density(0.0) - 0.46737).abs() < 5e-5);
        assert_eq!(hn.log_density(-0.1), f64::NEG_INFINITY);
    }

    /// Composite Simpson integration of the untruncated density over the bounds.
    fn simpson_mass(tn: &TruncatedNormal) -> f64 {
        let n = 20_000;
        let h = (tn.upper - tn.lower) / n as f64;
        let f = |x: f64| normal_logpdf(x, tn.loc, tn.scale).exp();
        let mut s = f(tn.lower) + f(tn.upper);
        for i in 1..n {
            let x = tn.lower + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn truncation_mass_against_quadrature() {
        for tn in [
            TruncatedNormal::new(0.9, 0.05, 0.6, 1.4),
            TruncatedNormal::new(2.0, 0.5, 1.0, 3.0),
            TruncatedNormal::new(0.3, 0.1, 0.1, 1.3),
            TruncatedNormal::new(0.2, 0.1, 0.1, 1.0),
        ] {
            assert!((tn.mass() - simpson_mass(&tn)).abs() < 1e-9);
        }
    }

    #[test]
    fn far_truncation_is_negligible() {
        let tn = TruncatedNormal::new(0.9, 0.05, 0.6, 1.4);
        let diff = tn.log_density(0.9) - normal_logpdf(0.9, 0.9, 0.05);
        assert!(diff.abs() < 1e-8);
        assert_eq!(tn.log_density(0.5), f64::NEG_INFINITY);
    }

    #[test]
    fn truncated_density_integrates_to_one() {
        let tn = TruncatedNormal::new(0.3, 0.1, 0.1, 1.3);
        let n = 20_000;
        let h = (tn.upper - tn.lower) / n as f64;
        let total: f64 = (0..n)
            .map(|i| tn.log_density(tn.lower + (i as f64 + 0.5) * h).exp() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let tn = TruncatedNormal::new(2.0, 0.5, 1.0, 3.0);
        for p in [0.01, 0.2, 0.5, 0.77, 0.99] {
            assert!((tn.cdf(tn.quantile(p)) - p).abs() < 1e-10);
        }
        assert!((tn.median() - 2.0).abs() < 1e-12);
    }
}
