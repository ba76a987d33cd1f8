use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::{digamma, ln_gamma};

use super::config::Configuration;
use crate::error::{check_len, Error, Result};

pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A point on the probability simplex over actions.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionDistribution(Vec<f64>);

impl ActionDistribution {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: "empty".into(),
            });
        }
        if let Some(i) = theta.iter().position(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: format!("entry {i} is {}", theta[i]),
            });
        }
        let sum: f64 = theta.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: format!("sums to {sum}"),
            });
        }
        Ok(Self(theta))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Concentration vector of a Dirichlet distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletParams(Vec<f64>);

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: "empty".into(),
            });
        }
        if let Some(i) = alpha.iter().position(|a| !a.is_finite() || *a <= 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("entry {i} is {}, must be finite and > 0", alpha[i]),
            });
        }
        Ok(Self(alpha))
    }

    /// The uniform prior `Dir(1, ..., 1)`.
    pub fn ones(k: usize) -> Self {
        Self(vec![1.0; k])
    }

    /// `Dir(C + 1)`.
    pub fn smoothed_counts(config: &Configuration) -> Self {
        Self(config.counts().iter().map(|&c| c as f64 + 1.0).collect())
    }

    pub fn alpha(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Log normalizer `ln Γ(Σα) − Σ ln Γ(α_n)`.
    pub fn ln_normalizer(&self) -> f64 {
        ln_gamma(self.total()) - self.0.iter().map(|&a| ln_gamma(a)).sum::<f64>()
    }

    pub fn ln_density(&self, theta: &[f64]) -> Result<f64> {
        check_len("Dirichlet density", self.len(), theta.len())?;
        let mut acc = self.ln_normalizer();
        for (i, (&a, &t)) in self.0.iter().zip(theta).enumerate() {
            if a == 1.0 {
                continue;
            }
            if t <= 0.0 {
                if a < 1.0 {
                    return Err(Error::InfiniteDensity { index: i });
                }
                return Ok(f64::NEG_INFINITY);
            }
            acc += (a - 1.0) * t.ln();
        }
        Ok(acc)
    }

    /// `Γ(Σα) / Π Γ(α_n) · Π θ_n^(α_n − 1)`.
    pub fn density(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.ln_density(theta)?.exp())
    }

    /// Draws θ by normalizing independent `Gamma(α_n, 1)` variates.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ActionDistribution {
        let mut draws: Vec<f64> = self
            .0
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("alpha validated positive").sample(rng))
            .collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            draws.iter_mut().for_each(|d| *d /= sum);
        } else {
            // Every draw underflowed; fall back to the largest concentration.
            let best = self.argmax();
            draws.iter_mut().enumerate().for_each(|(i, d)| *d = if i == best { 1.0 } else { 0.0 });
        }
        ActionDistribution(draws)
    }

    fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &a) in self.0.iter().enumerate() {
            if a > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// The mean action `α / Σα`.
    pub fn mean(&self) -> ActionDistribution {
        let total = self.total();
        ActionDistribution(self.0.iter().map(|a| a / total).collect())
    }

    /// Conjugate update `α + C′`.
    pub fn posterior(&self, counts: &Configuration) -> Result<Self> {
        check_len("posterior update", self.len(), counts.action_count())?;
        Ok(Self(
            self.0
                .iter()
                .zip(counts.counts())
                .map(|(a, &c)| a + c as f64)
                .collect(),
        ))
    }

    /// Multiplies every concentration by `factor` (mean preserved).
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|a| a * factor).collect())
    }

    /// Closed-form `KL(Dir(self) ‖ Dir(other))`.
    pub fn kl(&self, other: &Self) -> Result<f64> {
        check_len("Dirichlet KL", self.len(), other.len())?;
        let a0 = self.total();
        let psi_a0 = digamma(a0);
        let mut kl = self.ln_normalizer() - other.ln_normalizer();
        for (&a, &b) in self.0.iter().zip(&other.0) {
            kl += (a - b) * (digamma(a) - psi_a0);
        }
        Ok(kl.max(0.0))
    }
}

impl fmt::Display for DirichletParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for DirichletParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let alpha = s
            .trim()
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidParameter {
                name: "alpha",
                reason: format!("`{s}`: {e}"),
            })?;
        Self::new(alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dir(a: &[f64]) -> DirichletParams {
        DirichletParams::new(a.to_vec()).unwrap()
    }

    #[test]
    fn density_examples() {
        assert!((dir(&[1.0, 1.0]).density(&[0.3, 0.7]).unwrap() - 1.0).abs() < 1e-12);
        assert!((dir(&[2.0, 1.0]).density(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            dir(&[0.5, 2.0]).density(&[0.0, 1.0]),
            Err(Error::InfiniteDensity { index: 0 })
        ));
        assert_eq!(dir(&[2.0, 2.0]).density(&[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn density_integrates_to_one_on_three_simplex() {
        // Midpoint rule over the triangle (θ1, θ2) with θ3 = 1 − θ1 − θ2.
        let d = dir(&[3.0, 2.0, 2.0]);
        let n = 800;
        let h = 1.0 / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n - i {
                let t1 = (i as f64 + 1.0 / 3.0) * h;
                let t2 = (j as f64 + 1.0 / 3.0) * h;
                let t3 = 1.0 - t1 - t2;
                if t3 <= 0.0 {
                    continue;
                }
                // Lower triangles of each cell, centroid rule.
                total += 0.5 * h * h * d.density(&[t1, t2, t3]).unwrap();
                if i + j + 1 < n {
                    let u1 = (i as f64 + 2.0 / 3.0) * h;
                    let u2 = (j as f64 + 2.0 / 3.0) * h;
                    total += 0.5 * h * h * d.density(&[u1, u2, 1.0 - u1 - u2]).unwrap();
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-4, "{total}");
        // Γ(7)/(Γ(3)Γ(2)Γ(2)) · 0.4² · 0.3 · 0.3 = 360 · 0.0144
        let v = d.density(&[0.4, 0.3, 0.3]).unwrap();
        assert!((v - 360.0 * 0.16 * 0.09).abs() < 1e-9);
    }

    #[test]
    fn concentrated_sample_is_near_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = dir(&[1e6, 1e6]).sample(&mut rng);
        assert!((t.as_slice()[0] - 0.5).abs() < 0.01);
    }

    #[test]
    fn sample_moments_match_closed_form() {
        let alpha = [2.0, 3.0, 5.0];
        let d = dir(&alpha);
        let a0: f64 = alpha.iter().sum();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 10_000;
        let draws: Vec<Vec<f64>> = (0..n).map(|_| d.sample(&mut rng).into_inner()).collect();
        let mean: Vec<f64> = (0..3).map(|i| draws.iter().map(|x| x[i]).sum::<f64>() / n as f64).collect();
        for i in 0..3 {
            let m = alpha[i] / a0;
            let var = m * (1.0 - m) / (a0 + 1.0);
            let se = (var / n as f64).sqrt();
            assert!((mean[i] - m).abs() < 3.0 * se, "coord {i}: {} vs {m}", mean[i]);
        }
        // Monte Carlo covariance vs Cov(θi, θj) = (δij m_i − m_i m_j)/(α0 + 1).
        for i in 0..3 {
            for j in 0..3 {
                let mi = alpha[i] / a0;
                let mj = alpha[j] / a0;
                let want = (if i == j { mi } else { 0.0 } - mi * mj) / (a0 + 1.0);
                let got = draws.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum::<f64>() / (n - 1) as f64;
                assert!((got - want).abs() <= 0.1 * want.abs(), "cov({i},{j}) {got} vs {want}");
            }
        }
    }

    #[test]
    fn posterior_and_mean_examples() {
        let post = dir(&[1.0, 1.0, 1.0]).posterior(&Configuration::new(vec![2, 1, 0])).unwrap();
        assert_eq!(post.alpha(), &[3.0, 2.0, 1.0]);
        let same = dir(&[1.5, 2.0]).posterior(&Configuration::zeros(2)).unwrap();
        assert_eq!(same.alpha(), &[1.5, 2.0]);
        assert_eq!(dir(&[3.0, 1.0]).mean().as_slice(), &[0.75, 0.25]);
        assert_eq!(DirichletParams::ones(4).mean(), ActionDistribution::uniform(4));
        let m = DirichletParams::ones(2).posterior(&Configuration::new(vec![10, 0])).unwrap().mean();
        assert!((m.as_slice()[0] - 11.0 / 12.0).abs() < 1e-15);
        assert!((m.as_slice()[1] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn kl_reference_values() {
        let p = dir(&[2.0, 1.0]);
        assert_eq!(p.kl(&p).unwrap(), 0.0);
        // ln 2 − 1/2
        let want = 2f64.ln() - 0.5;
        assert!((p.kl(&dir(&[1.0, 1.0])).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.19315).abs() < 1e-5);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(DirichletParams::new(vec![1.0, 0.0]).is_err());
        assert!(DirichletParams::new(vec![f64::NAN]).is_err());
        assert!(ActionDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(ActionDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(dir(&[1.0, 1.0]).posterior(&Configuration::zeros(3)).is_err());
    }

    proptest! {
        #[test]
        fn kl_is_nonnegative(a in prop::collection::vec(0.05f64..20.0, 3), b in prop::collection::vec(0.05f64..20.0, 3)) {
            prop_assert!(dir(&a).kl(&dir(&b)).unwrap() >= 0.0);
        }

        #[test]
        fn integer_alpha_stays_integer(a in prop::collection::vec(1u32..50, 4), c in prop::collection::vec(0usize..30, 4)) {
            let alpha: Vec<f64> = a.iter().map(|&x| x as f64).collect();
            let post = dir(&alpha).posterior(&Configuration::new(c.clone())).unwrap();
            for i in 0..4 {
                prop_assert_eq!(post.alpha()[i], (a[i] as usize + c[i]) as f64);
            }
        }

        #[test]
        fn updates_commute(c1 in prop::collection::vec(0usize..10, 3), c2 in prop::collection::vec(0usize..10, 3)) {
            let p = DirichletParams::ones(3);
            let a = p.posterior(&Configuration::new(c1.clone())).unwrap().posterior(&Configuration::new(c2.clone())).unwrap();
            let b = p.posterior(&Configuration::new(c2)).unwrap().posterior(&Configuration::new(c1)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
