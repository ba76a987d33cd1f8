use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, Error, Result};

/// Count of agents taking each action.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    counts: Vec<usize>,
}

impl Configuration {
    pub fn new(counts: Vec<usize>) -> Self {
        Self { counts }
    }

    pub fn zeros(action_count: usize) -> Self {
        Self::new(vec![0; action_count])
    }

    /// Tally of `actions`, each an index below `action_count`.
    pub fn from_actions(actions: impl IntoIterator<Item = usize>, action_count: usize) -> Self {
        let mut counts = vec![0; action_count];
        for a in actions {
            counts[a] += 1;
        }
        Self { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn action_count(&self) -> usize {
        self.counts.len()
    }

    pub fn population_size(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Counts divided by the population size; all zeros for an empty population.
    pub fn fractions(&self) -> Vec<f64> {
        let n = self.population_size();
        if n == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts.iter().map(|&c| c as f64 / n as f64).collect()
    }

    /// Lowest-index action with the largest count.
    pub fn modal_action(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    pub fn with_added(&self, action: usize) -> Self {
        let mut counts = self.counts.clone();
        counts[action] += 1;
        Self { counts }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let counts = s
            .trim()
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidParameter {
                name: "configuration",
                reason: format!("`{s}`: {e}"),
            })?;
        Ok(Self { counts })
    }
}

/// `prod_n theta_n^{c_n}`: the probability of one ordered realization with
/// these counts (no multinomial coefficient).
pub fn config_likelihood(theta: &[f64], config: &Configuration) -> Result<f64> {
    check_len("configuration likelihood", theta.len(), config.action_count())?;
    Ok(theta
        .iter()
        .zip(config.counts())
        .map(|(t, &c)| t.powi(c as i32))
        .product())
}

/// `N! / prod_n c_n!`.
pub fn multinomial_coefficient(config: &Configuration) -> f64 {
    let mut coef = 1.0;
    let mut seen = 0usize;
    for &c in config.counts() {
        for k in 1..=c {
            seen += 1;
            coef *= seen as f64 / k as f64;
        }
    }
    coef
}

/// Multinomial probability mass of `config` under `theta`.
pub fn config_pmf(theta: &[f64], config: &Configuration) -> Result<f64> {
    Ok(multinomial_coefficient(config) * config_likelihood(theta, config)?)
}

/// Every count vector of length `action_count` summing to `population`, in
/// ascending lexicographic order.
pub fn enumerate_configs(population: usize, action_count: usize) -> Vec<Configuration> {
    assert!(action_count >= 1, "need at least one action");
    let mut out = Vec::new();
    let mut counts = vec![0; action_count];
    fn fill(pos: usize, remaining: usize, counts: &mut Vec<usize>, out: &mut Vec<Configuration>) {
        if pos + 1 == counts.len() {
            counts[pos] = remaining;
            out.push(Configuration::new(counts.clone()));
            return;
        }
        for c in 0..=remaining {
            counts[pos] = c;
            fill(pos + 1, remaining - c, counts, out);
        }
    }
    fill(0, population, &mut counts, &mut out);
    out
}

/// Exact distribution over configurations induced by independent agents.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigDistribution {
    action_count: usize,
    masses: BTreeMap<Configuration, f64>,
}

impl ConfigDistribution {
    /// Point mass on the empty configuration.
    pub fn empty(action_count: usize) -> Self {
        let mut masses = BTreeMap::new();
        masses.insert(Configuration::zeros(action_count), 1.0);
        Self { action_count, masses }
    }

    /// Folds one more agent acting according to `probs`.
    pub fn add_agent(&self, probs: &[f64]) -> Result<Self> {
        check_len("per-agent action distribution", self.action_count, probs.len())?;
        let mut next = BTreeMap::new();
        for (config, &mass) in &self.masses {
            for (a, &p) in probs.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                *next.entry(config.with_added(a)).or_insert(0.0) += mass * p;
            }
        }
        Ok(Self {
            action_count: self.action_count,
            masses: next,
        })
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn get(&self, config: &Configuration) -> f64 {
        self.masses.get(config).copied().unwrap_or(0.0)
    }

    /// Support in ascending lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&Configuration, f64)> {
        self.masses.iter().map(|(c, &m)| (c, m))
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.values().sum()
    }
}

/// Distribution over configurations of a population whose members act
/// independently with the given categorical distributions, built one agent at
/// a time.
pub fn config_distribution(per_agent: &[Vec<f64>], action_count: usize) -> Result<ConfigDistribution> {
    per_agent
        .iter()
        .try_fold(ConfigDistribution::empty(action_count), |dist, probs| dist.add_agent(probs))
}
