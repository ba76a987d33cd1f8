use super::config::{ConfigDistribution, Configuration};
use crate::error::{Error, Result};

/// Aggregated, possibly corrupted, counts of the other agents' actions.
#[derive(Clone, Debug, PartialEq)]
pub struct PrivateObservation {
    pub observed: Configuration,
    pub noise_rate: f64,
}

/// Per-agent misreport model: each action is reported truthfully with
/// probability `1 − δ`, otherwise as one of the remaining actions uniformly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformMisreport {
    pub delta: f64,
    pub action_count: usize,
}

impl UniformMisreport {
    pub fn new(delta: f64, action_count: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("{delta} is outside [0, 1)"),
            });
        }
        if action_count == 0 {
            return Err(Error::InvalidParameter {
                name: "action_count",
                reason: "must be positive".into(),
            });
        }
        Ok(Self { delta, action_count })
    }

    /// Distribution of the reported action given the true one.
    pub fn confusion_row(&self, true_action: usize) -> Vec<f64> {
        let k = self.action_count;
        if k == 1 {
            return vec![1.0];
        }
        let off = self.delta / (k - 1) as f64;
        (0..k)
            .map(|a| if a == true_action { 1.0 - self.delta } else { off })
            .collect()
    }

    /// Distribution of the reported configuration given the true one.
    pub fn observation_distribution(&self, truth: &Configuration) -> Result<ConfigDistribution> {
        let mut dist = ConfigDistribution::empty(self.action_count);
        for (a, &count) in truth.counts().iter().enumerate() {
            let row = self.confusion_row(a);
            for _ in 0..count {
                dist = dist.add_agent(&row)?;
            }
        }
        Ok(dist)
    }

    /// `W0(·, C, ω)`: probability of reporting `observed` when the true
    /// configuration is `truth`. The subject's own action does not enter.
    pub fn likelihood(&self, truth: &Configuration, observed: &Configuration) -> Result<f64> {
        if truth.population_size() != observed.population_size() {
            return Ok(0.0);
        }
        Ok(self.observation_distribution(truth)?.get(observed))
    }
}

/// Corrected counts `C′` obtained by inverting the expected misreport
/// corruption.
///
/// Solves `(1 − δ − δ/(k−1))·C + δN/(k−1) = ω`, clamps negatives to zero,
/// rescales to total `N`, and rounds by largest remainder (ties to the lower
/// index).
pub fn rectify_observation(obs: &PrivateObservation, action_count: usize) -> Result<Configuration> {
    let delta = obs.noise_rate;
    let k = action_count;
    if obs.observed.action_count() != k {
        return Err(Error::DimensionMismatch {
            context: "rectified observation",
            expected: k,
            actual: obs.observed.action_count(),
        });
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("{delta} is outside [0, 1)"),
        });
    }
    if k == 1 || delta == 0.0 {
        return Ok(obs.observed.clone());
    }
    let n = obs.observed.population_size();
    let spread = delta / (k - 1) as f64;
    let coef = 1.0 - delta - spread;
    let limit = (k - 1) as f64 / k as f64;
    if delta >= limit || coef <= 0.0 {
        return Err(Error::RectificationUndefined {
            delta,
            limit,
            actions: k,
        });
    }
    let offset = spread * n as f64;
    let solved: Vec<f64> = obs
        .observed
        .counts()
        .iter()
        .map(|&w| ((w as f64 - offset) / coef).max(0.0))
        .collect();
    Ok(Configuration::new(round_to_total(&solved, n)))
}

/// Rescales nonnegative `values` to sum to `total` and rounds them to
/// integers by largest remainder.
pub fn round_to_total(values: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = values.iter().sum();
    if total == 0 || sum <= 0.0 {
        let mut out = vec![0; values.len()];
        if total > 0 {
            out[0] = total;
        }
        return out;
    }
    let scaled: Vec<f64> = values.iter().map(|v| v * total as f64 / sum).collect();
    let mut out: Vec<usize> = scaled.iter().map(|v| v.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable sort keeps lower indices first among equal remainders.
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.partial_cmp(&ra).unwrap()
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        out[i] += 1;
    }
    out
}
