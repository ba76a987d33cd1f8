//! Filtering beliefs over the other agents' candidate models from aggregated
//! private observations.

use super::config::{ConfigDistribution, Configuration};
use crate::error::{check_len, Error, Result};

/// A candidate model of another agent: a policy table over public
/// observations and an opaque history tag.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateModel {
    /// `policy[o][a] = Pr(a | o)`.
    pub policy: Vec<Vec<f64>>,
    pub history: u64,
}

impl CandidateModel {
    pub fn new(policy: Vec<Vec<f64>>) -> Self {
        Self { policy, history: 0 }
    }

    /// Model that always plays `action`.
    pub fn deterministic(action: usize, action_count: usize, obs_count: usize) -> Self {
        let mut row = vec![0.0; action_count];
        row[action] = 1.0;
        Self::new(vec![row; obs_count])
    }
}

/// Belief over one other agent's candidate models.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentBelief {
    pub models: Vec<CandidateModel>,
    pub probs: Vec<f64>,
}

impl AgentBelief {
    pub fn uniform(models: Vec<CandidateModel>) -> Self {
        let n = models.len();
        Self {
            models,
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// `Pr(a) = Σ_m b(m) π_m(a | o)`.
    pub fn action_marginal(&self, public_obs: usize, action_count: usize) -> Result<Vec<f64>> {
        let mut marginal = vec![0.0; action_count];
        for (model, &p) in self.models.iter().zip(&self.probs) {
            let row = model.policy.get(public_obs).ok_or(Error::DimensionMismatch {
                context: "model policy rows",
                expected: public_obs + 1,
                actual: model.policy.len(),
            })?;
            check_len("model policy row", action_count, row.len())?;
            for (m, r) in marginal.iter_mut().zip(row) {
                *m += p * r;
            }
        }
        Ok(marginal)
    }
}

/// Per-agent beliefs over the whole other-agent population.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBelief {
    pub agents: Vec<AgentBelief>,
    pub action_count: usize,
}

impl ModelBelief {
    pub fn new(agents: Vec<AgentBelief>, action_count: usize) -> Self {
        Self { agents, action_count }
    }
}

/// Configuration-based belief update.
///
/// For every tracked agent `j`, the other agents `k ≠ j` are folded into a
/// distribution over partial configurations using their action marginals;
/// `j`'s own action then completes the configuration, which is scored by
/// `w0(own_action, C, ω)`:
///
/// ```text
/// b′(m_j) ∝ b(m_j) Σ_{a_j} π_{m_j}(a_j | o) Σ_D Pr(D | b(M_-j)) W0(a_0, D + e_{a_j}, ω)
/// ```
///
/// Model policies are unchanged and history tags advance by one.
pub fn belief_update_bu<W>(
    belief: &ModelBelief,
    own_action: usize,
    public_obs: usize,
    observed: &Configuration,
    w0: W,
) -> Result<ModelBelief>
where
    W: Fn(usize, &Configuration, &Configuration) -> Result<f64>,
{
    let k = belief.action_count;
    check_len("observed configuration", k, observed.action_count())?;
    let marginals = belief
        .agents
        .iter()
        .map(|b| b.action_marginal(public_obs, k))
        .collect::<Result<Vec<_>>>()?;

    let mut updated = Vec::with_capacity(belief.agents.len());
    for (j, agent) in belief.agents.iter().enumerate() {
        let mut rest = ConfigDistribution::empty(k);
        for (i, m) in marginals.iter().enumerate() {
            if i != j {
                rest = rest.add_agent(m)?;
            }
        }
        let mut action_evidence = vec![0.0; k];
        for (a, ev) in action_evidence.iter_mut().enumerate() {
            for (partial, mass) in rest.iter() {
                *ev += mass * w0(own_action, &partial.with_added(a), observed)?;
            }
        }
        let mut probs: Vec<f64> = agent
            .models
            .iter()
            .zip(&agent.probs)
            .map(|(model, &p)| {
                let row = &model.policy[public_obs];
                p * row.iter().zip(&action_evidence).map(|(pa, ev)| pa * ev).sum::<f64>()
            })
            .collect();
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateEvidence { agent: j });
        }
        probs.iter_mut().for_each(|p| *p /= total);
        updated.push(AgentBelief {
            models: agent
                .models
                .iter()
                .map(|m| CandidateModel {
                    policy: m.policy.clone(),
                    history: m.history + 1,
                })
                .collect(),
            probs,
        });
    }
    Ok(ModelBelief::new(updated, k))
}
