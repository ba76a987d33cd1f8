//! Brute-force reference computations used to derive expected values.
//!
//! Everything here is deliberately written without the production code paths
//! it is compared against: configuration distributions by joint-action
//! enumeration, belief updates by joint model and action enumeration, and
//! policy returns by exact propagation of the level chain.

use std::collections::BTreeMap;

use crate::env::{Level, OrgConfig};
use crate::error::{Error, Result};
use crate::population::{config_pmf, enumerate_configs, Configuration, ModelBelief};

/// Iterates every joint index vector with `radix` choices per position.
fn for_each_joint(len: usize, radix: &[usize], mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; len];
    loop {
        f(&idx);
        let mut pos = 0;
        loop {
            if pos == len {
                return;
            }
            idx[pos] += 1;
            if idx[pos] < radix[pos] {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Distribution over count vectors obtained by summing over all `kᴺ` joint
/// actions.
pub fn joint_enumeration_distribution(per_agent: &[Vec<f64>], action_count: usize) -> BTreeMap<Vec<usize>, f64> {
    let mut out = BTreeMap::new();
    let radix = vec![action_count; per_agent.len()];
    for_each_joint(per_agent.len(), &radix, |joint| {
        let p: f64 = joint.iter().zip(per_agent).map(|(&a, probs)| probs[a]).product();
        let mut counts = vec![0; action_count];
        for &a in joint {
            counts[a] += 1;
        }
        *out.entry(counts).or_insert(0.0) += p;
    });
    out
}

/// Model-belief update by enumerating every joint model assignment and joint
/// action of the tracked agents.
///
/// `b′(m_j) ∝ Σ_{m_-j} Π_i b(m_i) Σ_a Π_i π_{m_i}(a_i | o) W0(a_0, C(a), ω)`.
pub fn belief_update_enumeration<W>(
    belief: &ModelBelief,
    own_action: usize,
    public_obs: usize,
    observed: &Configuration,
    w0: W,
) -> Result<Vec<Vec<f64>>>
where
    W: Fn(usize, &Configuration, &Configuration) -> Result<f64>,
{
    let k = belief.action_count;
    let n = belief.agents.len();
    let model_radix: Vec<usize> = belief.agents.iter().map(|a| a.models.len()).collect();
    let action_radix = vec![k; n];
    let mut post: Vec<Vec<f64>> = model_radix.iter().map(|&m| vec![0.0; m]).collect();
    let mut failure = None;
    for_each_joint(n, &model_radix, |models| {
        let prior: f64 = models.iter().enumerate().map(|(i, &m)| belief.agents[i].probs[m]).product();
        if prior == 0.0 {
            return;
        }
        let mut evidence = 0.0;
        for_each_joint(n, &action_radix, |actions| {
            let p: f64 = actions
                .iter()
                .enumerate()
                .map(|(i, &a)| belief.agents[i].models[models[i]].policy[public_obs][a])
                .product();
            if p == 0.0 {
                return;
            }
            let config = Configuration::from_actions(actions.iter().copied(), k);
            match w0(own_action, &config, observed) {
                Ok(w) => evidence += p * w,
                Err(e) => failure = Some(e),
            }
        });
        for (j, &m) in models.iter().enumerate() {
            post[j][m] += prior * evidence;
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    for (j, row) in post.iter_mut().enumerate() {
        let total: f64 = row.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateEvidence { agent: j });
        }
        row.iter_mut().for_each(|p| *p /= total);
    }
    Ok(post)
}

/// A stationary policy over the three public observations for the three
/// closed-mode actions: `policy[o] = (Pr self, Pr balance, Pr group)`.
pub type ObsPolicy = [[f64; 3]; 3];

/// Level-chain quantities of one symmetric policy row.
#[derive(Clone, Copy, Debug)]
struct RowStats {
    /// Expected individual reward of one agent.
    individual: f64,
    /// Expected `(w_group·#group + w_balance·#balance)/N`.
    group_share: f64,
    up: f64,
    down: f64,
}

fn row_stats(config: &OrgConfig, row: &[f64; 3], configs: &[Configuration]) -> Result<RowStats> {
    let r = &config.rewards;
    let (mut up, mut down) = (0.0, 0.0);
    for c in configs {
        let p = config_pmf(row, c)?;
        let (s, g) = (c.counts()[0], c.counts()[2]);
        if g > s {
            up += p;
        } else if s > g {
            down += p;
        }
    }
    Ok(RowStats {
        individual: row[0] * r.ind_self + row[1] * r.ind_balance + row[2] * r.ind_group,
        group_share: r.w_group * row[2] + r.w_balance * row[1],
        up,
        down,
    })
}

/// Probability of each observation category at a level under ε-corruption.
fn obs_given_level(level: usize, epsilon: f64) -> [f64; 3] {
    let truth = match level {
        0 | 1 => 0,
        2 | 3 => 1,
        _ => 2,
    };
    let mut p = [epsilon / 2.0; 3];
    p[truth] = 1.0 - epsilon;
    p
}

fn chain_return(config: &OrgConfig, stats: &[RowStats; 3]) -> f64 {
    let m = &config.rewards.level_multipliers;
    let mut dist = [0.0; 5];
    dist[config.initial_level.index()] = 1.0;
    let mut total = 0.0;
    let obs: Vec<[f64; 3]> = (0..5).map(|l| obs_given_level(l, config.epsilon)).collect();
    for _ in 0..config.horizon {
        let mut next = [0.0; 5];
        for l in 0..5 {
            if dist[l] == 0.0 {
                continue;
            }
            for o in 0..3 {
                let w = dist[l] * obs[l][o];
                if w == 0.0 {
                    continue;
                }
                let st = &stats[o];
                total += w * (st.individual + m[l] * st.group_share);
                next[(l + 1).min(4)] += w * st.up;
                next[l.saturating_sub(1)] += w * st.down;
                next[l] += w * (1.0 - st.up - st.down);
            }
        }
        dist = next;
    }
    total
}

/// Exact expected undiscounted episode return of one agent when every agent
/// of a closed organization follows `policy`.
pub fn symmetric_policy_return(config: &OrgConfig, policy: &ObsPolicy) -> Result<f64> {
    if config.open_mode {
        return Err(Error::InvalidParameter {
            name: "open_mode",
            reason: "symmetric chain evaluation covers closed organizations only".into(),
        });
    }
    config.validate()?;
    let configs = enumerate_configs(config.n_employees, 3);
    let stats = [
        row_stats(config, &policy[0], &configs)?,
        row_stats(config, &policy[1], &configs)?,
        row_stats(config, &policy[2], &configs)?,
    ];
    Ok(chain_return(config, &stats))
}

/// Best symmetric stationary observation policy over the simplex grid with
/// step `1/resolution` in every observation row.
pub fn optimal_symmetric_return(config: &OrgConfig, resolution: usize) -> Result<(ObsPolicy, f64)> {
    if config.open_mode || resolution == 0 {
        return Err(Error::InvalidParameter {
            name: "resolution",
            reason: "need a closed organization and a positive grid resolution".into(),
        });
    }
    config.validate()?;
    let configs = enumerate_configs(config.n_employees, 3);
    let mut rows = Vec::new();
    for i in 0..=resolution {
        for j in 0..=resolution - i {
            let s = i as f64 / resolution as f64;
            let b = j as f64 / resolution as f64;
            let row = [s, b, ((resolution - i - j) as f64 / resolution as f64).max(0.0)];
            rows.push((row, row_stats(config, &row, &configs)?));
        }
    }
    let mut best = (rows[0].0, rows[0].0, rows[0].0);
    let mut best_value = f64::NEG_INFINITY;
    for a in &rows {
        for b in &rows {
            for c in &rows {
                let v = chain_return(config, &[a.1, b.1, c.1]);
                if v > best_value {
                    best_value = v;
                    best = (a.0, b.0, c.0);
                }
            }
        }
    }
    Ok(([best.0, best.1, best.2], best_value))
}

/// Policy playing uniformly at random in every observation.
pub const UNIFORM_POLICY: ObsPolicy = [[1.0 / 3.0; 3]; 3];

/// Policy playing `action` (0 self, 1 balance, 2 group) everywhere.
pub fn constant_policy(action: usize) -> ObsPolicy {
    let mut row = [0.0; 3];
    row[action] = 1.0;
    [row; 3]
}

/// Manager's episode return in an open organization when the manager hires
/// on each tick until `target` employees are on the roster and plays group
/// afterwards, while every employee plays group.
pub fn constant_staffing_return(config: &OrgConfig, target: usize) -> f64 {
    let r = &config.rewards;
    let mut level = config.initial_level.index();
    let mut employees = 1usize;
    let mut total = 0.0;
    for _ in 0..config.horizon {
        let hiring = employees < target && employees < config.max_employees;
        let live = employees + 1;
        let group = employees + usize::from(!hiring);
        let shared = r.level_multipliers[level] * r.w_group * group as f64 / live as f64;
        let ind_sum = employees as f64 * r.ind_group;
        let discount = r.beta.powi(employees as i32 - 1);
        let sigma = 1.0 / (1.0 + (-discount * ind_sum).exp());
        total += sigma + shared - if hiring { r.hire_cost } else { 0.0 };
        if group > 0 {
            level = (level + 1).min(4);
        }
        if hiring {
            employees += 1;
        }
    }
    total
}

/// Steady employee count maximizing [`constant_staffing_return`] over
/// `1..=max_employees`, smallest on ties, with every candidate's return.
pub fn optimal_staffing(config: &OrgConfig) -> (usize, Vec<(usize, f64)>) {
    let table: Vec<(usize, f64)> = (1..=config.max_employees.max(1))
        .map(|e| (e, constant_staffing_return(config, e)))
        .collect();
    let mut best = table[0];
    for &(e, v) in &table {
        if v > best.1 + 1e-12 {
            best = (e, v);
        }
    }
    (best.0, table)
}

/// Level reached from the initial level after `steps` all-group ticks.
pub fn all_group_level(config: &OrgConfig, steps: usize) -> Level {
    Level::from_index((config.initial_level.index() + steps).min(4)).unwrap()
}
