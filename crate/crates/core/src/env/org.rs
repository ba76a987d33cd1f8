use std::fmt;

use rand::Rng;
use serde::Serialize;

use super::config::{OrgConfig, RewardParams};
use crate::error::{Error, Result};
use crate::population::{Configuration, PrivateObservation};

pub type AgentId = u64;

/// Hidden financial-health level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Level {
    VeryLow,
    Low,
    Medium,
    High,
    VeryHigh,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::VeryLow, Level::Low, Level::Medium, Level::High, Level::VeryHigh];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn up(self) -> Self {
        Self::ALL[(self.index() + 1).min(4)]
    }

    pub fn down(self) -> Self {
        Self::ALL[self.index().saturating_sub(1)]
    }

    /// Public observation emitted at this level without corruption.
    pub fn public_obs(self) -> PublicObs {
        match self {
            Level::VeryLow | Level::Low => PublicObs::Meager,
            Level::Medium | Level::High => PublicObs::Several,
            Level::VeryHigh => PublicObs::Many,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Level::VeryLow => "s_vl",
            Level::Low => "s_l",
            Level::Medium => "s_m",
            Level::High => "s_h",
            Level::VeryHigh => "s_vh",
        }
    }
}

/// Order volume seen by every agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PublicObs {
    Meager,
    Several,
    Many,
}

impl PublicObs {
    pub const COUNT: usize = 3;
    pub const ALL: [PublicObs; 3] = [PublicObs::Meager, PublicObs::Several, PublicObs::Many];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn one_hot(self) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.index()] = 1.0;
        v
    }
}

/// Every action in the domain. Indices double as the population action
/// space: closed organizations use the first three, open ones all six.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrgAction {
    Selfish,
    Balance,
    Group,
    Resign,
    Hire,
    Fire,
}

impl OrgAction {
    pub const ALL: [OrgAction; 6] = [
        OrgAction::Selfish,
        OrgAction::Balance,
        OrgAction::Group,
        OrgAction::Resign,
        OrgAction::Hire,
        OrgAction::Fire,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            OrgAction::Selfish => "self",
            OrgAction::Balance => "balance",
            OrgAction::Group => "group",
            OrgAction::Resign => "resign",
            OrgAction::Hire => "hire",
            OrgAction::Fire => "fire",
        }
    }
}

impl fmt::Display for OrgAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Manager,
    Employee,
}

const CLOSED_ACTIONS: [OrgAction; 3] = [OrgAction::Selfish, OrgAction::Balance, OrgAction::Group];
const OPEN_EMPLOYEE_ACTIONS: [OrgAction; 4] =
    [OrgAction::Selfish, OrgAction::Balance, OrgAction::Group, OrgAction::Resign];
const MANAGER_ACTIONS: [OrgAction; 5] = [
    OrgAction::Selfish,
    OrgAction::Balance,
    OrgAction::Group,
    OrgAction::Hire,
    OrgAction::Fire,
];

impl Role {
    /// Actions available to this role; closed organizations have no
    /// manager and no openness actions.
    pub fn actions(self, open_mode: bool) -> &'static [OrgAction] {
        match (self, open_mode) {
            (Role::Employee, false) => &CLOSED_ACTIONS,
            (Role::Employee, true) => &OPEN_EMPLOYEE_ACTIONS,
            (Role::Manager, _) => &MANAGER_ACTIONS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Manager => "manager",
            Role::Employee => "employee",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Member {
    pub id: AgentId,
    pub role: Role,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrgState {
    pub level: Level,
    pub roster: Vec<Member>,
    /// Employees added by the manager, most recent last.
    pub hire_stack: Vec<AgentId>,
    pub next_id: AgentId,
    pub open_mode: bool,
}

impl OrgState {
    /// Open mode starts with one manager (id 0) and one employee (id 1);
    /// closed mode with `n_employees` employees (ids from 0).
    pub fn initial(config: &OrgConfig) -> Result<Self> {
        config.validate()?;
        let roster: Vec<Member> = if config.open_mode {
            vec![
                Member { id: 0, role: Role::Manager },
                Member { id: 1, role: Role::Employee },
            ]
        } else {
            (0..config.n_employees as AgentId)
                .map(|id| Member { id, role: Role::Employee })
                .collect()
        };
        Ok(Self {
            level: config.initial_level,
            next_id: roster.len() as AgentId,
            roster,
            hire_stack: Vec::new(),
            open_mode: config.open_mode,
        })
    }

    pub fn employee_count(&self) -> usize {
        self.roster.iter().filter(|m| m.role == Role::Employee).count()
    }

    pub fn roles(&self) -> Vec<Role> {
        self.roster.iter().map(|m| m.role).collect()
    }

    pub fn position(&self, id: AgentId) -> Option<usize> {
        self.roster.iter().position(|m| m.id == id)
    }
}

/// Checks one action per live agent and that each is legal for its role.
pub fn validate_actions(state: &OrgState, joint: &[OrgAction]) -> Result<()> {
    if joint.len() != state.roster.len() {
        return Err(Error::ActionCount {
            expected: state.roster.len(),
            actual: joint.len(),
        });
    }
    for (member, action) in state.roster.iter().zip(joint) {
        if !member.role.actions(state.open_mode).contains(action) {
            return Err(Error::RoleMismatch {
                action: action.name().into(),
                role: member.role.name(),
            });
        }
    }
    Ok(())
}

/// One step up if more agents chose group than self, one step down if
/// fewer, unchanged on a tie. Other actions count in neither tally.
pub fn next_level(level: Level, joint: &[OrgAction]) -> Level {
    let selfish = joint.iter().filter(|a| **a == OrgAction::Selfish).count();
    let group = joint.iter().filter(|a| **a == OrgAction::Group).count();
    match group.cmp(&selfish) {
        std::cmp::Ordering::Greater => level.up(),
        std::cmp::Ordering::Less => level.down(),
        std::cmp::Ordering::Equal => level,
    }
}

/// Level update followed, in open mode, by roster changes.
pub fn transition(state: &OrgState, joint: &[OrgAction], max_employees: usize) -> Result<OrgState> {
    validate_actions(state, joint)?;
    let mut next = state.clone();
    next.level = next_level(state.level, joint);
    if state.open_mode {
        next = apply_openness(&next, joint, max_employees).0;
    }
    Ok(next)
}

/// Roster changes of one tick, in order: resignations, then the manager's
/// fire (pops the most recent hire; no-op when none remain), then hire
/// (fresh id appended to the roster and the hire stack; no-op at
/// `max_employees`). `joint` is aligned with `state.roster`.
///
/// Returns the new state, the departed ids, and the hired ids.
pub fn apply_openness(
    state: &OrgState,
    joint: &[OrgAction],
    max_employees: usize,
) -> (OrgState, Vec<AgentId>, Vec<AgentId>) {
    let mut next = state.clone();
    let mut departed = Vec::new();
    let mut hired = Vec::new();

    for (member, action) in state.roster.iter().zip(joint) {
        if member.role == Role::Employee && *action == OrgAction::Resign {
            departed.push(member.id);
        }
    }
    next.roster.retain(|m| !departed.contains(&m.id));
    next.hire_stack.retain(|id| !departed.contains(id));

    let manager_action = state
        .roster
        .iter()
        .zip(joint)
        .find(|(m, _)| m.role == Role::Manager)
        .map(|(_, a)| *a);
    match manager_action {
        Some(OrgAction::Fire) => {
            if let Some(id) = next.hire_stack.pop() {
                next.roster.retain(|m| m.id != id);
                departed.push(id);
            }
        }
        Some(OrgAction::Hire) if next.employee_count() < max_employees => {
            let id = next.next_id;
            next.next_id += 1;
            next.roster.push(Member { id, role: Role::Employee });
            next.hire_stack.push(id);
            hired.push(id);
        }
        _ => {}
    }
    (next, departed, hired)
}

/// Public observation for `level`. With probability `epsilon` one of the
/// other two categories is reported instead, uniformly.
pub fn public_obs<R: Rng + ?Sized>(level: Level, epsilon: f64, rng: &mut R) -> PublicObs {
    let truth = level.public_obs();
    if epsilon <= 0.0 || rng.random::<f64>() >= epsilon {
        return truth;
    }
    let others: Vec<PublicObs> = PublicObs::ALL.into_iter().filter(|o| *o != truth).collect();
    others[rng.random_range(0..others.len())]
}

/// Counts of the other agents' actions as perceived by `viewer`: each true
/// action is reported with probability `1 − δ`, otherwise replaced by one
/// of the other `action_count − 1` population actions uniformly.
pub fn private_obs<R: Rng + ?Sized>(
    joint: &[OrgAction],
    viewer: usize,
    delta: f64,
    action_count: usize,
    rng: &mut R,
) -> PrivateObservation {
    let mut counts = vec![0; action_count];
    for (i, a) in joint.iter().enumerate() {
        if i == viewer {
            continue;
        }
        let truth = a.index();
        let reported = if delta > 0.0 && action_count > 1 && rng.random::<f64>() < delta {
            let shift = rng.random_range(1..action_count);
            (truth + shift) % action_count
        } else {
            truth
        };
        counts[reported] += 1;
    }
    PrivateObservation {
        observed: Configuration::new(counts),
        noise_rate: delta,
    }
}

/// Group reward shared by every live agent:
/// `m(level) · (w_group·#group + w_balance·#balance) / N_live`.
pub fn group_reward(params: &RewardParams, level: Level, joint: &[OrgAction]) -> f64 {
    if joint.is_empty() {
        return 0.0;
    }
    let group = joint.iter().filter(|a| **a == OrgAction::Group).count() as f64;
    let balance = joint.iter().filter(|a| **a == OrgAction::Balance).count() as f64;
    params.level_multipliers[level.index()] * (params.w_group * group + params.w_balance * balance)
        / joint.len() as f64
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-agent rewards aligned with `roles`/`joint`.
///
/// Employees receive `ind(a) + R_G`. The manager receives
/// `σ(β^(E−1) · Σ_employees ind) + R_G − c · hired`, where `E` is the number
/// of employees at the start of the tick (floored at 1 in the exponent).
pub fn rewards(params: &RewardParams, level_before: Level, roles: &[Role], joint: &[OrgAction], hired: usize) -> Vec<f64> {
    let shared = group_reward(params, level_before, joint);
    let employees = roles.iter().filter(|r| **r == Role::Employee).count();
    let employee_ind: f64 = roles
        .iter()
        .zip(joint)
        .filter(|(r, _)| **r == Role::Employee)
        .map(|(_, a)| params.individual(*a))
        .sum();
    let discount = params.beta.powi(employees.max(1) as i32 - 1);
    roles
        .iter()
        .zip(joint)
        .map(|(role, action)| match role {
            Role::Employee => params.individual(*action) + shared,
            Role::Manager => logistic(discount * employee_ind) + shared - params.hire_cost * hired as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use OrgAction::*;

    fn open_state() -> OrgState {
        OrgState::initial(&OrgConfig::open()).unwrap()
    }

    #[test]
    fn reset_rosters() {
        let s = open_state();
        assert_eq!(s.roster.iter().filter(|m| m.role == Role::Manager).count(), 1);
        assert_eq!(s.employee_count(), 1);
        let closed = OrgState::initial(&OrgConfig::closed(30)).unwrap();
        assert_eq!(closed.employee_count(), 30);
        assert!(closed.roster.iter().all(|m| m.role == Role::Employee));
        assert_eq!(closed.level, Level::Medium);
        assert_eq!(closed.level.public_obs(), PublicObs::Several);
    }

    #[test]
    fn level_moves_one_step_by_majority() {
        assert_eq!(next_level(Level::Medium, &[Selfish, Selfish, Selfish, Group]), Level::Low);
        assert_eq!(next_level(Level::VeryLow, &[Selfish, Selfish, Group]), Level::VeryLow);
        assert_eq!(next_level(Level::VeryHigh, &[Group]), Level::VeryHigh);
        assert_eq!(next_level(Level::High, &[Selfish, Group, Balance]), Level::High);
        assert_eq!(next_level(Level::High, &[Group, Balance, Hire, Fire]), Level::VeryHigh);
        assert_eq!(next_level(Level::High, &[Resign, Balance]), Level::High);
    }

    #[test]
    fn public_obs_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let want = [PublicObs::Meager, PublicObs::Meager, PublicObs::Several, PublicObs::Several, PublicObs::Many];
        for (level, obs) in Level::ALL.iter().zip(want) {
            assert_eq!(public_obs(*level, 0.0, &mut rng), obs);
        }
    }

    #[test]
    fn corrupted_public_obs_never_reports_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_ne!(public_obs(Level::Low, 1.0 - 1e-12, &mut rng), PublicObs::Meager);
        }
    }

    #[test]
    fn role_checks() {
        let s = open_state();
        assert!(validate_actions(&s, &[Hire, Group]).is_ok());
        assert!(matches!(validate_actions(&s, &[Resign, Group]), Err(Error::RoleMismatch { .. })));
        assert!(matches!(validate_actions(&s, &[Group, Hire]), Err(Error::RoleMismatch { .. })));
        assert!(matches!(validate_actions(&s, &[Group]), Err(Error::ActionCount { .. })));
        let closed = OrgState::initial(&OrgConfig::closed(2)).unwrap();
        assert!(validate_actions(&closed, &[Resign, Group]).is_err());
    }

    #[test]
    fn openness_order_and_noops() {
        let s = open_state();
        let (s1, departed, hired) = apply_openness(&s, &[Fire, Group], 10);
        assert_eq!(s1.roster, s.roster);
        assert!(departed.is_empty() && hired.is_empty());

        let (s2, _, hired) = apply_openness(&s, &[Hire, Group], 10);
        assert_eq!(s2.roster.len(), 3);
        assert_eq!(hired, vec![2]);
        assert_eq!(s2.hire_stack.last(), Some(&2));

        let (s3, _, _) = apply_openness(&s2, &[Hire, Group, Group], 10);
        // Employee 1 resigns while the manager fires: two distinct removals.
        let (s4, departed, _) = apply_openness(&s3, &[Fire, Resign, Group, Group], 10);
        assert_eq!(departed, vec![1, 3]);
        assert_eq!(s4.roster.iter().map(|m| m.id).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(s4.hire_stack, vec![2]);

        // The resigning employee was the most recent hire: fire takes the next.
        let (s5, departed, _) = apply_openness(&s3, &[Fire, Group, Group, Resign], 10);
        assert_eq!(departed, vec![3, 2]);
        assert!(s5.hire_stack.is_empty());

        let (capped, _, hired) = apply_openness(&s, &[Hire, Group], 1);
        assert!(hired.is_empty());
        assert_eq!(capped.roster.len(), 2);
    }

    #[test]
    fn private_obs_counts_sum_to_others() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let joint = [Selfish, Group, Balance, Group, Group];
        let exact = private_obs(&joint, 0, 0.0, 3, &mut rng);
        assert_eq!(exact.observed.counts(), &[0, 1, 3]);
        for _ in 0..200 {
            let o = private_obs(&joint, 2, 0.4, 3, &mut rng);
            assert_eq!(o.observed.population_size(), 4);
        }
    }

    #[test]
    fn private_obs_misreport_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let trials = 10_000;
        let truthful = (0..trials)
            .filter(|_| private_obs(&[Group, Selfish], 0, 0.3, 3, &mut rng).observed.counts()[0] == 1)
            .count();
        let p = truthful as f64 / trials as f64;
        let sigma = (0.7f64 * 0.3 / trials as f64).sqrt();
        assert!((p - 0.7).abs() < 3.0 * sigma, "{p}");
    }

    #[test]
    fn manager_hire_cost() {
        let params = RewardParams::default();
        let r = rewards(&params, Level::VeryLow, &[Role::Manager, Role::Employee], &[Hire, Group], 1);
        assert!((r[0] + 0.5).abs() < 1e-15);
        let resign = rewards(&params, Level::VeryLow, &[Role::Manager, Role::Employee], &[Group, Resign], 0);
        assert_eq!(resign[1], 0.0);
    }

    #[test]
    fn reference_reward_table() {
        // ind = (2, 1, 0), w = (1, 0.5), m(s_h) = 1.5:
        // R_G = 1.5 · (1 + 0.5) / 4 = 0.5625.
        let params = RewardParams {
            level_multipliers: [0.0, 0.5, 1.0, 1.5, 2.0],
            ..RewardParams::default()
        };
        let roles = [Role::Employee; 4];
        let r = rewards(&params, Level::High, &roles, &[Selfish, Selfish, Group, Balance], 0);
        assert_eq!(r, vec![2.5625, 2.5625, 0.5625, 1.5625]);
    }

    #[test]
    fn group_component_is_common() {
        let params = RewardParams::default();
        let roles = [Role::Employee; 3];
        let joint = [Selfish, Balance, Group];
        let r = rewards(&params, Level::Medium, &roles, &joint, 0);
        let shared: Vec<f64> = r.iter().zip(&joint).map(|(r, a)| r - params.individual(*a)).collect();
        assert!(shared.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn transition_applies_openness_after_level() {
        let s = open_state();
        let next = transition(&s, &[Hire, Group], 8).unwrap();
        assert_eq!(next.level, Level::High);
        assert_eq!(next.roster.len(), 3);
        let closed = OrgState::initial(&OrgConfig::closed(3)).unwrap();
        let next = transition(&closed, &[Selfish, Selfish, Group], 8).unwrap();
        assert_eq!(next.level, Level::Low);
        assert_eq!(next.roster, closed.roster);
    }
}
