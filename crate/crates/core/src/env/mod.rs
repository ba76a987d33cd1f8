//! The Org and Open Org environments.

mod config;
mod org;
mod trace;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use config::{OrgConfig, RewardParams, ENV_KEYS};
pub use org::{
    apply_openness, group_reward, logistic, next_level, private_obs, public_obs, rewards, transition,
    validate_actions, AgentId, Level, Member, OrgAction, OrgState, PublicObs, Role,
};
pub use trace::{TraceRecord, TraceWriter};

use crate::error::Result;

/// Result of one environment tick.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub level_before: Level,
    /// Rewards aligned with the roster at the start of the tick.
    pub rewards: Vec<f64>,
    pub public_obs: PublicObs,
    pub departed: Vec<AgentId>,
    pub hired: Vec<AgentId>,
    /// The horizon has been reached.
    pub done: bool,
}

/// Single-owner state machine wrapping the transition and reward functions.
pub struct OrgEnv {
    config: OrgConfig,
    state: OrgState,
    tick: usize,
    rng: ChaCha8Rng,
}

impl OrgEnv {
    pub fn new(config: OrgConfig, rng: ChaCha8Rng) -> Result<Self> {
        let state = OrgState::initial(&config)?;
        Ok(Self {
            config,
            state,
            tick: 0,
            rng,
        })
    }

    pub fn with_seed(config: OrgConfig, seed: u64) -> Result<Self> {
        Self::new(config, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn config(&self) -> &OrgConfig {
        &self.config
    }

    pub fn state(&self) -> &OrgState {
        &self.state
    }

    pub fn tick(&self) -> usize {
        self.tick
    }

    pub fn reset(&mut self) -> Result<PublicObs> {
        self.state = OrgState::initial(&self.config)?;
        self.tick = 0;
        Ok(public_obs(self.state.level, self.config.epsilon, &mut self.rng))
    }

    /// Advances one tick. `joint` is aligned with the current roster.
    pub fn step(&mut self, joint: &[OrgAction]) -> Result<StepOutcome> {
        validate_actions(&self.state, joint)?;
        let level_before = self.state.level;
        let roles = self.state.roles();
        let mut next = self.state.clone();
        next.level = next_level(level_before, joint);
        let (mut departed, mut hired) = (Vec::new(), Vec::new());
        if self.state.open_mode {
            let (s, d, h) = apply_openness(&next, joint, self.config.max_employees);
            next = s;
            departed = d;
            hired = h;
        }
        let rewards = rewards(&self.config.rewards, level_before, &roles, joint, hired.len());
        self.state = next;
        self.tick += 1;
        Ok(StepOutcome {
            level_before,
            rewards,
            public_obs: public_obs(self.state.level, self.config.epsilon, &mut self.rng),
            departed,
            hired,
            done: self.tick >= self.config.horizon,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_roster_never_changes_and_horizon_ends() {
        let mut env = OrgEnv::with_seed(OrgConfig { horizon: 3, ..OrgConfig::closed(3) }, 1).unwrap();
        let roster = env.state().roster.clone();
        assert_eq!(env.reset().unwrap(), PublicObs::Several);
        let joint = [OrgAction::Group; 3];
        assert!(!env.step(&joint).unwrap().done);
        assert!(!env.step(&joint).unwrap().done);
        let last = env.step(&joint).unwrap();
        assert!(last.done);
        assert_eq!(last.public_obs, PublicObs::Many);
        assert_eq!(env.state().roster, roster);
    }

    #[test]
    fn open_step_hires_and_charges() {
        let mut env = OrgEnv::with_seed(OrgConfig::open(), 1).unwrap();
        env.reset().unwrap();
        let out = env.step(&[OrgAction::Hire, OrgAction::Group]).unwrap();
        assert_eq!(out.hired, vec![2]);
        assert_eq!(env.state().roster.len(), 3);
        // s_m: R_G = 6 · 1 / 2 = 3; manager 0.5 + 3 − 1.
        assert!((out.rewards[0] - 2.5).abs() < 1e-12);
        assert!((out.rewards[1] - 3.0).abs() < 1e-12);
    }
}
