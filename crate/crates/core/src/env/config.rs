use super::org::{Level, OrgAction};
use crate::error::{Error, Result};
use crate::kv::KvFile;

/// Reward constants of the Org domain.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardParams {
    pub ind_self: f64,
    pub ind_balance: f64,
    pub ind_group: f64,
    pub ind_resign: f64,
    pub ind_hire: f64,
    pub ind_fire: f64,
    pub w_group: f64,
    pub w_balance: f64,
    /// Multiplier of the group reward per level, `s_vl` first.
    pub level_multipliers: [f64; 5],
    pub hire_cost: f64,
    /// Base of the manager's diminishing-returns discount.
    pub beta: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            ind_self: 2.0,
            ind_balance: 1.0,
            ind_group: 0.0,
            ind_resign: 0.0,
            ind_hire: 0.0,
            ind_fire: 0.0,
            w_group: 1.0,
            w_balance: 0.5,
            level_multipliers: [0.0, 3.0, 6.0, 9.0, 12.0],
            hire_cost: 1.0,
            beta: 0.9,
        }
    }
}

impl RewardParams {
    pub fn individual(&self, action: OrgAction) -> f64 {
        match action {
            OrgAction::Selfish => self.ind_self,
            OrgAction::Balance => self.ind_balance,
            OrgAction::Group => self.ind_group,
            OrgAction::Resign => self.ind_resign,
            OrgAction::Hire => self.ind_hire,
            OrgAction::Fire => self.ind_fire,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hire_cost >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "hire_cost",
                reason: format!("{} must be >= 0", self.hire_cost),
            });
        }
        if self.level_multipliers.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter {
                name: "level_multipliers",
                reason: format!("{:?} must be nondecreasing", self.level_multipliers),
            });
        }
        let all = [
            self.ind_self,
            self.ind_balance,
            self.ind_group,
            self.ind_resign,
            self.ind_hire,
            self.ind_fire,
            self.w_group,
            self.w_balance,
            self.beta,
        ];
        if all.iter().chain(&self.level_multipliers).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "reward table",
                reason: "entries must be finite".into(),
            });
        }
        Ok(())
    }
}

/// Environment parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct OrgConfig {
    /// Employees in a closed organization (ignored in open mode).
    pub n_employees: usize,
    pub open_mode: bool,
    /// Private-observation misreport rate.
    pub delta: f64,
    /// Public-observation corruption rate.
    pub epsilon: f64,
    pub horizon: usize,
    pub initial_level: Level,
    /// Hire is a no-op once this many employees are on the roster.
    pub max_employees: usize,
    pub rewards: RewardParams,
}

impl Default for OrgConfig {
    fn default() -> Self {
        Self {
            n_employees: 5,
            open_mode: false,
            delta: 0.1,
            epsilon: 0.0,
            horizon: 50,
            initial_level: Level::Medium,
            max_employees: 16,
            rewards: RewardParams::default(),
        }
    }
}

pub const ENV_KEYS: &[&str] = &[
    "n_employees",
    "open_mode",
    "delta",
    "epsilon",
    "horizon",
    "initial_level",
    "max_employees",
    "reward_self",
    "reward_balance",
    "reward_group",
    "reward_resign",
    "reward_hire",
    "reward_fire",
    "w_group",
    "w_balance",
    "level_multipliers",
    "hire_cost",
    "beta",
];

impl OrgConfig {
    pub fn closed(n_employees: usize) -> Self {
        Self {
            n_employees,
            ..Self::default()
        }
    }

    pub fn open() -> Self {
        Self {
            open_mode: true,
            ..Self::default()
        }
    }

    /// Size of the population action space seen in private observations.
    pub fn population_action_count(&self) -> usize {
        if self.open_mode {
            6
        } else {
            3
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.open_mode && self.n_employees == 0 {
            return Err(Error::InvalidParameter {
                name: "n_employees",
                reason: "a closed organization needs at least one employee".into(),
            });
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("{} is outside [0, 1)", self.delta),
            });
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("{} is outside [0, 1]", self.epsilon),
            });
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: "must be positive".into(),
            });
        }
        let k = self.population_action_count() as f64;
        if self.delta >= (k - 1.0) / k {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("{} makes rectification undefined for {k} actions", self.delta),
            });
        }
        self.rewards.validate()
    }

    /// Reads the environment keys of `kv`, defaulting the rest. Keys that are
    /// not environment keys are left to the caller.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let d = Self::default();
        let r = &d.rewards;
        let initial_level = match kv.raw("initial_level") {
            None => d.initial_level,
            Some(name) => Level::ALL
                .into_iter()
                .find(|l| l.name() == name)
                .ok_or_else(|| Error::InvalidParameter {
                    name: "initial_level",
                    reason: format!("`{name}` is not one of s_vl, s_l, s_m, s_h, s_vh"),
                })?,
        };
        let level_multipliers = match kv.get_list::<f64>("level_multipliers")? {
            None => r.level_multipliers,
            Some(v) => v.try_into().map_err(|v: Vec<f64>| Error::InvalidParameter {
                name: "level_multipliers",
                reason: format!("need 5 values, got {}", v.len()),
            })?,
        };
        let cfg = Self {
            n_employees: kv.get_or("n_employees", d.n_employees)?,
            open_mode: kv.get_or("open_mode", d.open_mode)?,
            delta: kv.get_or("delta", d.delta)?,
            epsilon: kv.get_or("epsilon", d.epsilon)?,
            horizon: kv.get_or("horizon", d.horizon)?,
            initial_level,
            max_employees: kv.get_or("max_employees", d.max_employees)?,
            rewards: RewardParams {
                ind_self: kv.get_or("reward_self", r.ind_self)?,
                ind_balance: kv.get_or("reward_balance", r.ind_balance)?,
                ind_group: kv.get_or("reward_group", r.ind_group)?,
                ind_resign: kv.get_or("reward_resign", r.ind_resign)?,
                ind_hire: kv.get_or("reward_hire", r.ind_hire)?,
                ind_fire: kv.get_or("reward_fire", r.ind_fire)?,
                w_group: kv.get_or("w_group", r.w_group)?,
                w_balance: kv.get_or("w_balance", r.w_balance)?,
                level_multipliers,
                hire_cost: kv.get_or("hire_cost", r.hire_cost)?,
                beta: kv.get_or("beta", r.beta)?,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::default();
        let r = &self.rewards;
        kv.set("n_employees", self.n_employees.to_string());
        kv.set("open_mode", self.open_mode.to_string());
        kv.set("delta", self.delta.to_string());
        kv.set("epsilon", self.epsilon.to_string());
        kv.set("horizon", self.horizon.to_string());
        kv.set("initial_level", self.initial_level.name());
        kv.set("max_employees", self.max_employees.to_string());
        kv.set("reward_self", r.ind_self.to_string());
        kv.set("reward_balance", r.ind_balance.to_string());
        kv.set("reward_group", r.ind_group.to_string());
        kv.set("reward_resign", r.ind_resign.to_string());
        kv.set("reward_hire", r.ind_hire.to_string());
        kv.set("reward_fire", r.ind_fire.to_string());
        kv.set("w_group", r.w_group.to_string());
        kv.set("w_balance", r.w_balance.to_string());
        kv.set(
            "level_multipliers",
            r.level_multipliers.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", "),
        );
        kv.set("hire_cost", r.hire_cost.to_string());
        kv.set("beta", r.beta.to_string());
        kv
    }
}
