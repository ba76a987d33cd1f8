use std::path::Path;

use crate::agents::{AgentConfig, ThetaSource, Variant};
use crate::env::{OrgConfig, ENV_KEYS};
use crate::error::{Error, Result};
use crate::kv::KvFile;
use crate::nn::{Activation, NetShape};

/// Everything needed to reproduce a set of training runs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub env: OrgConfig,
    pub variant: Variant,
    /// Environment ticks per seed, rounded up to whole episodes.
    pub total_steps: usize,
    /// Episodes per evaluation and prediction-accuracy window.
    pub episodes_per_eval: usize,
    pub seeds: Vec<u64>,
    pub agent: AgentConfig,
    /// Write policy snapshots every this many episodes (0: final only).
    pub snapshot_every: usize,
    /// Log per-step latent embeddings of `embedding_agent`.
    pub log_embeddings: bool,
    pub embedding_agent: u64,
    /// Log per-step decoder predictions and ground truth of every agent.
    pub log_predictions: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: OrgConfig::default(),
            variant: Variant::Lia2c,
            total_steps: 200_000,
            episodes_per_eval: 100,
            seeds: vec![1, 2, 3, 4, 5],
            agent: AgentConfig::default(),
            snapshot_every: 0,
            log_embeddings: false,
            embedding_agent: 0,
            log_predictions: false,
        }
    }
}

pub const EXPERIMENT_KEYS: &[&str] = &[
    "variant",
    "total_steps",
    "episodes_per_eval",
    "seeds",
    "gamma",
    "entropy_weight",
    "hidden",
    "activation",
    "actor_learning_rate",
    "critic_learning_rate",
    "ed_learning_rate",
    "max_grad_norm",
    "reward_scale",
    "latent_dim",
    "theta_source",
    "snapshot_every",
    "log_embeddings",
    "embedding_agent",
    "log_predictions",
];

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.agent.validate()?;
        if self.total_steps == 0 {
            return Err(invalid("total_steps", "must be positive"));
        }
        if self.episodes_per_eval == 0 {
            return Err(invalid("episodes_per_eval", "must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "need at least one seed"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("seeds", "seeds must be distinct"));
        }
        Ok(())
    }

    /// Episodes each seed runs.
    pub fn episodes(&self) -> usize {
        self.total_steps.div_ceil(self.env.horizon)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&KvFile::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(&KvFile::load(path)?)
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let allowed: Vec<&str> = ENV_KEYS.iter().chain(EXPERIMENT_KEYS).copied().collect();
        kv.reject_unknown(&allowed)?;
        let d = Self::default();
        let a = &d.agent;
        let hidden = kv.get_list::<usize>("hidden")?.unwrap_or_else(|| a.shape.hidden.clone());
        let activation: Activation = kv.get_or("activation", a.shape.activation)?;
        let shape = NetShape { hidden, activation };
        let mut actor_optimizer = a.actor_optimizer;
        actor_optimizer.learning_rate = kv.get_or("actor_learning_rate", actor_optimizer.learning_rate)?;
        let mut critic_optimizer = a.critic_optimizer;
        critic_optimizer.learning_rate = kv.get_or("critic_learning_rate", critic_optimizer.learning_rate)?;
        let mut latent = a.latent.clone();
        latent.optimizer.learning_rate = kv.get_or("ed_learning_rate", latent.optimizer.learning_rate)?;
        latent.latent_dim = kv.get_or("latent_dim", latent.latent_dim)?;
        latent.shape = shape.clone();
        let max_grad_norm = kv.get_or("max_grad_norm", a.max_grad_norm)?;
        latent.max_grad_norm = max_grad_norm;
        let agent = AgentConfig {
            gamma: kv.get_or("gamma", a.gamma)?,
            entropy_weight: kv.get_or("entropy_weight", a.entropy_weight)?,
            shape,
            actor_optimizer,
            critic_optimizer,
            max_grad_norm,
            reward_scale: kv.get_or("reward_scale", a.reward_scale)?,
            latent,
            theta_source: kv.get_or::<ThetaSource>("theta_source", a.theta_source)?,
        };
        let cfg = Self {
            env: OrgConfig::from_kv(kv)?,
            variant: kv.get_or("variant", d.variant)?,
            total_steps: kv.get_or("total_steps", d.total_steps)?,
            episodes_per_eval: kv.get_or("episodes_per_eval", d.episodes_per_eval)?,
            seeds: kv.get_list::<u64>("seeds")?.unwrap_or(d.seeds),
            agent,
            snapshot_every: kv.get_or("snapshot_every", d.snapshot_every)?,
            log_embeddings: kv.get_or("log_embeddings", d.log_embeddings)?,
            embedding_agent: kv.get_or("embedding_agent", d.embedding_agent)?,
            log_predictions: kv.get_or("log_predictions", d.log_predictions)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = self.env.to_kv();
        let a = &self.agent;
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        kv.set("variant", self.variant.name());
        kv.set("total_steps", self.total_steps.to_string());
        kv.set("episodes_per_eval", self.episodes_per_eval.to_string());
        kv.set(
            "seeds",
            self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", "),
        );
        kv.set("gamma", a.gamma.to_string());
        kv.set("entropy_weight", a.entropy_weight.to_string());
        kv.set("hidden", join(&a.shape.hidden));
        kv.set("activation", a.shape.activation.name());
        kv.set("actor_learning_rate", a.actor_optimizer.learning_rate.to_string());
        kv.set("critic_learning_rate", a.critic_optimizer.learning_rate.to_string());
        kv.set("ed_learning_rate", a.latent.optimizer.learning_rate.to_string());
        kv.set("max_grad_norm", a.max_grad_norm.to_string());
        kv.set("reward_scale", a.reward_scale.to_string());
        kv.set("latent_dim", a.latent.latent_dim.to_string());
        kv.set("theta_source", a.theta_source.to_string());
        kv.set("snapshot_every", self.snapshot_every.to_string());
        kv.set("log_embeddings", self.log_embeddings.to_string());
        kv.set("embedding_agent", self.embedding_agent.to_string());
        kv.set("log_predictions", self.log_predictions.to_string());
        kv
    }
}
