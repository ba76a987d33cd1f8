//! Decentralized actor-critic learners.
//!
//! Every agent owns an actor over its own actions conditioned on the public
//! observation, a scalar critic, and (for the latent variants) its own
//! encoder-decoder. The critic of LIA2C sees `(z, o, a_0, ω/N)`; the critic of
//! IA2C++DM sees `(o, a_0, C/N)` with `C` a configuration sampled from the
//! Dirichlet-multinomial population model.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::latent::{sample_configuration, sample_population, DecoderOutput, EdLoss, EdSample, EncoderInput, LatentConfig, LatentModel};
use crate::nn::{joint_step, Adam, AdamConfig, Head, Mlp, NetShape};
use crate::population::{Configuration, PopulationTracker, PrivateObservation};

/// Learner family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    Lia2c,
    Lia2cWokld,
    Ia2cdm,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Lia2c, Variant::Lia2cWokld, Variant::Ia2cdm];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Lia2c => "lia2c",
            Variant::Lia2cWokld => "lia2c-wokld",
            Variant::Ia2cdm => "ia2cdm",
        }
    }

    pub fn uses_latent(self) -> bool {
        self != Variant::Ia2cdm
    }

    pub fn include_kl(self) -> bool {
        self == Variant::Lia2c
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant `{s}` (expected lia2c, lia2c-wokld or ia2cdm)"))
    }
}

/// Source of the population distribution fed back into the encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaSource {
    /// The decoder's previous deterministic prediction.
    Decoder,
    /// The mean of the agent's Dirichlet posterior.
    Conjugate,
}

impl FromStr for ThetaSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "decoder" => Ok(ThetaSource::Decoder),
            "conjugate" => Ok(ThetaSource::Conjugate),
            _ => Err(format!("unknown theta source `{s}` (expected decoder or conjugate)")),
        }
    }
}

impl fmt::Display for ThetaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThetaSource::Decoder => "decoder",
            ThetaSource::Conjugate => "conjugate",
        })
    }
}

/// Learner hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub entropy_weight: f64,
    pub shape: NetShape,
    pub actor_optimizer: AdamConfig,
    pub critic_optimizer: AdamConfig,
    pub max_grad_norm: f64,
    /// Multiplies rewards before they reach the critic and the advantages.
    pub reward_scale: f64,
    pub latent: LatentConfig,
    pub theta_source: ThetaSource,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            // Any positive bonus measurably lowered final returns in sweeps.
            entropy_weight: 0.0,
            shape: NetShape::default(),
            actor_optimizer: AdamConfig::default(),
            // A faster critic keeps the bootstrap target tracking the
            // improving policy at gamma 0.99.
            critic_optimizer: AdamConfig {
                learning_rate: 3e-3,
                ..AdamConfig::default()
            },
            max_grad_norm: 5.0,
            // Keeps critic targets O(10) at gamma 0.99 so the norm clip
            // does not freeze the critic.
            reward_scale: 0.1,
            latent: LatentConfig::default(),
            theta_source: ThetaSource::Decoder,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("{} is outside [0, 1)", self.gamma),
            });
        }
        if !(self.entropy_weight >= 0.0) || !(self.reward_scale > 0.0) || !(self.max_grad_norm > 0.0) {
            return Err(Error::InvalidParameter {
                name: "learner",
                reason: "entropy_weight must be >= 0, reward_scale and max_grad_norm > 0".into(),
            });
        }
        if self.shape.hidden.contains(&0) || self.latent.latent_dim == 0 {
            return Err(Error::InvalidParameter {
                name: "hidden",
                reason: "layer widths must be positive".into(),
            });
        }
        Ok(())
    }
}

/// One step of one agent's experience.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub public_obs: usize,
    pub next_public_obs: usize,
    /// Private observation as counts over the population size.
    pub private_obs: Vec<f64>,
    pub next_private_obs: Vec<f64>,
    /// Population action index of the agent's own action.
    pub self_action: usize,
    pub next_self_action: usize,
    pub reward: f64,
    pub latent: Option<Vec<f64>>,
    pub next_latent: Option<Vec<f64>>,
    /// Population distribution predicted for the next tick.
    pub population_prediction: Vec<f64>,
    /// Sampled configuration fractions (baseline critic only).
    pub configuration_prediction: Option<Vec<f64>>,
    pub next_configuration_prediction: Option<Vec<f64>>,
    pub done: bool,
}

/// Statistics of one learner update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub loss: f64,
    pub grad_norm: f64,
}

fn one_hot(index: usize, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[index] = 1.0;
    v
}

/// Critic feature vector for one step.
#[allow(clippy::too_many_arguments)]
pub fn critic_features(
    variant: Variant,
    obs_count: usize,
    action_count: usize,
    latent: Option<&[f64]>,
    public_obs: usize,
    self_action: usize,
    private_obs: &[f64],
    configuration: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let mut x = Vec::new();
    match variant {
        Variant::Lia2c | Variant::Lia2cWokld => {
            let z = latent.ok_or(Error::InvalidParameter {
                name: "latent",
                reason: "latent critic input missing".into(),
            })?;
            x.extend_from_slice(z);
            x.extend(one_hot(public_obs, obs_count));
            x.extend(one_hot(self_action, action_count));
            check_len("private observation", action_count, private_obs.len())?;
            x.extend_from_slice(private_obs);
        }
        Variant::Ia2cdm => {
            let c = configuration.ok_or(Error::InvalidParameter {
                name: "configuration_prediction",
                reason: "predicted configuration missing".into(),
            })?;
            check_len("predicted configuration", action_count, c.len())?;
            x.extend(one_hot(public_obs, obs_count));
            x.extend(one_hot(self_action, action_count));
            x.extend_from_slice(c);
        }
    }
    Ok(x)
}

/// One agent's actor, critic and optimizer state.
#[derive(Clone, Debug)]
pub struct AgentBundle {
    pub actor: Mlp,
    pub critic: Mlp,
    pub variant: Variant,
    pub gamma: f64,
    pub entropy_weight: f64,
    pub reward_scale: f64,
    /// Population action index of each actor output.
    action_map: Vec<usize>,
    obs_count: usize,
    action_count: usize,
    actor_opt: Adam,
    critic_opt: Adam,
    max_grad_norm: f64,
}

impl AgentBundle {
    /// Fresh learner for an agent whose actions are `action_map` (population
    /// action indices), observing `obs_count` public categories in a
    /// population with `action_count` actions.
    pub fn new<R: Rng + ?Sized>(
        variant: Variant,
        config: &AgentConfig,
        action_map: Vec<usize>,
        obs_count: usize,
        action_count: usize,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        if action_map.is_empty() || action_map.iter().any(|&a| a >= action_count) {
            return Err(Error::InvalidParameter {
                name: "action_map",
                reason: format!("{action_map:?} does not index {action_count} population actions"),
            });
        }
        let act = config.shape.activation;
        let actor = Mlp::init(&config.shape.layer_sizes(obs_count, action_map.len()), act, Head::Softmax, rng)?;
        let critic_in = match variant {
            Variant::Ia2cdm => obs_count + 2 * action_count,
            _ => config.latent.latent_dim + obs_count + 2 * action_count,
        };
        let critic = Mlp::init(&config.shape.layer_sizes(critic_in, 1), act, Head::Linear, rng)?;
        Ok(Self {
            actor_opt: Adam::new(actor.params().len(), config.actor_optimizer),
            critic_opt: Adam::new(critic.params().len(), config.critic_optimizer),
            actor,
            critic,
            variant,
            gamma: config.gamma,
            entropy_weight: config.entropy_weight,
            reward_scale: config.reward_scale,
            action_map,
            obs_count,
            action_count,
            max_grad_norm: config.max_grad_norm,
        })
    }

    pub fn action_map(&self) -> &[usize] {
        &self.action_map
    }

    pub fn obs_count(&self) -> usize {
        self.obs_count
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    /// `π(· | o)` over the agent's own actions.
    pub fn policy(&self, public_obs: usize) -> Result<Vec<f64>> {
        self.actor.forward(&one_hot(public_obs, self.obs_count))
    }

    /// Samples a local action index from `π(· | o)`.
    pub fn select_action<R: Rng + ?Sized>(&self, public_obs: usize, rng: &mut R) -> Result<usize> {
        Ok(sample_index(&self.policy(public_obs)?, rng))
    }

    /// Local index of a population action, if the agent can take it.
    pub fn local_action(&self, population_action: usize) -> Option<usize> {
        self.action_map.iter().position(|&a| a == population_action)
    }

    fn features(&self, t: &Transition, next: bool) -> Result<Vec<f64>> {
        if next {
            critic_features(
                self.variant,
                self.obs_count,
                self.action_count,
                t.next_latent.as_deref(),
                t.next_public_obs,
                t.next_self_action,
                &t.next_private_obs,
                t.next_configuration_prediction.as_deref(),
            )
        } else {
            critic_features(
                self.variant,
                self.obs_count,
                self.action_count,
                t.latent.as_deref(),
                t.public_obs,
                t.self_action,
                &t.private_obs,
                t.configuration_prediction.as_deref(),
            )
        }
    }

    /// Scalar critic value of a feature vector.
    pub fn q(&self, features: &[f64]) -> Result<f64> {
        Ok(self.critic.forward(features)?[0])
    }

    /// TD targets `r + γ Q(next)` (just `r` at terminal steps) with rewards scaled.
    fn targets(&self, batch: &[Transition]) -> Result<Vec<f64>> {
        batch
            .iter()
            .map(|t| {
                let r = self.reward_scale * t.reward;
                if t.done {
                    Ok(r)
                } else {
                    Ok(r + self.gamma * self.q(&self.features(t, true)?)?)
                }
            })
            .collect()
    }

    fn advantages(&self, batch: &[Transition]) -> Result<Vec<f64>> {
        let targets = self.targets(batch)?;
        batch
            .iter()
            .zip(targets)
            .map(|(t, y)| Ok(y - self.q(&self.features(t, false)?)?))
            .collect()
    }

    /// `A = r + γ Q(z′, o″, a_0′, ω″) − Q(z, o′, a_0, ω′)` per transition.
    pub fn lia2c_advantage(&self, batch: &[Transition]) -> Result<Vec<f64>> {
        if !self.variant.uses_latent() {
            return Err(Error::InvalidParameter {
                name: "variant",
                reason: "latent advantage requested from a configuration critic".into(),
            });
        }
        self.advantages(batch)
    }

    /// `A = r + γ Q(o″, a_0′, C″) − Q(o′, a_0, C)` per transition.
    pub fn ia2cdm_advantage(&self, batch: &[Transition]) -> Result<Vec<f64>> {
        if self.variant != Variant::Ia2cdm {
            return Err(Error::InvalidParameter {
                name: "variant",
                reason: "configuration advantage requested from a latent critic".into(),
            });
        }
        self.advantages(batch)
    }

    /// Advantage of the bundle's own variant.
    pub fn advantage(&self, batch: &[Transition]) -> Result<Vec<f64>> {
        self.advantages(batch)
    }

    /// Actor objective `−avg[ln π(a_0|o) A] − w_H avg[H(π(·|o))]` and its
    /// gradient with the advantages held constant.
    pub fn actor_loss_grad(&self, batch: &[Transition], advantages: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_len("advantages", batch.len(), advantages.len())?;
        let mut grad = vec![0.0; self.actor.params().len()];
        if batch.is_empty() {
            return Ok((0.0, grad));
        }
        let n = batch.len() as f64;
        let mut loss = 0.0;
        for (t, &adv) in batch.iter().zip(advantages) {
            let a = self.local_action(t.self_action).ok_or(Error::InvalidParameter {
                name: "self_action",
                reason: format!("population action {} is not available to this agent", t.self_action),
            })?;
            let tape = self.actor.forward_tape(&one_hot(t.public_obs, self.obs_count))?;
            let p = tape.output();
            let logp: Vec<f64> = p.iter().map(|q| q.max(f64::MIN_POSITIVE).ln()).collect();
            let entropy: f64 = -p.iter().zip(&logp).map(|(q, l)| q * l).sum::<f64>();
            loss += (-logp[a] * adv - self.entropy_weight * entropy) / n;
            let upstream: Vec<f64> = p
                .iter()
                .zip(&logp)
                .enumerate()
                .map(|(j, (q, l))| {
                    let pg = -adv * (f64::from(u8::from(j == a)) - q);
                    let ent = self.entropy_weight * q * (l + entropy);
                    (pg + ent) / n
                })
                .collect();
            self.actor.backward_logits(&tape, &upstream, &mut grad)?;
        }
        Ok((loss, grad))
    }

    /// One ascent step along `avg[∇ ln π(a_0|o) A]` plus the entropy bonus.
    pub fn actor_update(&mut self, batch: &[Transition], advantages: &[f64]) -> Result<UpdateStats> {
        let (loss, grad) = self.actor_loss_grad(batch, advantages)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                context: "actor loss",
                index: 0,
            });
        }
        let mut grads = [grad];
        let grad_norm = joint_step(
            &mut [&mut self.actor],
            std::slice::from_mut(&mut self.actor_opt),
            &mut grads,
            self.max_grad_norm,
        )?;
        Ok(UpdateStats { loss, grad_norm })
    }

    /// Mean squared TD error against `targets` and its gradient.
    pub fn critic_loss_grad(&self, batch: &[Transition], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_len("critic targets", batch.len(), targets.len())?;
        let mut grad = vec![0.0; self.critic.params().len()];
        if batch.is_empty() {
            return Ok((0.0, grad));
        }
        let n = batch.len() as f64;
        let mut loss = 0.0;
        for (t, &y) in batch.iter().zip(targets) {
            let tape = self.critic.forward_tape(&self.features(t, false)?)?;
            let err = tape.output()[0] - y;
            loss += err * err / n;
            self.critic.backward(&tape, &[2.0 * err / n], &mut grad)?;
        }
        Ok((loss, grad))
    }

    /// Bootstrap targets computed from the critic as it is now.
    pub fn critic_targets(&self, batch: &[Transition]) -> Result<Vec<f64>> {
        self.targets(batch)
    }

    /// One descent step on the TD(0) regression with frozen targets.
    pub fn critic_update(&mut self, batch: &[Transition]) -> Result<UpdateStats> {
        let targets = self.targets(batch)?;
        self.critic_step(batch, &targets)
    }

    /// One descent step towards precomputed targets.
    pub fn critic_step(&mut self, batch: &[Transition], targets: &[f64]) -> Result<UpdateStats> {
        let (loss, grad) = self.critic_loss_grad(batch, targets)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                context: "critic loss",
                index: 0,
            });
        }
        let mut grads = [grad];
        let grad_norm = joint_step(
            &mut [&mut self.critic],
            std::slice::from_mut(&mut self.critic_opt),
            &mut grads,
            self.max_grad_norm,
        )?;
        Ok(UpdateStats { loss, grad_norm })
    }
}

/// Samples an index from a categorical distribution by inversion.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Bookkeeping of one agent step, kept for logging.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub rectified: Configuration,
    pub latent: Option<Vec<f64>>,
    pub decoded: Option<DecoderOutput>,
    /// Population distribution the agent predicts for the next tick.
    pub population_prediction: Vec<f64>,
}

/// Losses of one end-of-episode update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LearnStats {
    pub actor: UpdateStats,
    pub critic: UpdateStats,
    pub ed: Option<EdLoss>,
}

/// A live agent: its learners, population tracker and current episode's
/// experience.
#[derive(Clone, Debug)]
pub struct Learner {
    pub bundle: AgentBundle,
    pub latent: Option<LatentModel>,
    pub tracker: PopulationTracker,
    theta_source: ThetaSource,
    theta: Vec<f64>,
    trajectory: Vec<Transition>,
    ed_batch: Vec<EdSample>,
}

impl Learner {
    pub fn new<R: Rng + ?Sized>(
        variant: Variant,
        config: &AgentConfig,
        action_map: Vec<usize>,
        obs_count: usize,
        action_count: usize,
        others: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let bundle = AgentBundle::new(variant, config, action_map, obs_count, action_count, rng)?;
        let latent = if variant.uses_latent() {
            Some(LatentModel::new(&config.latent, obs_count, action_count, rng)?)
        } else {
            None
        };
        Ok(Self {
            bundle,
            latent,
            tracker: PopulationTracker::new(action_count, others),
            theta_source: config.theta_source,
            theta: vec![1.0 / action_count as f64; action_count],
            trajectory: Vec::new(),
            ed_batch: Vec::new(),
        })
    }

    /// Starts a new episode: uniform prior and uniform encoder distribution.
    pub fn reset(&mut self, others: usize) {
        self.tracker.reset(others);
        let k = self.bundle.action_count;
        self.theta = vec![1.0 / k as f64; k];
        self.trajectory.clear();
        self.ed_batch.clear();
    }

    pub fn trajectory(&self) -> &[Transition] {
        &self.trajectory
    }

    /// Adjusts the tracker to a changed number of other agents.
    pub fn resize(&mut self, others: usize) -> Result<()> {
        self.tracker.resize(others)
    }

    /// Records the outcome of one tick: rectifies and absorbs the private
    /// observation, runs the encoder-decoder (latent variants) or samples a
    /// configuration from the posterior (baseline), and stores the transition.
    ///
    /// `next_public_obs` is the observation revealed after the tick.
    #[allow(clippy::too_many_arguments)]
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        public_obs: usize,
        self_action: usize,
        private: &PrivateObservation,
        reward: f64,
        next_public_obs: usize,
        rng: &mut R,
    ) -> Result<StepRecord> {
        let prior = self.tracker.alpha().clone();
        let rectified = self.tracker.observe(private)?;
        let private_obs = private.observed.fractions();
        let posterior = self.tracker.alpha().clone();
        let mut record = StepRecord {
            rectified: rectified.clone(),
            latent: None,
            decoded: None,
            population_prediction: Vec::new(),
        };
        let mut transition = Transition {
            public_obs,
            next_public_obs,
            private_obs: private_obs.clone(),
            next_private_obs: vec![0.0; private_obs.len()],
            self_action,
            next_self_action: self_action,
            reward,
            latent: None,
            next_latent: None,
            population_prediction: Vec::new(),
            configuration_prediction: None,
            next_configuration_prediction: None,
            done: false,
        };
        match &self.latent {
            Some(model) => {
                let input = EncoderInput {
                    public_obs,
                    private_obs,
                    self_action,
                    theta: self.theta.clone(),
                };
                let z = model.encode(&input)?;
                let decoded = model.decode(&z)?;
                let sampled = sample_population(&decoded.theta_prediction, posterior.total(), rng)?;
                self.theta = match self.theta_source {
                    ThetaSource::Decoder => decoded.theta_prediction.clone(),
                    ThetaSource::Conjugate => posterior.mean().into_inner(),
                };
                self.ed_batch.push(EdSample {
                    input,
                    next_obs: next_public_obs,
                    rectified,
                    prior,
                });
                transition.latent = Some(z.clone());
                transition.population_prediction = sampled.into_inner();
                record.latent = Some(z);
                record.decoded = Some(decoded);
            }
            None => {
                let theta = posterior.sample(rng).into_inner();
                let others = self.tracker.others();
                let config = sample_configuration(&theta, others, rng);
                transition.configuration_prediction = Some(config.fractions());
                transition.population_prediction = theta;
            }
        }
        record.population_prediction = transition.population_prediction.clone();
        if let Some(prev) = self.trajectory.last_mut() {
            prev.next_private_obs = transition.private_obs.clone();
            prev.next_self_action = transition.self_action;
            prev.next_latent = transition.latent.clone();
            prev.next_configuration_prediction = transition.configuration_prediction.clone();
        }
        self.trajectory.push(transition);
        Ok(record)
    }

    /// Marks the last stored transition terminal.
    pub fn finish_episode(&mut self) {
        if let Some(last) = self.trajectory.last_mut() {
            last.done = true;
        }
    }

    /// End-of-episode learning: advantages from the current critic, one actor
    /// step, one critic step, one encoder-decoder step. Clears the stored
    /// experience.
    pub fn learn<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<LearnStats> {
        if self.trajectory.is_empty() {
            return Ok(LearnStats::default());
        }
        self.finish_episode();
        let batch = std::mem::take(&mut self.trajectory);
        let targets = self.bundle.critic_targets(&batch)?;
        let advantages = batch
            .iter()
            .zip(&targets)
            .map(|(t, y)| Ok(y - self.bundle.q(&self.bundle.features(t, false)?)?))
            .collect::<Result<Vec<f64>>>()?;
        let actor = self.bundle.actor_update(&batch, &advantages)?;
        let critic = self.bundle.critic_step(&batch, &targets)?;
        let include_kl = self.bundle.variant.include_kl();
        let ed = match &mut self.latent {
            Some(model) if !self.ed_batch.is_empty() => Some(model.ed_train_step(&self.ed_batch, include_kl, rng)?),
            _ => None,
        };
        self.ed_batch.clear();
        Ok(LearnStats { actor, critic, ed })
    }
}
