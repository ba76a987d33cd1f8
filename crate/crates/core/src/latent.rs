//! Encoder-decoder over observations that yields a latent embedding `z`, a
//! reconstruction of the next public observation and a prediction of the
//! population's action distribution.

use rand::Rng;

use crate::error::{check_finite, check_len, Error, Result};
use crate::nn::{joint_step, Adam, AdamConfig, Head, Mlp, NetShape};
use crate::population::{ActionDistribution, Configuration, DirichletParams};

/// Floor applied to predicted action probabilities before evaluating a
/// Dirichlet log-density.
pub const THETA_FLOOR: f64 = 1e-6;

/// Hyperparameters of the encoder-decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentConfig {
    pub latent_dim: usize,
    pub shape: NetShape,
    pub optimizer: AdamConfig,
    pub max_grad_norm: f64,
}

impl Default for LatentConfig {
    fn default() -> Self {
        Self {
            latent_dim: 16,
            shape: NetShape::default(),
            optimizer: AdamConfig::default(),
            max_grad_norm: 5.0,
        }
    }
}

/// Inputs of one encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderInput {
    /// Public-observation category index.
    pub public_obs: usize,
    /// Private observation as counts divided by the population size.
    pub private_obs: Vec<f64>,
    /// Own action as a population action index.
    pub self_action: usize,
    /// Current predicted population action distribution.
    pub theta: Vec<f64>,
}

/// One tuple of an encoder-decoder training batch.
#[derive(Clone, Debug, PartialEq)]
pub struct EdSample {
    pub input: EncoderInput,
    /// Public observation realized at the next tick.
    pub next_obs: usize,
    /// Rectified counts `C′` of this tick.
    pub rectified: Configuration,
    /// Dirichlet parameters before absorbing `C′`.
    pub prior: DirichletParams,
}

/// Decoder outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderOutput {
    pub obs_prediction: Vec<f64>,
    pub theta_prediction: Vec<f64>,
}

/// Batch-mean loss and its terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdLoss {
    pub total: f64,
    /// Squared error of the observation reconstruction.
    pub reconstruction: f64,
    /// Negative Dirichlet log-density of the predicted distribution.
    pub model_nll: f64,
    /// KL term; reported even when excluded from `total`.
    pub kl: f64,
}

/// Encoder `f_e` with observation head `f_d^o` and distribution head `f_d^θ`.
#[derive(Clone, Debug)]
pub struct LatentModel {
    pub encoder: Mlp,
    pub obs_head: Mlp,
    pub theta_head: Mlp,
    optimizers: [Adam; 3],
    obs_count: usize,
    action_count: usize,
    max_grad_norm: f64,
}

fn one_hot(index: usize, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[index] = 1.0;
    v
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Clamps `theta` to [`THETA_FLOOR`] and renormalizes.
pub fn floored(theta: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = theta.iter().map(|t| t.max(THETA_FLOOR)).collect();
    let sum: f64 = clamped.iter().sum();
    clamped.into_iter().map(|t| t / sum).collect()
}

/// Draws a configuration of `population` agents from the multinomial
/// distribution with probabilities `theta`.
pub fn sample_configuration<R: Rng + ?Sized>(theta: &[f64], population: usize, rng: &mut R) -> Configuration {
    let mut counts = vec![0; theta.len()];
    for _ in 0..population {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = theta.len() - 1;
        for (i, t) in theta.iter().enumerate() {
            acc += t;
            if u < acc {
                pick = i;
                break;
            }
        }
        counts[pick] += 1;
    }
    Configuration::new(counts)
}

impl LatentModel {
    /// Randomly initialized model for `obs_count` public observation
    /// categories and `action_count` population actions.
    pub fn new<R: Rng + ?Sized>(config: &LatentConfig, obs_count: usize, action_count: usize, rng: &mut R) -> Result<Self> {
        let act = config.shape.activation;
        let enc_in = obs_count + 3 * action_count;
        let encoder = Mlp::init(&config.shape.layer_sizes(enc_in, config.latent_dim), act, Head::Linear, rng)?;
        let obs_head = Mlp::init(&config.shape.layer_sizes(config.latent_dim, obs_count), act, Head::Linear, rng)?;
        let theta_head = Mlp::init(&config.shape.layer_sizes(config.latent_dim, action_count), act, Head::Softmax, rng)?;
        Self::from_parts(encoder, obs_head, theta_head, config)
    }

    /// Assembles a model from existing networks, checking that their shapes fit.
    pub fn from_parts(encoder: Mlp, obs_head: Mlp, theta_head: Mlp, config: &LatentConfig) -> Result<Self> {
        let obs_count = obs_head.output_len();
        let action_count = theta_head.output_len();
        check_len("encoder input", obs_count + 3 * action_count, encoder.input_len())?;
        check_len("observation head input", encoder.output_len(), obs_head.input_len())?;
        check_len("distribution head input", encoder.output_len(), theta_head.input_len())?;
        if theta_head.head() != Head::Softmax {
            return Err(Error::InvalidParameter {
                name: "theta_head",
                reason: "needs a softmax head".into(),
            });
        }
        let optimizers = [
            Adam::new(encoder.params().len(), config.optimizer),
            Adam::new(obs_head.params().len(), config.optimizer),
            Adam::new(theta_head.params().len(), config.optimizer),
        ];
        Ok(Self {
            encoder,
            obs_head,
            theta_head,
            optimizers,
            obs_count,
            action_count,
            max_grad_norm: config.max_grad_norm,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.output_len()
    }

    pub fn obs_count(&self) -> usize {
        self.obs_count
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    /// Fingerprint over all three networks.
    pub fn fingerprint(&self) -> u64 {
        let parts = [self.encoder.fingerprint(), self.obs_head.fingerprint(), self.theta_head.fingerprint()];
        parts.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, p| (h ^ p).wrapping_mul(0x0000_0100_0000_01b3))
    }

    /// Number of trainable parameters.
    pub fn param_len(&self) -> usize {
        self.encoder.params().len() + self.obs_head.params().len() + self.theta_head.params().len()
    }

    /// All parameters concatenated: encoder, observation head, distribution head.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_len());
        out.extend_from_slice(self.encoder.params());
        out.extend_from_slice(self.obs_head.params());
        out.extend_from_slice(self.theta_head.params());
        out
    }

    /// Inverse of [`LatentModel::params_flat`].
    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        check_len("latent parameters", self.param_len(), params.len())?;
        check_finite("latent parameters", params)?;
        let (a, rest) = params.split_at(self.encoder.params().len());
        let (b, c) = rest.split_at(self.obs_head.params().len());
        self.encoder.params_mut().copy_from_slice(a);
        self.obs_head.params_mut().copy_from_slice(b);
        self.theta_head.params_mut().copy_from_slice(c);
        Ok(())
    }

    /// Flat encoder input vector: public one-hot, private fractions, own
    /// action one-hot, current distribution.
    pub fn encoder_vector(&self, input: &EncoderInput) -> Result<Vec<f64>> {
        let k = self.action_count;
        if input.public_obs >= self.obs_count {
            return Err(Error::DimensionMismatch {
                context: "public observation index",
                expected: self.obs_count,
                actual: input.public_obs,
            });
        }
        if input.self_action >= k {
            return Err(Error::DimensionMismatch {
                context: "own action index",
                expected: k,
                actual: input.self_action,
            });
        }
        check_len("private observation", k, input.private_obs.len())?;
        check_len("encoder theta", k, input.theta.len())?;
        let mut x = one_hot(input.public_obs, self.obs_count);
        x.extend_from_slice(&input.private_obs);
        x.extend(one_hot(input.self_action, k));
        x.extend_from_slice(&input.theta);
        Ok(x)
    }

    pub fn encode(&self, input: &EncoderInput) -> Result<Vec<f64>> {
        self.encoder.forward(&self.encoder_vector(input)?)
    }

    pub fn decode(&self, z: &[f64]) -> Result<DecoderOutput> {
        Ok(DecoderOutput {
            obs_prediction: self.obs_head.forward(z)?,
            theta_prediction: self.theta_head.forward(z)?,
        })
    }

    /// Next population distribution: the decoder's prediction itself when
    /// `deterministic`, otherwise a draw from `Dir(scale · f_d^θ(z))` with the
    /// prediction floored to keep every concentration positive.
    pub fn predict_next_population<R: Rng + ?Sized>(
        &self,
        z: &[f64],
        scale: f64,
        deterministic: bool,
        rng: &mut R,
    ) -> Result<ActionDistribution> {
        let theta = self.theta_head.forward(z)?;
        if deterministic {
            return ActionDistribution::new(theta);
        }
        sample_population(&theta, scale, rng)
    }
}

/// Draw from `Dir(scale · θ)` with `θ` floored to keep every concentration
/// positive.
pub fn sample_population<R: Rng + ?Sized>(theta: &[f64], scale: f64, rng: &mut R) -> Result<ActionDistribution> {
    {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter {
                name: "scale",
                reason: format!("{scale} must be finite and > 0"),
            });
        }
        let alpha = floored(theta).into_iter().map(|t| t * scale).collect();
        Ok(DirichletParams::new(alpha)?.sample(rng))
    }
}

impl LatentModel {

    /// Draws the KL term's configuration `C_t ~ Mult(|C′_t|, f_d^θ(z_t))` for
    /// every tuple.
    pub fn sample_kl_counts<R: Rng + ?Sized>(&self, batch: &[EdSample], rng: &mut R) -> Result<Vec<Configuration>> {
        batch
            .iter()
            .map(|s| {
                let z = self.encode(&s.input)?;
                let theta = self.theta_head.forward(&z)?;
                Ok(sample_configuration(&theta, s.rectified.population_size(), rng))
            })
            .collect()
    }

    /// Loss with sampled configurations supplied; see [`LatentModel::ed_loss`].
    pub fn ed_loss_with_samples(&self, batch: &[EdSample], samples: &[Configuration], include_kl: bool) -> Result<EdLoss> {
        Ok(self.loss_and_grad(batch, samples, include_kl, false)?.0)
    }

    /// Loss and its exact gradient in [`LatentModel::params_flat`] layout,
    /// with the sampled configurations held fixed.
    pub fn ed_loss_grad(&self, batch: &[EdSample], samples: &[Configuration], include_kl: bool) -> Result<(EdLoss, Vec<f64>)> {
        let (loss, grads) = self.loss_and_grad(batch, samples, include_kl, true)?;
        Ok((loss, grads.concat()))
    }

    /// `(1/H) Σ_t ‖f_d^o(z_t) − o_{t+1}‖² − ln Dir(α_t + C′_t; f_d^θ(z_t)) + KL_t`
    /// where `KL_t = KL(Dir(C_t + 1) ‖ Dir(α_t + C′_t))` with `C_t` sampled
    /// from the predicted distribution. `KL_t` enters only if `include_kl`.
    pub fn ed_loss<R: Rng + ?Sized>(&self, batch: &[EdSample], include_kl: bool, rng: &mut R) -> Result<EdLoss> {
        let samples = self.sample_kl_counts(batch, rng)?;
        self.ed_loss_with_samples(batch, &samples, include_kl)
    }

    /// One joint optimizer step on all three networks. Returns the loss
    /// before the step.
    pub fn ed_train_step<R: Rng + ?Sized>(&mut self, batch: &[EdSample], include_kl: bool, rng: &mut R) -> Result<EdLoss> {
        let samples = self.sample_kl_counts(batch, rng)?;
        let (loss, mut grads) = self.loss_and_grad(batch, &samples, include_kl, true)?;
        if !loss.total.is_finite() {
            return Err(Error::NonFinite {
                context: "encoder-decoder loss",
                index: 0,
            });
        }
        joint_step(
            &mut [&mut self.encoder, &mut self.obs_head, &mut self.theta_head],
            &mut self.optimizers,
            &mut grads,
            self.max_grad_norm,
        )?;
        Ok(loss)
    }

    fn loss_and_grad(
        &self,
        batch: &[EdSample],
        samples: &[Configuration],
        include_kl: bool,
        want_grad: bool,
    ) -> Result<(EdLoss, Vec<Vec<f64>>)> {
        check_len("sampled configurations", batch.len(), samples.len())?;
        if batch.is_empty() {
            return Err(Error::InvalidParameter {
                name: "batch",
                reason: "needs at least one tuple".into(),
            });
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grads = if want_grad {
            vec![
                vec![0.0; self.encoder.params().len()],
                vec![0.0; self.obs_head.params().len()],
                vec![0.0; self.theta_head.params().len()],
            ]
        } else {
            Vec::new()
        };
        let mut loss = EdLoss::default();
        for (s, sampled) in batch.iter().zip(samples) {
            if s.next_obs >= self.obs_count {
                return Err(Error::DimensionMismatch {
                    context: "next public observation index",
                    expected: self.obs_count,
                    actual: s.next_obs,
                });
            }
            let enc_tape = self.encoder.forward_tape(&self.encoder_vector(&s.input)?)?;
            let z = enc_tape.output();
            let obs_tape = self.obs_head.forward_tape(z)?;
            let theta_tape = self.theta_head.forward_tape(z)?;

            let target = one_hot(s.next_obs, self.obs_count);
            let diff: Vec<f64> = obs_tape.output().iter().zip(&target).map(|(p, t)| p - t).collect();
            let recon: f64 = diff.iter().map(|d| d * d).sum();

            let posterior = s.prior.posterior(&s.rectified)?;
            let theta = theta_tape.output();
            let tilde = floored(theta);
            let nll = -posterior.ln_density(&tilde)?;
            let kl = DirichletParams::smoothed_counts(sampled).kl(&posterior)?;

            loss.reconstruction += scale * recon;
            loss.model_nll += scale * nll;
            loss.kl += scale * kl;

            if !want_grad {
                continue;
            }
            let d_obs: Vec<f64> = diff.iter().map(|d| 2.0 * d * scale).collect();
            // d(−Σ (β−1) ln θ̃)/dθ̃ then through renormalization and the clamp.
            let sum_u: f64 = theta.iter().map(|t| t.max(THETA_FLOOR)).sum();
            let g_tilde: Vec<f64> = posterior
                .alpha()
                .iter()
                .zip(&tilde)
                .map(|(b, t)| -(b - 1.0) / t)
                .collect();
            let dot: f64 = g_tilde.iter().zip(&tilde).map(|(g, t)| g * t).sum();
            let d_theta: Vec<f64> = theta
                .iter()
                .zip(&g_tilde)
                .map(|(t, g)| if *t > THETA_FLOOR { scale * (g - dot) / sum_u } else { 0.0 })
                .collect();
            let (ge, rest) = grads.split_at_mut(1);
            let (go, gt) = rest.split_at_mut(1);
            let mut dz = self.obs_head.backward(&obs_tape, &d_obs, &mut go[0])?;
            let dz_theta = self.theta_head.backward(&theta_tape, &d_theta, &mut gt[0])?;
            dz.iter_mut().zip(&dz_theta).for_each(|(a, b)| *a += b);
            self.encoder.backward(&enc_tape, &dz, &mut ge[0])?;
        }
        loss.total = loss.reconstruction + loss.model_nll + if include_kl { loss.kl } else { 0.0 };
        Ok((loss, grads))
    }

    /// Index of the most probable predicted action, lowest index on ties.
    pub fn predicted_action(output: &DecoderOutput) -> usize {
        argmax(&output.theta_prediction)
    }

    /// Index of the largest observation score, lowest index on ties.
    pub fn predicted_obs(output: &DecoderOutput) -> usize {
        argmax(&output.obs_prediction)
    }
}
