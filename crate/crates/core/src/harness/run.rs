use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::metrics::{
    export_embeddings, write_predictions, EmbeddingRecord, MetricsRecord, MetricsWriter, PredictionRecord,
};
use super::policy::PolicySnapshot;
use crate::agents::{sample_index, LearnStats, Learner};
use crate::env::{private_obs, AgentId, Member, OrgAction, OrgConfig, OrgEnv, PublicObs, Role, TraceRecord, TraceWriter};
use crate::error::{Error, Result};
use crate::latent::LatentModel;
use crate::population::Configuration;

/// Named random substreams derived from a master seed.
///
/// Stream `(s, i)` is the ChaCha8 generator keyed by the master seed with
/// stream id `s·2⁴⁰ + i`; `i` is the agent's serial number within the run
/// (0 for run-wide streams). Streams are independent and never share state.
pub mod stream {
    pub const ENV: u64 = 1;
    pub const POLICY: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const LATENT: u64 = 4;
    pub const INIT: u64 = 5;
}

pub fn substream(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((stream << 40) | (index & ((1 << 40) - 1)));
    rng
}

struct Slot {
    learner: Learner,
    role: Role,
    policy_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    latent_rng: ChaCha8Rng,
}

fn new_slot(cfg: &ExperimentConfig, seed: u64, serial: u64, member: Member, others: usize) -> Result<Slot> {
    let open = cfg.env.open_mode;
    let k = cfg.env.population_action_count();
    let action_map = member.role.actions(open).iter().map(|a| a.index()).collect();
    let mut init_rng = substream(seed, stream::INIT, serial);
    let learner = Learner::new(cfg.variant, &cfg.agent, action_map, PublicObs::COUNT, k, others, &mut init_rng)?;
    Ok(Slot {
        learner,
        role: member.role,
        policy_rng: substream(seed, stream::POLICY, serial),
        noise_rng: substream(seed, stream::NOISE, serial),
        latent_rng: substream(seed, stream::LATENT, serial),
    })
}

/// Everything a training run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub seed: u64,
    pub metrics: Vec<MetricsRecord>,
    pub predictions: Vec<PredictionRecord>,
    pub embeddings: Vec<EmbeddingRecord>,
    /// Actors of the agents live at the end of training.
    pub snapshot: PolicySnapshot,
    /// Latent models of the agents live at the end of training.
    pub latent_models: Vec<(AgentId, LatentModel)>,
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn snapshot_of(slots: &BTreeMap<AgentId, Slot>) -> PolicySnapshot {
    PolicySnapshot {
        entries: slots
            .iter()
            .map(|(id, s)| (*id, s.role, s.learner.bundle.actor.clone()))
            .collect(),
    }
}

/// Trains one seed. With `out`, writes `config.kv`, `metrics.csv` (one
/// flushed row per episode), `policy.lfp`, optional periodic snapshots under
/// `snapshots/`, and the optional `predictions.csv` and `embeddings.csv`.
pub fn run_training(cfg: &ExperimentConfig, seed: u64, out: Option<&Path>) -> Result<RunOutput> {
    cfg.validate()?;
    let k = cfg.env.population_action_count();
    let mut env = OrgEnv::new(cfg.env.clone(), substream(seed, stream::ENV, 0))?;
    let mut writer = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let cfg_path = dir.join("config.kv");
            std::fs::write(&cfg_path, cfg.to_kv().render()).map_err(|e| Error::io(&cfg_path, e))?;
            Some(MetricsWriter::create(&dir.join("metrics.csv"))?)
        }
        None => None,
    };
    let mut slots: BTreeMap<AgentId, Slot> = BTreeMap::new();
    let mut serial: u64 = 0;
    let mut step = 0usize;
    let mut metrics = Vec::new();
    let mut predictions = Vec::new();
    let mut embeddings = Vec::new();

    for episode in 0..cfg.episodes() {
        let mut obs = env.reset()?;
        let others = env.state().roster.len() - 1;
        slots.retain(|id, _| env.state().position(*id).is_some());
        for member in env.state().roster.clone() {
            if let std::collections::btree_map::Entry::Vacant(e) = slots.entry(member.id) {
                e.insert(new_slot(cfg, seed, serial, member, others)?);
                serial += 1;
            }
        }
        for slot in slots.values_mut() {
            slot.learner.reset(others);
        }

        let mut returns: BTreeMap<AgentId, f64> = BTreeMap::new();
        let mut manager_return = 0.0;
        let mut learn_stats: Vec<LearnStats> = Vec::new();
        let (mut action_hits, mut obs_hits, mut predictions_made) = (0usize, 0usize, 0usize);

        for _ in 0..cfg.env.horizon {
            let roster = env.state().roster.clone();
            let mut joint = Vec::with_capacity(roster.len());
            for m in &roster {
                let slot = slots.get_mut(&m.id).expect("every live agent has a learner");
                let probs = slot.learner.bundle.policy(obs.index())?;
                let local = sample_index(&probs, &mut slot.policy_rng);
                let action = slot.learner.bundle.action_map()[local];
                joint.push(OrgAction::from_index(action).expect("action map holds valid indices"));
            }
            let outcome = env.step(&joint)?;
            step += 1;
            let next_obs = outcome.public_obs;

            for (i, m) in roster.iter().enumerate() {
                let slot = slots.get_mut(&m.id).expect("every live agent has a learner");
                let private = private_obs(&joint, i, cfg.env.delta, k, &mut slot.noise_rng);
                let reward = outcome.rewards[i];
                let record = slot.learner.observe(
                    obs.index(),
                    joint[i].index(),
                    &private,
                    reward,
                    next_obs.index(),
                    &mut slot.latent_rng,
                )?;
                *returns.entry(m.id).or_insert(0.0) += reward;
                if m.role == Role::Manager {
                    manager_return += reward;
                }
                let truth = Configuration::from_actions(
                    joint.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, a)| a.index()),
                    k,
                );
                let (predicted_action, predicted_obs) = match &record.decoded {
                    Some(d) => (LatentModel::predicted_action(d), Some(LatentModel::predicted_obs(d))),
                    None => {
                        let mean = slot.learner.tracker.mean_action();
                        (argmax(mean.as_slice()), None)
                    }
                };
                let p = PredictionRecord {
                    step,
                    episode,
                    agent: m.id,
                    predicted_action,
                    modal_action: truth.modal_action(),
                    predicted_obs,
                    realized_obs: next_obs.index(),
                };
                predictions_made += 1;
                action_hits += usize::from(p.predicted_action == p.modal_action);
                obs_hits += usize::from(p.predicted_obs == Some(p.realized_obs));
                if cfg.log_predictions {
                    predictions.push(p);
                }
                if cfg.log_embeddings && m.id == cfg.embedding_agent {
                    if let (Some(z), Some(d)) = (&record.latent, &record.decoded) {
                        embeddings.push(EmbeddingRecord {
                            step,
                            episode,
                            z: z.clone(),
                            theta: d.theta_prediction.clone(),
                        });
                    }
                }
            }

            for id in &outcome.departed {
                if let Some(mut slot) = slots.remove(id) {
                    learn_stats.push(slot.learner.learn(&mut slot.latent_rng)?);
                }
            }
            let live = env.state().roster.len();
            for id in &outcome.hired {
                let member = env.state().roster[env.state().position(*id).expect("hire is on the roster")];
                slots.insert(*id, new_slot(cfg, seed, serial, member, live - 1)?);
                serial += 1;
            }
            if !outcome.departed.is_empty() || !outcome.hired.is_empty() {
                for (id, slot) in slots.iter_mut() {
                    if !outcome.hired.contains(id) {
                        slot.learner.resize(live - 1)?;
                    }
                }
            }
            obs = next_obs;
        }

        for slot in slots.values_mut() {
            learn_stats.push(slot.learner.learn(&mut slot.latent_rng)?);
        }
        let actor: Vec<f64> = learn_stats.iter().map(|s| s.actor.loss).collect();
        let critic: Vec<f64> = learn_stats.iter().map(|s| s.critic.loss).collect();
        let ed: Vec<f64> = learn_stats.iter().filter_map(|s| s.ed.map(|e| e.total)).collect();
        let returns: Vec<f64> = returns.into_values().collect();
        let denom = predictions_made.max(1) as f64;
        let record = MetricsRecord {
            step,
            episode,
            seed,
            variant: cfg.variant.name().to_string(),
            mean_return: mean(&returns),
            manager_return,
            actor_loss: mean(&actor),
            critic_loss: mean(&critic),
            ed_loss: mean(&ed),
            action_acc: action_hits as f64 / denom,
            obs_acc: obs_hits as f64 / denom,
            roster_size: env.state().roster.len(),
        };
        if let Some(w) = writer.as_mut() {
            w.write(&record)?;
        }
        metrics.push(record);
        if let Some(dir) = out {
            if cfg.snapshot_every > 0 && (episode + 1) % cfg.snapshot_every == 0 {
                let snap_dir = dir.join("snapshots");
                std::fs::create_dir_all(&snap_dir).map_err(|e| Error::io(&snap_dir, e))?;
                snapshot_of(&slots).save(&snap_dir.join(format!("policy-ep{:06}.lfp", episode + 1)))?;
            }
        }
    }

    let snapshot = snapshot_of(&slots);
    if let Some(dir) = out {
        snapshot.save(&dir.join("policy.lfp"))?;
        if cfg.log_predictions {
            write_predictions(&dir.join("predictions.csv"), &predictions)?;
        }
        if cfg.log_embeddings {
            export_embeddings(&embeddings, &dir.join("embeddings.csv"))?;
        }
    }
    let latent_models = slots
        .iter()
        .filter_map(|(id, s)| s.learner.latent.clone().map(|m| (*id, m)))
        .collect();
    Ok(RunOutput {
        seed,
        metrics,
        predictions,
        embeddings,
        snapshot,
        latent_models,
    })
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

/// Outcome of one seed of [`run_all`].
pub struct SeedResult {
    pub seed: u64,
    pub result: Result<RunOutput>,
}

/// Trains every configured seed, one subdirectory `seed-<n>` per seed under
/// `out`. A failing seed is recorded in `errors.txt` and the others continue.
/// Successful seeds' metrics are concatenated into `out/metrics.csv`.
pub fn run_all(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<SeedResult>> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    // Seeds share nothing, so each trains on its own thread; results keep
    // the configured seed order.
    let results: Vec<SeedResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| {
                let dir = out.join(format!("seed-{seed}"));
                (seed, scope.spawn(move || run_training(cfg, seed, Some(&dir))))
            })
            .collect();
        handles
            .into_iter()
            .map(|(seed, h)| SeedResult {
                seed,
                result: h.join().expect("training thread panicked"),
            })
            .collect()
    });
    let mut errors = String::new();
    for r in &results {
        if let Err(e) = &r.result {
            errors.push_str(&format!("seed {}: {e}\n", r.seed));
        }
    }
    let merged = out.join("metrics.csv");
    let mut writer = MetricsWriter::create(&merged)?;
    for r in &results {
        if let Ok(run) = &r.result {
            for m in &run.metrics {
                writer.write(m)?;
            }
        }
    }
    if !errors.is_empty() {
        let path = out.join("errors.txt");
        std::fs::write(&path, errors).map_err(|e| Error::io(&path, e))?;
    }
    Ok(results)
}

/// Evaluation of a fixed policy.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    pub episodes: usize,
    /// Per-episode mean over participating agents of their return.
    pub returns: Vec<f64>,
    pub mean_return: f64,
    /// Sample standard deviation of `returns` (0 below two episodes).
    pub std_return: f64,
    /// Live agents at the end of each episode.
    pub roster_trajectory: Vec<usize>,
}

fn check_actor(net: &crate::nn::Mlp, role: Role, open: bool) -> Result<()> {
    let want = role.actions(open).len();
    if net.input_len() != PublicObs::COUNT || net.output_len() != want || net.head() != crate::nn::Head::Softmax {
        return Err(Error::IncompatibleSnapshot(format!(
            "{} actor maps {} inputs to {} outputs; the environment needs {} to {} with a softmax head",
            role.name(),
            net.input_len(),
            net.output_len(),
            PublicObs::COUNT,
            want
        )));
    }
    Ok(())
}

/// Runs `episodes` episodes of `snapshot` without learning. Agents act
/// greedily when `greedy`, otherwise they sample. Agents without their own
/// actor (later hires) use the first actor of their role. The snapshot is
/// never modified.
pub fn evaluate(
    snapshot: &PolicySnapshot,
    env_config: &OrgConfig,
    episodes: usize,
    seed: u64,
    greedy: bool,
    mut trace: Option<&mut TraceWriter>,
) -> Result<EvalSummary> {
    let mut env = OrgEnv::new(env_config.clone(), substream(seed, stream::ENV, 0))?;
    let mut rng = substream(seed, stream::POLICY, 0);
    for role in [Role::Manager, Role::Employee] {
        if env.state().roster.iter().any(|m| m.role == role) {
            let net = snapshot
                .actor_for(u64::MAX, role)
                .ok_or_else(|| Error::IncompatibleSnapshot(format!("no {} actor in snapshot", role.name())))?;
            check_actor(net, role, env_config.open_mode)?;
        }
    }
    for (_, role, net) in &snapshot.entries {
        check_actor(net, *role, env_config.open_mode)?;
    }
    let mut returns = Vec::with_capacity(episodes);
    let mut roster_trajectory = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset()?;
        let mut per_agent: BTreeMap<AgentId, f64> = BTreeMap::new();
        for tick in 0..env_config.horizon {
            let roster = env.state().roster.clone();
            let mut joint = Vec::with_capacity(roster.len());
            for m in &roster {
                let net = snapshot
                    .actor_for(m.id, m.role)
                    .ok_or_else(|| Error::IncompatibleSnapshot(format!("no {} actor in snapshot", m.role.name())))?;
                let probs = net.forward(&obs.one_hot())?;
                let local = if greedy { argmax(&probs) } else { sample_index(&probs, &mut rng) };
                joint.push(m.role.actions(env_config.open_mode)[local]);
            }
            let level = env.state().level;
            let outcome = env.step(&joint)?;
            for (m, r) in roster.iter().zip(&outcome.rewards) {
                *per_agent.entry(m.id).or_insert(0.0) += r;
            }
            if let Some(t) = trace.as_deref_mut() {
                t.write(&TraceRecord {
                    tick,
                    level: level.name().to_string(),
                    actions: joint.iter().map(|a| a.name().to_string()).collect(),
                    rewards: outcome.rewards.clone(),
                    roster_size: env.state().roster.len(),
                })?;
            }
            obs = outcome.public_obs;
        }
        returns.push(mean(&per_agent.into_values().collect::<Vec<_>>()));
        roster_trajectory.push(env.state().roster.len());
    }
    let mean_return = mean(&returns);
    let std_return = if returns.len() > 1 {
        let var = returns.iter().map(|r| (r - mean_return).powi(2)).sum::<f64>() / (returns.len() - 1) as f64;
        var.sqrt()
    } else {
        0.0
    };
    Ok(EvalSummary {
        episodes,
        returns,
        mean_return,
        std_return,
        roster_trajectory,
    })
}
