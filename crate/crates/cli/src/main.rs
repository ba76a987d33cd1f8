//! `lia2c`: seeded training, evaluation and analysis of LIA2C experiments.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use lia2c_core::agents::Variant;
use lia2c_core::env::{PublicObs, TraceWriter};
use lia2c_core::harness::{
    analysis, chance_accuracy, evaluate, export_embeddings, read_embeddings, read_predictions,
    run_all, windowed_accuracy, ExperimentConfig, PolicySnapshot,
};
use lia2c_core::oracle;
use serde_json::json;

#[derive(Parser)]
#[command(name = "lia2c", version, about = "Latent interactive A2C experiments on the Org environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Key-value config file; defaults apply to absent keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's variant.
    #[arg(long)]
    variant: Option<Variant>,
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured seed; one `seed-<n>` directory per seed.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Evaluate a trained seed's final policy without learning.
    Eval {
        /// A `seed-<n>` directory written by `train`.
        #[arg(long)]
        run: PathBuf,
        /// Environment config; defaults to the run's own `config.kv`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        /// Act by argmax instead of sampling.
        #[arg(long)]
        greedy: bool,
        /// Write a JSONL trace of every tick.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the summary as JSON here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Action and observation prediction accuracy per window of a run with
    /// `log_predictions = true`.
    PredictAcc {
        #[arg(long)]
        run: PathBuf,
        /// Episodes per window; defaults to the run's `episodes_per_eval`.
        #[arg(long)]
        window: Option<usize>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Copy the latent embeddings of a run with `log_embeddings = true`,
    /// optionally restricted to an episode range.
    ExportEmbeddings {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        from_episode: Option<usize>,
        #[arg(long)]
        to_episode: Option<usize>,
    },
    /// Run the brute-force oracles on a config and write expected values as
    /// JSON fixtures.
    DeriveOracle {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "oracle")]
        out: PathBuf,
        /// Grid resolution of the symmetric-policy search.
        #[arg(long, default_value_t = 10)]
        resolution: usize,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

fn config_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn runtime_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("loading {}", path.display()))
            .map_err(Failure::Config)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(variant) = args.variant {
        cfg.variant = variant;
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn load_run_config(run: &Path) -> Result<ExperimentConfig, Failure> {
    let path = run.join("config.kv");
    ExperimentConfig::load(&path)
        .with_context(|| format!("loading {}", path.display()))
        .map_err(Failure::Config)
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn train(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    let results = run_all(cfg, out)?;
    let mut failed = 0;
    for r in &results {
        match &r.result {
            Ok(run) => {
                let smoothed = analysis::smoothed_returns(&run.metrics, cfg.episodes_per_eval);
                println!(
                    "seed {}: {} episodes, final smoothed return {:.3}",
                    r.seed,
                    run.metrics.len(),
                    smoothed.last().copied().unwrap_or(0.0)
                );
            }
            Err(e) => {
                failed += 1;
                eprintln!("seed {}: failed: {e}", r.seed);
            }
        }
    }
    println!("wrote {}", out.display());
    if failed > 0 {
        bail!("{failed} of {} seeds failed; see {}", results.len(), out.join("errors.txt").display());
    }
    Ok(())
}

fn eval(
    run: &Path,
    cfg: &ExperimentConfig,
    seed: u64,
    episodes: usize,
    greedy: bool,
    trace: Option<&Path>,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let snapshot = PolicySnapshot::load(&run.join("policy.lfp"))?;
    let fingerprint = snapshot.fingerprint();
    let mut writer = trace.map(TraceWriter::create).transpose()?;
    let summary = evaluate(&snapshot, &cfg.env, episodes, seed, greedy, writer.as_mut())?;
    let value = json!({
        "episodes": summary.episodes,
        "mean_return": summary.mean_return,
        "std_return": summary.std_return,
        "returns": summary.returns,
        "roster_trajectory": summary.roster_trajectory,
        "policy_fingerprint": format!("{fingerprint:016x}"),
    });
    println!("{}", serde_json::to_string_pretty(&value)?);
    if let Some(path) = out {
        write_json(path, &value)?;
    }
    Ok(())
}

fn predict_acc(run: &Path, window: usize, out: Option<&Path>) -> anyhow::Result<()> {
    let path = run.join("predictions.csv");
    if !path.exists() {
        bail!("{} not found; train with `log_predictions = true`", path.display());
    }
    let cfg = ExperimentConfig::load(&run.join("config.kv")).unwrap_or_default();
    let records = read_predictions(&path)?;
    let (chance_action, chance_obs) = chance_accuracy(cfg.env.population_action_count(), PublicObs::COUNT);
    let mut text = String::from("first_episode,action_acc,obs_acc,chance_action,chance_obs\n");
    for (episode, action, obs) in windowed_accuracy(&records, window) {
        text.push_str(&format!("{episode},{action},{obs},{chance_action},{chance_obs}\n"));
    }
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn export(run: &Path, out: &Path, from: Option<usize>, to: Option<usize>) -> anyhow::Result<()> {
    let path = run.join("embeddings.csv");
    if !path.exists() {
        bail!("{} not found; train with `log_embeddings = true`", path.display());
    }
    let records: Vec<_> = read_embeddings(&path)?
        .into_iter()
        .filter(|r| from.is_none_or(|f| r.episode >= f) && to.is_none_or(|t| r.episode <= t))
        .collect();
    export_embeddings(&records, out)?;
    println!("wrote {} rows to {}", records.len(), out.display());
    Ok(())
}

fn derive_oracle(cfg: &ExperimentConfig, out: &Path, resolution: usize) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let env = &cfg.env;
    let mut closed = env.clone();
    closed.open_mode = false;
    let all_group = oracle::symmetric_policy_return(&closed, &oracle::constant_policy(2))?;
    let all_self = oracle::symmetric_policy_return(&closed, &oracle::constant_policy(0))?;
    let uniform = oracle::symmetric_policy_return(&closed, &oracle::UNIFORM_POLICY)?;
    let (policy, optimum) = oracle::optimal_symmetric_return(&closed, resolution)?;
    let closed_value = json!({
        "n_employees": closed.n_employees,
        "horizon": closed.horizon,
        "all_group_return": all_group,
        "all_self_return": all_self,
        "uniform_return": uniform,
        "optimal_return": optimum,
        "optimal_policy": policy,
        "learning_threshold": 0.9 * optimum,
        "grid_resolution": resolution,
    });
    write_json(&out.join("closed_org.json"), &closed_value)?;
    let mut open = env.clone();
    open.open_mode = true;
    let (e_star, table) = oracle::optimal_staffing(&open);
    let staffing = json!({
        "optimal_employees": e_star,
        "returns": table.iter().map(|(e, v)| json!({"employees": e, "manager_return": v})).collect::<Vec<_>>(),
    });
    write_json(&out.join("open_org.json"), &staffing)?;
    println!("{}", serde_json::to_string_pretty(&json!({"closed": closed_value, "open": staffing}))?);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train { config, out } => {
            let cfg = load_config(&config)?;
            train(&cfg, &out).map_err(runtime_err)
        }
        Command::Eval {
            run,
            config,
            seed,
            episodes,
            greedy,
            trace,
            out,
        } => {
            let cfg = match config {
                Some(path) => ExperimentConfig::load(&path)
                    .with_context(|| format!("loading {}", path.display()))
                    .map_err(Failure::Config)?,
                None => load_run_config(&run)?,
            };
            eval(&run, &cfg, seed, episodes, greedy, trace.as_deref(), out.as_deref()).map_err(runtime_err)
        }
        Command::PredictAcc { run, window, out } => {
            let window = match window {
                Some(0) => return Err(config_err(anyhow::anyhow!("--window must be positive"))),
                Some(w) => w,
                None => load_run_config(&run).map(|c| c.episodes_per_eval).unwrap_or(100),
            };
            predict_acc(&run, window, out.as_deref()).map_err(runtime_err)
        }
        Command::ExportEmbeddings {
            run,
            out,
            from_episode,
            to_episode,
        } => export(&run, &out, from_episode, to_episode).map_err(runtime_err),
        Command::DeriveOracle {
            config,
            out,
            resolution,
        } => {
            if resolution == 0 {
                return Err(config_err(anyhow::anyhow!("--resolution must be positive")));
            }
            let cfg = load_config(&config)?;
            derive_oracle(&cfg, &out, resolution).map_err(runtime_err)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
