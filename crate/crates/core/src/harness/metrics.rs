use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Column names of the metrics CSV.
pub const METRICS_HEADER: &str =
    "step,episode,seed,variant,mean_return,manager_return,actor_loss,critic_loss,ed_loss,action_acc,obs_acc,roster_size";

/// Per-episode training metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    /// Environment ticks completed so far in this run.
    pub step: usize,
    pub episode: usize,
    pub seed: u64,
    pub variant: String,
    /// Mean over participating agents of their undiscounted episode return.
    pub mean_return: f64,
    /// The manager's episode return (0 without a manager).
    pub manager_return: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    /// Encoder-decoder loss (0 for variants without one).
    pub ed_loss: f64,
    /// Fraction of agent-steps whose predicted modal action was right.
    pub action_acc: f64,
    /// Fraction of agent-steps whose predicted next observation was right
    /// (0 for variants without an observation decoder).
    pub obs_acc: f64,
    /// Live agents at the end of the episode.
    pub roster_size: usize,
}

impl MetricsRecord {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.step,
            self.episode,
            self.seed,
            self.variant,
            self.mean_return,
            self.manager_return,
            self.actor_loss,
            self.critic_loss,
            self.ed_loss,
            self.action_acc,
            self.obs_acc,
            self.roster_size
        )
    }

    pub fn parse_line(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return None;
        }
        Some(Self {
            step: f[0].parse().ok()?,
            episode: f[1].parse().ok()?,
            seed: f[2].parse().ok()?,
            variant: f[3].to_string(),
            mean_return: f[4].parse().ok()?,
            manager_return: f[5].parse().ok()?,
            actor_loss: f[6].parse().ok()?,
            critic_loss: f[7].parse().ok()?,
            ed_loss: f[8].parse().ok()?,
            action_acc: f[9].parse().ok()?,
            obs_acc: f[10].parse().ok()?,
            roster_size: f[11].parse().ok()?,
        })
    }
}

/// Parses metrics text, keeping every complete record before the first
/// truncated or malformed line.
pub fn parse_metrics(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut lines = text.split_inclusive('\n');
    match lines.next() {
        None => return Ok(Vec::new()),
        Some(h) if h.trim_end() == METRICS_HEADER => {}
        Some(h) if !h.ends_with('\n') && METRICS_HEADER.starts_with(h) => return Ok(Vec::new()),
        Some(h) => {
            return Err(Error::Config {
                line: 1,
                reason: format!("unexpected metrics header `{}`", h.trim_end()),
            })
        }
    }
    let mut out = Vec::new();
    for line in lines {
        let Some(body) = line.strip_suffix('\n') else { break };
        match MetricsRecord::parse_line(body.trim_end_matches('\r')) {
            Some(r) => out.push(r),
            None => break,
        }
    }
    Ok(out)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_metrics(&text)
}

/// Append-only metrics file flushed after every record.
pub struct MetricsWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl MetricsWriter {
    /// Creates (truncating) `path` and writes the header.
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = Self {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
        };
        w.write_raw(METRICS_HEADER)?;
        Ok(w)
    }

    /// Opens `path` for appending, writing the header if the file is empty.
    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let empty = file.metadata().map_err(|e| Error::io(path, e))?.len() == 0;
        let mut w = Self {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
        };
        if empty {
            w.write_raw(METRICS_HEADER)?;
        }
        Ok(w)
    }

    fn write_raw(&mut self, line: &str) -> Result<()> {
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn write(&mut self, record: &MetricsRecord) -> Result<()> {
        self.write_raw(&record.to_csv_line())
    }
}

/// One agent-step of decoder predictions with the ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PredictionRecord {
    pub step: usize,
    pub episode: usize,
    pub agent: u64,
    pub predicted_action: usize,
    /// Modal action of the other agents' true configuration, lowest index on ties.
    pub modal_action: usize,
    /// `None` when the variant has no observation decoder.
    pub predicted_obs: Option<usize>,
    pub realized_obs: usize,
}

pub const PREDICTIONS_HEADER: &str = "step,episode,agent,predicted_action,modal_action,predicted_obs,realized_obs";

impl PredictionRecord {
    pub fn to_csv_line(&self) -> String {
        let obs = self.predicted_obs.map(|o| o.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.step, self.episode, self.agent, self.predicted_action, self.modal_action, obs, self.realized_obs
        )
    }

    pub fn parse_line(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return None;
        }
        Some(Self {
            step: f[0].parse().ok()?,
            episode: f[1].parse().ok()?,
            agent: f[2].parse().ok()?,
            predicted_action: f[3].parse().ok()?,
            modal_action: f[4].parse().ok()?,
            predicted_obs: if f[5].is_empty() { None } else { Some(f[5].parse().ok()?) },
            realized_obs: f[6].parse().ok()?,
        })
    }
}

/// Action and observation prediction accuracy over `records`. Records
/// without an observation prediction count as misses. Empty input yields
/// `(0, 0)`.
pub fn prediction_accuracy(records: &[PredictionRecord]) -> (f64, f64) {
    if records.is_empty() {
        return (0.0, 0.0);
    }
    let n = records.len() as f64;
    let action = records.iter().filter(|r| r.predicted_action == r.modal_action).count() as f64;
    let obs = records.iter().filter(|r| r.predicted_obs == Some(r.realized_obs)).count() as f64;
    (action / n, obs / n)
}

/// Accuracy per window of `window_episodes` consecutive episodes, keyed by
/// the window's first episode.
pub fn windowed_accuracy(records: &[PredictionRecord], window_episodes: usize) -> Vec<(usize, f64, f64)> {
    let window = window_episodes.max(1);
    let mut out: Vec<(usize, f64, f64)> = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let w = records[start].episode / window;
        let end = start + records[start..].iter().take_while(|r| r.episode / window == w).count();
        let (a, o) = prediction_accuracy(&records[start..end]);
        out.push((w * window, a, o));
        start = end;
    }
    out
}

/// Accuracy levels of a predictor that guesses uniformly at random.
pub fn chance_accuracy(action_count: usize, obs_count: usize) -> (f64, f64) {
    (1.0 / action_count as f64, 1.0 / obs_count as f64)
}

pub fn write_predictions(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let mut text = String::from(PREDICTIONS_HEADER);
    text.push('\n');
    for r in records {
        text.push_str(&r.to_csv_line());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        out.push(PredictionRecord::parse_line(line).ok_or_else(|| Error::Config {
            line: i + 1,
            reason: format!("malformed prediction row `{line}`"),
        })?);
    }
    Ok(out)
}

/// Latent embedding and predicted distribution of one agent at one step.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingRecord {
    pub step: usize,
    pub episode: usize,
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Writes `step,episode,z_1..z_d,theta_1..theta_k` rows. Values use the
/// shortest representation that parses back to the same bits.
pub fn export_embeddings(records: &[EmbeddingRecord], path: &Path) -> Result<()> {
    let (d, k) = records.first().map(|r| (r.z.len(), r.theta.len())).unwrap_or((0, 0));
    let mut text = String::from("step,episode");
    for i in 1..=d {
        text.push_str(&format!(",z_{i}"));
    }
    for i in 1..=k {
        text.push_str(&format!(",theta_{i}"));
    }
    text.push('\n');
    for r in records {
        if r.z.len() != d || r.theta.len() != k {
            return Err(Error::DimensionMismatch {
                context: "embedding row",
                expected: d + k,
                actual: r.z.len() + r.theta.len(),
            });
        }
        text.push_str(&format!("{},{}", r.step, r.episode));
        for v in r.z.iter().chain(&r.theta) {
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: &Path) -> Result<Vec<EmbeddingRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let d = header.iter().filter(|h| h.starts_with("z_")).count();
    let k = header.iter().filter(|h| h.starts_with("theta_")).count();
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let bad = || Error::Config {
            line: i + 2,
            reason: format!("malformed embedding row `{line}`"),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 2 + d + k {
            return Err(bad());
        }
        let nums = f[2..]
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        out.push(EmbeddingRecord {
            step: f[0].parse().map_err(|_| bad())?,
            episode: f[1].parse().map_err(|_| bad())?,
            z: nums[..d].to_vec(),
            theta: nums[d..].to_vec(),
        });
    }
    Ok(out)
}
