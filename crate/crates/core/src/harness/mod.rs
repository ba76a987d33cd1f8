//! Seeded training runs, evaluation, metrics and exports.

pub mod analysis;
mod config;
mod metrics;
mod policy;
mod run;

pub use config::{ExperimentConfig, EXPERIMENT_KEYS};
pub use metrics::{
    chance_accuracy, export_embeddings, parse_metrics, prediction_accuracy, read_embeddings, read_metrics,
    read_predictions, windowed_accuracy, write_predictions, EmbeddingRecord, MetricsRecord, MetricsWriter,
    PredictionRecord, METRICS_HEADER, PREDICTIONS_HEADER,
};
pub use policy::{PolicySnapshot, POLICY_MAGIC};
pub use run::{evaluate, run_all, run_training, stream, substream, EvalSummary, RunOutput, SeedResult};
