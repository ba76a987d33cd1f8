//! Reasoning about the other-agent population under action anonymity.

mod belief;
mod config;
mod dirichlet;
mod rectify;
mod tracker;

pub use belief::{belief_update_bu, AgentBelief, CandidateModel, ModelBelief};
pub use config::{
    config_distribution, config_likelihood, config_pmf, enumerate_configs, multinomial_coefficient,
    ConfigDistribution, Configuration,
};
pub use dirichlet::{ActionDistribution, DirichletParams, SIMPLEX_TOLERANCE};
pub use rectify::{rectify_observation, round_to_total, PrivateObservation, UniformMisreport};
pub use tracker::PopulationTracker;
