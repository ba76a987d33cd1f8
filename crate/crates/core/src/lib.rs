//! Decentralized multiagent actor-critic learning with latent population
//! modeling.
//!
//! * [`nn`]: small differentiable networks and the optimizer.
//! * [`population`]: configuration distributions, Dirichlet-multinomial
//!   updates, rectified counts and model-belief filtering.
//! * [`latent`]: the encoder-decoder that embeds observations into a latent
//!   state and reconstructs the next observation and population distribution.
//! * [`agents`]: LIA2C, its no-KL ablation and the IA2C++DM baseline.
//! * [`env`]: the closed and open Org environments.
//! * [`harness`]: seeded training, evaluation, metrics and exports.
//! * [`oracle`]: brute-force reference computations.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod nn;
pub mod oracle;
pub mod agents;
pub mod env;
pub mod harness;
pub mod kv;
pub mod latent;
pub mod population;

pub use error::{Error, Result};
