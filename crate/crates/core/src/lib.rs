//! Causal digital twin estimation.
//!
//! Instantaneous and lag-1 causal factors among `G` connected assets are
//! tracked as the state of a random-walk state-space model whose observation
//! matrix is built from the measurements themselves. The crate provides the
//! state layout ([`model`]), Kalman filtering and smoothing ([`kalman`]), a
//! ground-truth SVAR simulator ([`sim`]), snapshot ingestion ([`ingest`]) and
//! the command pipeline behind the `causal-twin` binary ([`commands`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod kalman;
pub mod linalg;
pub mod model;
pub mod report;
pub mod series;
pub mod sim;

pub use error::{Error, ErrorClass, Result};
pub use kalman::{Belief, FilterResult, NoiseConfig};
pub use model::{CausalFactors, FactorIndex, FactorKind, GraphSpec, StateLayout};
pub use series::ObservationSeries;
