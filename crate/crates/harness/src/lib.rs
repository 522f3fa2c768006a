//! Experiment harness for decentralized multi-player bandit simulations.
//!
//! A run is described by a TOML [`config::ExperimentConfig`]. The harness
//! derives every random stream from one master seed ([`seeds`]), runs the
//! replications on a worker pool ([`experiment`]), aggregates them
//! ([`stats`]) and writes CSV files plus a `meta.json` record
//! ([`output`]). The [`cli`] module is the `mpmab` binary minus argument
//! parsing.

pub mod cli;
pub mod config;
pub mod envgen;
pub mod error;
pub mod experiment;
pub mod output;
pub mod seeds;
pub mod stats;

pub use error::{Error, Result};
