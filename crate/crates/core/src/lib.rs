//! Simulation, estimation and sequential monitoring for survival studies
//! with staggered, outcome-adaptive enrollment.
//!
//! Events are indexed by calendar time and marked by entry time, covariate
//! path and event indicator. On that scale the Cox score process
//! `U(β; t, ϑ)` (calendar time `t`, entry cutoff `ϑ`) stays a martingale
//! integral even when allocation depends on earlier outcomes, which is what
//! the modules below compute, rescale, estimate from, monitor and validate:
//!
//! - [`trial_core`]: covariate paths, subjects, trials, hazards, designs
//! - [`sim_engine`]: staggered entry, adaptive allocation, Cox event times
//! - [`cox_engine`]: Γ_k, Z̄, partial likelihood, score, information, V̂
//! - [`info_time`]: information paths, σ̂_{n,v} and the rescaled score B̂_n(v)
//! - [`estimator`]: maximum partial likelihood estimation and intervals
//! - [`seq_monitor`]: alpha spending, boundaries, monitoring decisions
//! - [`mc_validate`]: oracles, compensated scores and Monte Carlo diagnostics
//! - [`cli_io`]: configuration files, CSV/JSON formats and the CLI

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_io;
pub mod cox_engine;
pub mod error;
pub mod estimator;
pub mod info_time;
pub mod mc_validate;
pub mod rng;
pub mod seq_monitor;
pub mod sim_engine;
pub mod stats;
pub mod trial_core;

pub use error::{Error, Result};
