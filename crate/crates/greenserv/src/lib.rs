//! Context-aware request routing for heterogeneous model pools.
//!
//! The crate routes each query to one model from a pool using contextual
//! multi-armed bandits, trading off answer accuracy against energy
//! consumption under latency feasibility constraints:
//!
//! - [`context`] turns raw query text into a one-hot context vector (task
//!   type, semantic cluster, text complexity, bias).
//! - [`bandit`] implements LinUCB, decaying epsilon-greedy and contextual
//!   Thompson sampling over a dynamic arm pool.
//! - [`reward`] computes the lambda-scalarized accuracy/energy reward and
//!   tracks regret.
//! - [`pool`] is the model registry with latency-based feasibility filtering.
//! - [`sim`] is a simulation harness with ground-truth oracles, baselines and
//!   the experiment protocols.
//! - [`service`] is an HTTP-shaped routing facade with deferred feedback and
//!   an append-only decision log.
//!
//! See the crate examples for runnable entry points per capability.

pub mod bandit;
pub mod context;
pub mod error;
pub mod pool;
pub mod reward;
pub mod service;
pub mod sim;

pub use error::{Error, Result};
