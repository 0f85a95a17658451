//! Bandit policies over a dynamic arm pool.

pub mod arm;
pub mod checkpoint;
pub mod policy;

pub use arm::{ArmState, INVERSE_REFRESH_INTERVAL};
pub use policy::{Policy, PolicyConfig, PolicyKind, Selection};
