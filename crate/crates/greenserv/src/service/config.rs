//! Service configuration (single JSON file).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bandit::PolicyConfig;
use crate::context::FeatureConfig;
use crate::error::Result;
use crate::pool::DEFAULT_TASKS;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServiceConfig {
    /// Session-wide accuracy/energy trade-off; requests may override it.
    pub lambda: f64,
    /// Latency budget applied when a request carries none; JSON null means
    /// unbounded.
    #[serde(
        default = "default_l_max",
        serialize_with = "ser_budget",
        deserialize_with = "de_budget"
    )]
    pub l_max_default_ms: f64,
    #[serde(default = "default_window")]
    pub moving_avg_window: usize,
    /// Pool JSON path; the built-in 16-model pool when absent.
    #[serde(default)]
    pub pool_path: Option<PathBuf>,
    #[serde(default = "default_tasks")]
    pub task_labels: Vec<String>,
    #[serde(default = "default_k")]
    pub k_clusters: usize,
    #[serde(default = "default_bins")]
    pub n_bins: usize,
    #[serde(default = "default_features")]
    pub features: FeatureConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    /// Checkpoint after every N finalized decisions; 0 disables.
    #[serde(default)]
    pub checkpoint_every: u64,
    #[serde(default)]
    pub checkpoint_path: Option<PathBuf>,
    /// Append-only decision log (JSON Lines); disabled when absent.
    #[serde(default)]
    pub log_path: Option<PathBuf>,
    #[serde(default = "default_ttl")]
    pub pending_ttl_secs: u64,
    /// Bounds for normalizing reported raw accuracy.
    #[serde(default)]
    pub acc_min: f64,
    #[serde(default = "default_acc_max")]
    pub acc_max: f64,
}

fn default_l_max() -> f64 {
    f64::INFINITY
}

fn ser_budget<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

fn de_budget<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

fn default_window() -> usize {
    crate::reward::DEFAULT_MOVING_AVG_WINDOW
}

fn default_tasks() -> Vec<String> {
    DEFAULT_TASKS.iter().map(|t| t.to_string()).collect()
}

fn default_k() -> usize {
    3
}

fn default_bins() -> usize {
    3
}

fn default_features() -> FeatureConfig {
    FeatureConfig::Full
}

fn default_ttl() -> u64 {
    3600
}

fn default_acc_max() -> f64 {
    1.0
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            lambda: 0.4,
            l_max_default_ms: default_l_max(),
            moving_avg_window: default_window(),
            pool_path: None,
            task_labels: default_tasks(),
            k_clusters: default_k(),
            n_bins: default_bins(),
            features: default_features(),
            policy: PolicyConfig::default(),
            checkpoint_every: 0,
            checkpoint_path: None,
            log_path: None,
            pending_ttl_secs: default_ttl(),
            acc_min: 0.0,
            acc_max: default_acc_max(),
        }
    }
}

impl ServiceConfig {
    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: ServiceConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        crate::reward::RewardParams::new(self.lambda)?;
        self.policy.validate()?;
        if self.task_labels.is_empty() || self.k_clusters == 0 || self.n_bins == 0 {
            return Err(crate::error::Error::invalid(
                "task labels, k_clusters and n_bins must be non-empty/positive",
            ));
        }
        if !(self.acc_min < self.acc_max) {
            return Err(crate::error::Error::invalid("acc_min must be below acc_max"));
        }
        Ok(())
    }
}
