//! Model pool registry, latency estimation, and feasibility filtering.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical task labels for the shipped default pool.
pub const DEFAULT_TASKS: [&str; 5] = ["qa", "completion", "commonsense", "math", "summarization"];

/// One pool member with its static throughput and energy profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelEntry {
    pub id: String,
    pub family: String,
    pub params_b: f64,
    pub tokens_per_sec: f64,
    /// Conservative per-task output budget (tokens), keyed by task label.
    pub max_new_tokens: BTreeMap<String, u64>,
    pub energy_per_token_wh: f64,
    pub active: bool,
}

impl ModelEntry {
    pub fn validate(&self) -> Result<()> {
        if self.params_b <= 0.0 || self.tokens_per_sec <= 0.0 || self.energy_per_token_wh <= 0.0 {
            return Err(Error::invalid(format!(
                "model {:?}: params_b, tokens_per_sec and energy_per_token_wh must be positive",
                self.id
            )));
        }
        if self.max_new_tokens.values().any(|&t| t == 0) {
            return Err(Error::invalid(format!(
                "model {:?}: max_new_tokens entries must be positive",
                self.id
            )));
        }
        Ok(())
    }

    /// L_m = max_new_tokens[task] / tokens_per_sec, in milliseconds.
    pub fn estimate_latency_ms(&self, task: &str) -> Result<f64> {
        let tokens = self
            .max_new_tokens
            .get(task)
            .ok_or_else(|| Error::invalid(format!("model {:?} has no profile for task {task:?}", self.id)))?;
        if *tokens == 0 {
            return Err(Error::invalid("zero-token task profile"));
        }
        Ok(*tokens as f64 / self.tokens_per_sec * 1000.0)
    }

    /// Expected energy for one query of the given task (tokens * Wh/token).
    pub fn expected_energy_wh(&self, task: &str) -> Result<f64> {
        let tokens = self
            .max_new_tokens
            .get(task)
            .ok_or_else(|| Error::invalid(format!("model {:?} has no profile for task {task:?}", self.id)))?;
        Ok(*tokens as f64 * self.energy_per_token_wh)
    }
}

/// Latency budget for one request.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityQuery {
    pub task: String,
    pub l_max_ms: f64,
}

/// Registry of candidate models. Churn (add/deactivate) is expected to be
/// mirrored into the bandit policy by the caller; `RouterService` does this
/// atomically.
#[derive(Debug, Clone, Default)]
pub struct ModelPool {
    entries: Vec<ModelEntry>,
}

impl ModelPool {
    pub fn new(entries: Vec<ModelEntry>) -> Result<Self> {
        let mut pool = ModelPool { entries: Vec::new() };
        for e in entries {
            pool.add_model(e)?;
        }
        Ok(pool)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let entries: Vec<ModelEntry> = serde_json::from_str(&text)?;
        Self::new(entries)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.entries)?)?;
        Ok(())
    }

    pub fn entries(&self) -> &[ModelEntry] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&ModelEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn active_ids(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| e.active)
            .map(|e| e.id.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add_model(&mut self, mut entry: ModelEntry) -> Result<()> {
        entry.validate()?;
        if self.get(&entry.id).is_some() {
            return Err(Error::invalid(format!("duplicate model id {:?}", entry.id)));
        }
        entry.active = true;
        self.entries.push(entry);
        Ok(())
    }

    pub fn deactivate_model(&mut self, id: &str) -> Result<()> {
        let entry = self
            .entries
            .iter_mut()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::invalid(format!("unknown model id {id:?}")))?;
        if !entry.active {
            return Err(Error::invalid(format!("model {id:?} already inactive")));
        }
        entry.active = false;
        Ok(())
    }

    /// Active models with L_opt + L_m <= L_max. When the budget excludes every
    /// active model, falls back to the single minimum-latency one so routing
    /// stays total.
    pub fn feasible_set(&self, fq: &FeasibilityQuery, overhead_ms: f64) -> Result<Vec<String>> {
        let active: Vec<&ModelEntry> = self.entries.iter().filter(|e| e.active).collect();
        if active.is_empty() {
            return Err(Error::NoFeasibleArm);
        }
        let mut feasible = Vec::new();
        let mut min_latency = f64::INFINITY;
        let mut min_id = None;
        for e in &active {
            let lat = e.estimate_latency_ms(&fq.task)?;
            if overhead_ms + lat <= fq.l_max_ms {
                feasible.push(e.id.clone());
            }
            if lat < min_latency {
                min_latency = lat;
                min_id = Some(e.id.clone());
            }
        }
        if feasible.is_empty() {
            feasible.push(min_id.expect("at least one active model"));
        }
        Ok(feasible)
    }

    /// Largest expected per-query energy over active models and their tasks;
    /// the e_max used for energy normalization.
    pub fn max_query_energy_wh(&self) -> Result<f64> {
        let mut e_max = 0.0_f64;
        for e in self.entries.iter().filter(|e| e.active) {
            for task in e.max_new_tokens.keys() {
                e_max = e_max.max(e.expected_energy_wh(task)?);
            }
        }
        if e_max <= 0.0 {
            return Err(Error::invalid("pool has no energy profiles"));
        }
        Ok(e_max)
    }
}

fn entry(
    id: &str,
    family: &str,
    params_b: f64,
    tokens_per_sec: f64,
    energy_per_token_wh: f64,
) -> ModelEntry {
    let max_new_tokens = [
        ("qa", 64),
        ("completion", 32),
        ("commonsense", 32),
        ("math", 256),
        ("summarization", 128),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    ModelEntry {
        id: id.to_string(),
        family: family.to_string(),
        params_b,
        tokens_per_sec,
        max_new_tokens,
        energy_per_token_wh,
        active: true,
    }
}

/// The 16-model default pool. Throughput and energy profiles are synthetic
/// but ordered by parameter count (larger models are slower and draw more
/// energy per token).
pub fn default_pool() -> ModelPool {
    let specs: [(&str, &str, f64); 16] = [
        ("Qwen/Qwen2.5-0.5B-Instruct", "Qwen", 0.5),
        ("Qwen/Qwen2.5-1.5B-Instruct", "Qwen", 1.5),
        ("Qwen/Qwen2.5-3B-Instruct", "Qwen", 3.0),
        ("Qwen/Qwen2.5-7B", "Qwen", 7.0),
        ("Qwen/Qwen2.5-14B-Instruct", "Qwen", 14.0),
        ("mistralai/Mistral-7B-Instruct-v0.3", "Mistral", 7.0),
        ("google/gemma-3-1b-it", "Gemma", 1.0),
        ("google/gemma-3-4b-it", "Gemma", 4.0),
        ("google/gemma-3-12b-it", "Gemma", 12.0),
        ("google/gemma-3-27b-it", "Gemma", 27.0),
        ("meta-llama/Llama-3.1-1B-Instruct", "Llama", 1.0),
        ("meta-llama/Llama-3.2-3B-Instruct", "Llama", 3.0),
        ("meta-llama/Llama-3.1-8B-Instruct", "Llama", 8.0),
        ("microsoft/Phi-4-mini-instruct", "Phi", 4.0),
        ("microsoft/Phi-4-14B", "Phi", 14.0),
        ("01-ai/Yi-34B", "Yi", 34.0),
    ];
    let entries = specs
        .iter()
        .map(|(id, family, params)| {
            // throughput falls and per-token energy rises with size
            let tokens_per_sec = 220.0 / params.powf(0.45);
            let energy_per_token_wh = 2e-4 * params.powf(0.8);
            entry(id, family, *params, tokens_per_sec, energy_per_token_wh)
        })
        .collect();
    ModelPool::new(entries).expect("default pool is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(id: &str, tokens_per_sec: f64) -> ModelEntry {
        entry(id, "test", 1.0, tokens_per_sec, 1e-4)
    }

    #[test]
    fn latency_estimate_arithmetic() {
        let mut m = tiny("m", 50.0);
        m.max_new_tokens.insert("qa".into(), 100);
        assert_eq!(m.estimate_latency_ms("qa").unwrap(), 2000.0);
        // proportionality: doubling throughput halves the estimate
        m.tokens_per_sec = 100.0;
        assert_eq!(m.estimate_latency_ms("qa").unwrap(), 1000.0);
        assert!(m.estimate_latency_ms("unknown-task").is_err());
    }

    #[test]
    fn zero_token_profile_rejected_at_registration() {
        let mut m = tiny("m", 50.0);
        m.max_new_tokens.insert("qa".into(), 0);
        assert!(ModelPool::new(vec![m]).is_err());
    }

    #[test]
    fn infinite_budget_admits_all_active() {
        let pool = default_pool();
        let fq = FeasibilityQuery {
            task: "qa".into(),
            l_max_ms: f64::INFINITY,
        };
        assert_eq!(pool.feasible_set(&fq, 10.0).unwrap().len(), 16);
    }

    #[test]
    fn impossible_budget_falls_back_to_fastest() {
        let pool = ModelPool::new(vec![tiny("fast", 100.0), tiny("slow", 10.0)]).unwrap();
        let fq = FeasibilityQuery {
            task: "qa".into(),
            l_max_ms: 0.001,
        };
        let set = pool.feasible_set(&fq, 0.0).unwrap();
        assert_eq!(set, vec!["fast".to_string()]);
    }

    #[test]
    fn feasibility_threshold_hand_check() {
        // estimates 500 ms and 5000 ms; L_max = 1000, L_opt = 10
        let mut a = tiny("a", 1.0);
        a.max_new_tokens.insert("qa".into(), 1);
        a.tokens_per_sec = 2.0; // 500 ms
        let mut b = tiny("b", 1.0);
        b.max_new_tokens.insert("qa".into(), 5);
        b.tokens_per_sec = 1.0; // 5000 ms
        let pool = ModelPool::new(vec![a, b]).unwrap();
        let fq = FeasibilityQuery {
            task: "qa".into(),
            l_max_ms: 1000.0,
        };
        assert_eq!(pool.feasible_set(&fq, 10.0).unwrap(), vec!["a".to_string()]);
    }

    #[test]
    fn feasibility_monotone_in_budget() {
        let pool = default_pool();
        let mut prev = 0;
        for l_max in [10.0, 100.0, 500.0, 2000.0, 10_000.0, 1e9] {
            let fq = FeasibilityQuery {
                task: "math".into(),
                l_max_ms: l_max,
            };
            let n = pool.feasible_set(&fq, 5.0).unwrap().len();
            assert!(n >= prev.max(1));
            prev = n;
        }
    }

    #[test]
    fn churn_lifecycle() {
        let mut pool = ModelPool::new(vec![tiny("a", 10.0)]).unwrap();
        assert!(pool.add_model(tiny("a", 10.0)).is_err());
        pool.add_model(tiny("b", 10.0)).unwrap();
        pool.deactivate_model("a").unwrap();
        let fq = FeasibilityQuery {
            task: "qa".into(),
            l_max_ms: f64::INFINITY,
        };
        assert_eq!(pool.feasible_set(&fq, 0.0).unwrap(), vec!["b".to_string()]);
        assert!(pool.deactivate_model("ghost").is_err());
        pool.deactivate_model("b").unwrap();
        assert!(matches!(pool.feasible_set(&fq, 0.0), Err(Error::NoFeasibleArm)));
    }

    #[test]
    fn default_pool_matches_catalog() {
        let pool = default_pool();
        assert_eq!(pool.len(), 16);
        let gemma = pool.get("google/gemma-3-12b-it").unwrap();
        assert_eq!(gemma.params_b, 12.0);
        assert_eq!(gemma.family, "Gemma");
        let yi = pool.get("01-ai/Yi-34B").unwrap();
        assert!(pool.entries().iter().all(|e| e.params_b <= yi.params_b));
    }

    #[test]
    fn pool_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.json");
        let pool = default_pool();
        pool.save_json(&path).unwrap();
        let loaded = ModelPool::load_json(&path).unwrap();
        assert_eq!(loaded.len(), 16);
        assert_eq!(
            loaded.get("01-ai/Yi-34B").unwrap().tokens_per_sec,
            pool.get("01-ai/Yi-34B").unwrap().tokens_per_sec
        );
    }
}
