//! Experiment protocols: lambda sweep, feature ablation, mid-run model
//! addition, and routing-overhead measurement.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{Policy, PolicyConfig, PolicyKind};
use crate::context::FeatureConfig;
use crate::error::{Error, Result};
use crate::pool::{ModelEntry, ModelPool};
use crate::reward::RewardParams;
use crate::sim::oracle::OracleSpec;
use crate::sim::pareto::{pareto_front, ParetoPoint};
use crate::sim::runner::{
    build_pipeline, run_stream, Chooser, ExperimentResult, ModelAddition, SimConfig,
};
use crate::sim::stream::QueryStream;

/// Mean/std aggregate of repeated runs at one lambda.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaSweepPoint {
    pub lambda: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_energy_wh: f64,
    pub std_energy_wh: f64,
    pub mean_regret: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaSweepResult {
    pub points: Vec<LambdaSweepPoint>,
    /// Static single-model reference front in (mean accuracy, mean energy)
    /// space, from the ground truth.
    pub model_front: Vec<ParetoPoint>,
    pub reps: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-model static summary used for the reference front: expected accuracy
/// averaged over cells, expected per-query energy averaged over tasks.
pub fn model_summary_points(oracle: &OracleSpec, pool: &ModelPool) -> Result<Vec<ParetoPoint>> {
    let mut out = Vec::new();
    for id in pool.active_ids() {
        let m = oracle
            .models
            .get(&id)
            .ok_or_else(|| Error::invalid(format!("oracle has no entry for model {id:?}")))?;
        let accuracy = m.acc_mean.iter().sum::<f64>() / m.acc_mean.len() as f64;
        let entry = pool.get(&id).expect("active id present");
        let energy = oracle
            .tasks
            .iter()
            .map(|t| entry.expected_energy_wh(t))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .sum::<f64>()
            / oracle.tasks.len() as f64;
        out.push(ParetoPoint {
            id,
            accuracy,
            energy,
        });
    }
    Ok(out)
}

/// Sweeps lambda over `grid`, running `reps` seeds per value in parallel.
/// Seeds are `base.policy.seed + rep` for both policy and stream.
pub fn run_lambda_sweep(
    oracle: &OracleSpec,
    pool: &ModelPool,
    base: &SimConfig,
    grid: &[f64],
    reps: usize,
) -> Result<LambdaSweepResult> {
    if grid.is_empty() || reps == 0 {
        return Err(Error::invalid("lambda sweep needs a non-empty grid and reps >= 1"));
    }
    let points = grid
        .iter()
        .map(|&lambda| {
            let runs: Vec<ExperimentResult> = (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let mut cfg = base.clone();
                    cfg.lambda = lambda;
                    cfg.policy.seed = base.policy.seed + rep as u64;
                    cfg.stream.seed = base.stream.seed + rep as u64;
                    crate::sim::runner::run_policy(oracle, pool, &cfg)
                })
                .collect::<Result<_>>()?;
            let (mean_accuracy, std_accuracy) =
                mean_std(&runs.iter().map(|r| r.mean_accuracy_norm).collect::<Vec<_>>());
            let (mean_energy_wh, std_energy_wh) =
                mean_std(&runs.iter().map(|r| r.total_energy_wh).collect::<Vec<_>>());
            let (mean_regret, _) =
                mean_std(&runs.iter().map(|r| r.cumulative_regret).collect::<Vec<_>>());
            Ok(LambdaSweepPoint {
                lambda,
                mean_accuracy,
                std_accuracy,
                mean_energy_wh,
                std_energy_wh,
                mean_regret,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LambdaSweepResult {
        points,
        model_front: pareto_front(&model_summary_points(oracle, pool)?),
        reps,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRow {
    pub features: FeatureConfig,
    pub final_regrets: Vec<f64>,
    pub mean_final_regret: f64,
    pub std_final_regret: f64,
}

/// Runs each feature configuration over `reps` seeds. Duplicate
/// configurations are collapsed with a warning on stderr.
pub fn run_feature_ablation(
    oracle: &OracleSpec,
    pool: &ModelPool,
    base: &SimConfig,
    configs: &[FeatureConfig],
    reps: usize,
) -> Result<Vec<AblationRow>> {
    if configs.is_empty() || reps == 0 {
        return Err(Error::invalid("ablation needs configs and reps >= 1"));
    }
    let mut unique = Vec::new();
    for c in configs {
        if unique.contains(c) {
            eprintln!("warning: duplicate feature configuration {c:?} collapsed");
        } else {
            unique.push(*c);
        }
    }
    unique
        .iter()
        .map(|&features| {
            let final_regrets: Vec<f64> = (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let mut cfg = base.clone();
                    cfg.features = features;
                    cfg.policy.seed = base.policy.seed + rep as u64;
                    cfg.stream.seed = base.stream.seed + rep as u64;
                    Ok(crate::sim::runner::run_policy(oracle, pool, &cfg)?.cumulative_regret)
                })
                .collect::<Result<_>>()?;
            let (mean_final_regret, std_final_regret) = mean_std(&final_regrets);
            Ok(AblationRow {
                features,
                final_regrets,
                mean_final_regret,
                std_final_regret,
            })
        })
        .collect()
}

pub const DEFAULT_ADDITION_STEP: usize = 1000;
pub const ADOPTION_WINDOW: usize = 25;

/// The model introduced mid-run in the default addition protocol: strong and
/// efficient, so its expected reward dominates the incumbent pool.
pub fn default_added_model() -> (ModelEntry, f64) {
    let params: f64 = 7.0;
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
    (
        ModelEntry {
            id: "Qwen/Qwen2.5-7B-Instruct".into(),
            family: "Qwen".into(),
            params_b: params,
            tokens_per_sec: 220.0 / params.powf(0.45),
            max_new_tokens,
            energy_per_token_wh: 2e-4 * params.powf(0.8),
            active: true,
        },
        0.92,
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdditionOutcome {
    pub result: ExperimentResult,
    pub added_id: String,
    pub at_step: usize,
    /// (window start step, selection frequency of the added model).
    pub adoption: Vec<(usize, f64)>,
}

/// Runs one bandit policy with `entry` joining the pool (and the ground
/// truth) at `at_step`.
pub fn run_model_addition(
    oracle: &OracleSpec,
    pool: &ModelPool,
    cfg: &SimConfig,
    at_step: usize,
    entry: ModelEntry,
    acc_mean: f64,
) -> Result<AdditionOutcome> {
    if at_step >= cfg.stream.t {
        return Err(Error::invalid("addition step must fall inside the stream"));
    }
    let params = RewardParams::new(cfg.lambda)?;
    let stream = QueryStream::new(cfg.stream.clone())?;
    let queries = stream.generate()?;
    let pipeline = build_pipeline(&stream, oracle, cfg.features)?;
    let d = pipeline.context_dim();
    let policy = Policy::init(cfg.policy.clone(), &pool.active_ids(), d)?;
    let added_id = entry.id.clone();
    let result = run_stream(
        oracle.clone(),
        pool.clone(),
        params,
        &queries,
        Chooser::Bandit { policy, pipeline },
        cfg.l_max_ms,
        cfg.policy.seed,
        Some(ModelAddition {
            at_step,
            entry,
            acc_mean,
        }),
        serde_json::json!({ "sim": cfg, "added": added_id, "at_step": at_step }),
    )?;
    let adoption = result
        .selection_frequency(ADOPTION_WINDOW)
        .into_iter()
        .map(|(start, freq)| (start, freq.get(&added_id).copied().unwrap_or(0.0)))
        .collect();
    Ok(AdditionOutcome {
        result,
        added_id,
        at_step,
        adoption,
    })
}

/// Mean per-query wall-clock cost of each routing stage, plus selection-only
/// cost per policy family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverheadReport {
    pub n_queries: usize,
    pub classify_ms: f64,
    pub cluster_ms: f64,
    pub complexity_ms: f64,
    pub pipeline_total_ms: f64,
    /// Mean select-call cost keyed by policy kind name.
    pub select_ms: BTreeMap<String, f64>,
}

/// Times the context pipeline stage by stage over `n` synthetic queries, then
/// times bare `select` calls for each policy kind on warmed-up statistics.
pub fn measure_overhead(
    oracle: &OracleSpec,
    pool: &ModelPool,
    n: usize,
    seed: u64,
) -> Result<OverheadReport> {
    if n == 0 {
        return Err(Error::invalid("overhead measurement needs n >= 1"));
    }
    let stream = QueryStream::new(crate::sim::stream::StreamConfig {
        t: n,
        task_mix: Vec::new(),
        seed,
    })?;
    let queries = stream.generate()?;
    let mut pipeline = build_pipeline(&stream, oracle, FeatureConfig::Full)?;
    let d = pipeline.context_dim();

    let mut classify = 0.0;
    let mut cluster = 0.0;
    let mut complexity = 0.0;
    let mut contexts = Vec::with_capacity(n);
    for q in &queries {
        let (x, _, timings) = pipeline.generate_context(&q.text)?;
        classify += timings.classify_ms;
        cluster += timings.cluster_ms;
        complexity += timings.complexity_ms;
        contexts.push(x);
    }

    let arms = pool.active_ids();
    let mut select_ms = BTreeMap::new();
    for kind in [
        PolicyKind::EpsGreedy,
        PolicyKind::EpsGreedyContextual,
        PolicyKind::LinUcb,
        PolicyKind::Thompson,
    ] {
        let mut policy = Policy::init(
            PolicyConfig {
                kind,
                seed,
                ..PolicyConfig::default()
            },
            &arms,
            d,
        )?;
        // warm up so matrices carry realistic state
        for x in contexts.iter().take(50) {
            let sel = policy.select(x, &arms)?;
            policy.update(&sel.arm_id, x, 0.3)?;
        }
        let t0 = Instant::now();
        for x in &contexts {
            policy.select(x, &arms)?;
        }
        let per_call = t0.elapsed().as_secs_f64() * 1e3 / n as f64;
        let name = serde_json::to_value(kind)?
            .as_str()
            .expect("kind serializes to string")
            .to_string();
        select_ms.insert(name, per_call);
    }

    let nf = n as f64;
    Ok(OverheadReport {
        n_queries: n,
        classify_ms: classify / nf,
        cluster_ms: cluster / nf,
        complexity_ms: complexity / nf,
        pipeline_total_ms: (classify + cluster + complexity) / nf,
        select_ms,
    })
}

/// Default curriculum for the feature ablation: every single-feature and
/// pairwise configuration plus the full and empty ones.
pub fn ablation_grid() -> Vec<FeatureConfig> {
    vec![
        FeatureConfig::None,
        FeatureConfig::Task,
        FeatureConfig::Cluster,
        FeatureConfig::Complexity,
        FeatureConfig::TaskCluster,
        FeatureConfig::TaskComplexity,
        FeatureConfig::ClusterComplexity,
        FeatureConfig::Full,
    ]
}

/// Default lambda grid for the sweep.
pub fn lambda_grid() -> Vec<f64> {
    vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
}

/// Ensures accuracy means are distinguishable between context cells only when
/// the corresponding feature is informative (used by tests and examples to
/// sanity check oracle choices).
pub fn oracle_cell_spread(oracle: &OracleSpec, model: &str) -> Result<f64> {
    let m = oracle
        .models
        .get(model)
        .ok_or_else(|| Error::invalid(format!("oracle has no entry for model {model:?}")))?;
    let lo = m.acc_mean.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = m.acc_mean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(hi - lo)
}
