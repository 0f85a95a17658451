//! Single-run simulation loop shared by all experiment protocols.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{Policy, PolicyConfig};
use crate::context::classifier::{train_task_classifier, TrainingConfig};
use crate::context::flesch::ComplexityBinner;
use crate::context::{
    ClusterModel, EmbeddingProvider, FeatureConfig, HashingEmbedder, QueryContextPipeline,
};
use crate::error::{Error, Result};
use crate::pool::{FeasibilityQuery, ModelEntry, ModelPool};
use crate::reward::{Observation, RegretLedger, RewardParams};
use crate::sim::oracle::{add_model_to_oracle, ContextCell, OracleSpec};
use crate::sim::stream::{Query, QueryStream, StreamConfig};

/// Fixed routing-overhead allowance subtracted from the latency budget
/// before feasibility filtering.
pub const DEFAULT_OVERHEAD_MS: f64 = 10.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub policy: PolicyConfig,
    pub features: FeatureConfig,
    pub lambda: f64,
    /// Per-request latency budget; infinite keeps every active model feasible.
    #[serde(default = "default_l_max")]
    pub l_max_ms: f64,
    pub stream: StreamConfig,
}

fn default_l_max() -> f64 {
    f64::INFINITY
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            policy: PolicyConfig::default(),
            features: FeatureConfig::Full,
            lambda: 0.4,
            l_max_ms: f64::INFINITY,
            stream: StreamConfig::default(),
        }
    }
}

/// One routing step with realized and expected quantities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub step: usize,
    pub query_id: String,
    pub cell: ContextCell,
    pub chosen: String,
    pub observation: Observation,
    pub reward: f64,
    pub expected_reward_chosen: f64,
    pub optimal_arm: String,
    pub expected_reward_optimal: f64,
    /// Pseudo-regret against expected rewards; nonnegative by construction.
    pub regret: f64,
    /// Gap between the expected optimum and the realized reward.
    pub regret_realized: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub records: Vec<DecisionRecord>,
    pub mean_accuracy_norm: f64,
    pub total_energy_wh: f64,
    pub cumulative_regret: f64,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl ExperimentResult {
    pub fn ledger(&self) -> RegretLedger {
        let mut l = RegretLedger::new();
        for r in &self.records {
            l.push(r.chosen.clone(), r.expected_reward_chosen, r.expected_reward_optimal);
        }
        l
    }

    pub fn cumulative_regret_at(&self, t: usize) -> f64 {
        self.records.iter().take(t).map(|r| r.regret).sum()
    }

    /// Non-overlapping windowed selection frequencies; each window's
    /// frequencies sum to 1.
    pub fn selection_frequency(&self, window: usize) -> Vec<(usize, BTreeMap<String, f64>)> {
        let mut out = Vec::new();
        for chunk in self.records.chunks(window.max(1)) {
            let start = chunk[0].step;
            let mut counts: BTreeMap<String, f64> = BTreeMap::new();
            for r in chunk {
                *counts.entry(r.chosen.clone()).or_insert(0.0) += 1.0;
            }
            let n = chunk.len() as f64;
            for v in counts.values_mut() {
                *v /= n;
            }
            out.push((start, counts));
        }
        out
    }

    /// Most selected arm over the trailing `tail` steps.
    pub fn modal_arm(&self, tail: usize) -> Option<String> {
        let skip = self.records.len().saturating_sub(tail);
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &self.records[skip..] {
            *counts.entry(r.chosen.as_str()).or_insert(0) += 1;
        }
        counts
            .into_iter()
            .max_by_key(|(_, n)| *n)
            .map(|(id, _)| id.to_string())
    }
}

/// Expected rewards precomputed per (model, cell) so per-step oracle lookups
/// stay cheap.
struct RewardTable {
    rewards: BTreeMap<String, Vec<f64>>,
    accuracies: BTreeMap<String, Vec<f64>>,
}

impl RewardTable {
    fn build(oracle: &OracleSpec, pool: &ModelPool, params: RewardParams) -> Result<Self> {
        let mut rewards = BTreeMap::new();
        let mut accuracies = BTreeMap::new();
        let n_cells = oracle.n_cells();
        for id in pool.active_ids() {
            let mut r = Vec::with_capacity(n_cells);
            let mut a = Vec::with_capacity(n_cells);
            for task in 0..oracle.tasks.len() {
                for cluster in 0..oracle.k_clusters {
                    for bin in 0..oracle.n_bins {
                        let cell = ContextCell { task, cluster, bin };
                        r.push(oracle.expected_reward(pool, &id, cell, params)?);
                        a.push(oracle.expected_accuracy(&id, cell)?);
                    }
                }
            }
            rewards.insert(id.clone(), r);
            accuracies.insert(id, a);
        }
        Ok(RewardTable { rewards, accuracies })
    }

    fn reward(&self, oracle: &OracleSpec, model: &str, cell: ContextCell) -> Result<f64> {
        let idx = oracle.cell_index(cell)?;
        self.rewards
            .get(model)
            .map(|v| v[idx])
            .ok_or_else(|| Error::invalid(format!("no reward table entry for {model:?}")))
    }

    fn optimal(
        &self,
        oracle: &OracleSpec,
        cell: ContextCell,
        feasible: &[String],
    ) -> Result<(String, f64)> {
        let idx = oracle.cell_index(cell)?;
        let mut best: Option<(&str, f64)> = None;
        for id in feasible {
            let r = self
                .rewards
                .get(id)
                .map(|v| v[idx])
                .ok_or_else(|| Error::invalid(format!("no reward table entry for {id:?}")))?;
            match best {
                Some((_, br)) if r <= br => {}
                _ => best = Some((id, r)),
            }
        }
        best.map(|(id, r)| (id.to_string(), r))
            .ok_or(Error::NoFeasibleArm)
    }
}

/// How the run chooses an arm each step.
pub enum Chooser {
    Bandit {
        policy: Policy,
        pipeline: QueryContextPipeline,
    },
    Fixed(String),
    Random(ChaCha8Rng),
}

/// Builds the feature pipeline used by bandit runs: hashing embedder, a task
/// classifier trained on a labeled warmup sample, and fresh cluster centroids.
pub fn build_pipeline(
    stream: &QueryStream,
    oracle: &OracleSpec,
    features: FeatureConfig,
) -> Result<QueryContextPipeline> {
    let provider = HashingEmbedder::default();
    let warmup = stream.labeled_warmup(150)?;
    let pairs = warmup
        .iter()
        .map(|(text, label)| {
            let instr = QueryContextPipeline::instruction_slice(text);
            Ok((provider.embed(instr)?, label.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let trained = train_task_classifier(&pairs, &TrainingConfig::default())?;
    // fix label order to the oracle's task order
    let mut classifier = trained.classifier;
    let mut weights = Vec::with_capacity(oracle.tasks.len());
    let mut bias = Vec::with_capacity(oracle.tasks.len());
    for task in &oracle.tasks {
        let i = classifier
            .labels
            .iter()
            .position(|l| l == task)
            .ok_or_else(|| Error::invalid(format!("warmup sample missing task {task:?}")))?;
        weights.push(classifier.weights[i].clone());
        bias.push(classifier.bias[i]);
    }
    classifier.labels = oracle.tasks.clone();
    classifier.weights = weights;
    classifier.bias = bias;

    Ok(QueryContextPipeline {
        provider: Box::new(provider),
        classifier,
        clusters: ClusterModel::new(oracle.k_clusters)?,
        binner: ComplexityBinner::default(),
        features,
        update_clusters: true,
    })
}

/// A model introduced mid-run, with its ground-truth expected accuracy.
pub struct ModelAddition {
    pub at_step: usize,
    pub entry: ModelEntry,
    pub acc_mean: f64,
}

/// Executes the step loop over a prepared query list.
pub fn run_stream(
    mut oracle: OracleSpec,
    mut pool: ModelPool,
    params: RewardParams,
    queries: &[Query],
    mut chooser: Chooser,
    l_max_ms: f64,
    seed: u64,
    mut addition: Option<ModelAddition>,
    config_snapshot: serde_json::Value,
) -> Result<ExperimentResult> {
    let mut outcome_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b9).wrapping_add(17));
    let mut table = RewardTable::build(&oracle, &pool, params)?;
    let mut records = Vec::with_capacity(queries.len());
    let mut acc_sum = 0.0;
    let mut energy_sum = 0.0;
    let mut regret_sum = 0.0;

    for (step, q) in queries.iter().enumerate() {
        if let Some(add) = &addition {
            if step == add.at_step {
                let add = addition.take().unwrap();
                add_model_to_oracle(&mut oracle, &add.entry.id, add.acc_mean);
                pool.add_model(add.entry.clone())?;
                if let Chooser::Bandit { policy, .. } = &mut chooser {
                    policy.add_arm(&add.entry.id)?;
                }
                table = RewardTable::build(&oracle, &pool, params)?;
            }
        }

        // context extraction (bandit only) and the task used for feasibility
        let (context, predicted_task) = match &mut chooser {
            Chooser::Bandit { pipeline, .. } => {
                let (x, breakdown, _) = pipeline
                    .generate_context(&q.text)
                    .map_err(|e| step_error(e, step))?;
                (Some(x), breakdown.task_label)
            }
            _ => (None, oracle.tasks[q.cell.task].clone()),
        };

        let feasible = pool
            .feasible_set(
                &FeasibilityQuery {
                    task: predicted_task,
                    l_max_ms,
                },
                DEFAULT_OVERHEAD_MS,
            )
            .map_err(|e| step_error(e, step))?;

        let chosen = match &mut chooser {
            Chooser::Bandit { policy, .. } => {
                let x = context.as_ref().expect("bandit runs carry context");
                policy.select(x, &feasible).map_err(|e| step_error(e, step))?.arm_id
            }
            Chooser::Fixed(id) => {
                if pool.get(id).map(|e| e.active) != Some(true) {
                    return Err(Error::invalid(format!("designated model {id:?} not active")));
                }
                id.clone()
            }
            Chooser::Random(rng) => feasible[rng.gen_range(0..feasible.len())].clone(),
        };

        let observation = oracle
            .sample_outcome(&pool, &chosen, q.cell, &mut outcome_rng)
            .map_err(|e| step_error(e, step))?;
        let reward = params.reward(observation.accuracy_norm, observation.energy_norm);

        if let Chooser::Bandit { policy, .. } = &mut chooser {
            let x = context.as_ref().expect("bandit runs carry context");
            policy.update(&chosen, x, reward).map_err(|e| step_error(e, step))?;
        }

        let expected_chosen = table.reward(&oracle, &chosen, q.cell)?;
        let (optimal_arm, expected_optimal) = table.optimal(&oracle, q.cell, &feasible)?;
        let regret = expected_optimal - expected_chosen;

        acc_sum += observation.accuracy_norm;
        energy_sum += observation.energy_wh;
        regret_sum += regret;
        records.push(DecisionRecord {
            step,
            query_id: q.id.clone(),
            cell: q.cell,
            chosen,
            observation,
            reward,
            expected_reward_chosen: expected_chosen,
            optimal_arm,
            expected_reward_optimal: expected_optimal,
            regret,
            regret_realized: expected_optimal - reward,
        });
    }

    let n = records.len().max(1) as f64;
    let _ = table.accuracies; // retained for sweep aggregation via records
    Ok(ExperimentResult {
        mean_accuracy_norm: acc_sum / n,
        total_energy_wh: energy_sum,
        cumulative_regret: regret_sum,
        records,
        seed,
        config: config_snapshot,
    })
}

fn step_error(e: Error, step: usize) -> Error {
    Error::InvalidInput(format!("step {step}: {e}"))
}

/// Runs one bandit policy over a fresh stream.
pub fn run_policy(
    oracle: &OracleSpec,
    pool: &ModelPool,
    cfg: &SimConfig,
) -> Result<ExperimentResult> {
    let params = RewardParams::new(cfg.lambda)?;
    let stream = QueryStream::new(cfg.stream.clone())?;
    let queries = stream.generate()?;
    let pipeline = build_pipeline(&stream, oracle, cfg.features)?;
    let d = pipeline.context_dim();
    let policy = Policy::init(cfg.policy.clone(), &pool.active_ids(), d)?;
    run_stream(
        oracle.clone(),
        pool.clone(),
        params,
        &queries,
        Chooser::Bandit { policy, pipeline },
        cfg.l_max_ms,
        cfg.policy.seed,
        None,
        serde_json::to_value(cfg)?,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Random,
    Largest,
    Smallest,
    HighestAccuracy,
}

/// Runs one static or random baseline over a fresh stream.
pub fn run_baseline(
    kind: BaselineKind,
    oracle: &OracleSpec,
    pool: &ModelPool,
    cfg: &SimConfig,
) -> Result<ExperimentResult> {
    let params = RewardParams::new(cfg.lambda)?;
    let stream = QueryStream::new(cfg.stream.clone())?;
    let queries = stream.generate()?;
    let pick_extreme = |largest: bool| -> Result<String> {
        pool.entries()
            .iter()
            .filter(|e| e.active)
            .max_by(|a, b| {
                let (pa, pb) = if largest {
                    (a.params_b, b.params_b)
                } else {
                    (-a.params_b, -b.params_b)
                };
                pa.partial_cmp(&pb).unwrap()
            })
            .map(|e| e.id.clone())
            .ok_or(Error::NoFeasibleArm)
    };
    let chooser = match kind {
        BaselineKind::Random => {
            Chooser::Random(ChaCha8Rng::seed_from_u64(cfg.policy.seed.wrapping_add(0xbead)))
        }
        BaselineKind::Largest => Chooser::Fixed(pick_extreme(true)?),
        BaselineKind::Smallest => Chooser::Fixed(pick_extreme(false)?),
        BaselineKind::HighestAccuracy => Chooser::Fixed(oracle.max_accuracy_arm()),
    };
    if let Chooser::Fixed(id) = &chooser {
        if pool.get(id).is_none() {
            return Err(Error::invalid(format!("designated model {id:?} missing")));
        }
    }
    run_stream(
        oracle.clone(),
        pool.clone(),
        params,
        &queries,
        chooser,
        cfg.l_max_ms,
        cfg.policy.seed,
        None,
        serde_json::json!({ "baseline": kind, "sim": cfg }),
    )
}
