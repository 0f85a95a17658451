//! The routing service: deferred-feedback Algorithm-1 loop behind a wire API.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::bandit::{checkpoint, Policy};
use crate::context::classifier::{train_task_classifier, TrainingConfig};
use crate::context::flesch::ComplexityBinner;
use crate::context::{
    ClusterModel, ContextVector, EmbeddingProvider, FeatureBreakdown, HashingEmbedder,
    QueryContextPipeline,
};
use crate::error::{Error, Result};
use crate::pool::{FeasibilityQuery, ModelEntry, ModelPool};
use crate::reward::{normalize_accuracy, normalize_energy, RewardParams};
use crate::service::config::ServiceConfig;
use crate::service::log::{DecisionLog, LogRecord, ServiceDecisionRecord};
use crate::sim::runner::DEFAULT_OVERHEAD_MS;
use crate::sim::stream::{QueryStream, StreamConfig};

/// Service-level failures with their HTTP class.
#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("unavailable: {0}")]
    Unavailable(String),
    #[error(transparent)]
    Internal(#[from] Error),
}

impl ServiceError {
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::BadRequest(_) => 400,
            ServiceError::NotFound(_) => 404,
            ServiceError::Conflict(_) => 409,
            ServiceError::Unavailable(_) => 503,
            ServiceError::Internal(_) => 500,
        }
    }
}

pub type ServiceResult<T> = std::result::Result<T, ServiceError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteRequest {
    pub request_id: String,
    pub text: String,
    #[serde(default)]
    pub l_max_ms: Option<f64>,
    #[serde(default)]
    pub lambda_override: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteResponse {
    pub request_id: String,
    pub model_id: String,
    pub context: FeatureBreakdown,
    pub scores: Vec<(String, f64)>,
    pub decision_latency_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedbackReport {
    pub request_id: String,
    pub accuracy_raw: f64,
    #[serde(default = "default_metric")]
    pub metric: String,
    pub energy_wh: f64,
    pub latency_ms: f64,
}

fn default_metric() -> String {
    "task_metric".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedbackAck {
    pub request_id: String,
    pub reward: f64,
    pub finalized: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PoolOp {
    Add { entry: ModelEntry },
    Deactivate { id: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmStats {
    pub id: String,
    pub active: bool,
    pub pulls: u64,
    pub mean_reward: f64,
    pub theta_norm: f64,
    pub selection_frequency: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsSnapshot {
    pub arms: Vec<ArmStats>,
    pub routed: u64,
    pub finalized: u64,
    pub pending: usize,
    pub expired: u64,
    pub realized_reward_total: f64,
    pub mean_classify_ms: f64,
    pub mean_cluster_ms: f64,
    pub mean_complexity_ms: f64,
    pub mean_select_ms: f64,
}

struct PendingDecision {
    chosen: String,
    context: ContextVector,
    lambda: f64,
    routed_at: Instant,
}

#[derive(Default)]
struct OverheadSums {
    classify_ms: f64,
    cluster_ms: f64,
    complexity_ms: f64,
    select_ms: f64,
    n: u64,
}

struct Inner {
    pool: ModelPool,
    policy: Policy,
    pipeline: QueryContextPipeline,
    pending: HashMap<String, PendingDecision>,
    finalized_ids: HashSet<String>,
    expired_ids: HashSet<String>,
    selections: BTreeMap<String, u64>,
    routed: u64,
    finalized: u64,
    expired: u64,
    realized_reward_total: f64,
    overhead: OverheadSums,
    log: Option<DecisionLog>,
}

/// Thread-safe router. All mutations (selection, learning, churn, expiry)
/// serialize through one lock, which also orders log appends identically to
/// bandit updates.
pub struct RouterService {
    config: ServiceConfig,
    inner: Mutex<Inner>,
}

/// Builds the default pipeline: hashing embedder, classifier trained on a
/// synthetic labeled warmup, fresh clusters.
pub fn default_pipeline(config: &ServiceConfig) -> Result<QueryContextPipeline> {
    let provider = HashingEmbedder::default();
    let stream = QueryStream::new(StreamConfig {
        t: 1,
        task_mix: Vec::new(),
        seed: config.policy.seed,
    })?;
    let warmup = stream.labeled_warmup(150)?;
    let pairs = warmup
        .iter()
        .map(|(text, label)| {
            let instr = QueryContextPipeline::instruction_slice(text);
            Ok((provider.embed(instr)?, label.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let trained = train_task_classifier(&pairs, &TrainingConfig::default())?;
    Ok(QueryContextPipeline {
        provider: Box::new(provider),
        classifier: trained.classifier,
        clusters: ClusterModel::new(config.k_clusters)?,
        binner: ComplexityBinner::new(config.n_bins, 0.0, 100.0)?,
        features: config.features,
        update_clusters: true,
    })
}

impl RouterService {
    pub fn new(
        config: ServiceConfig,
        pool: ModelPool,
        pipeline: QueryContextPipeline,
    ) -> Result<Self> {
        config.validate()?;
        let d = pipeline.context_dim();
        let arms = pool.active_ids();
        let policy = Policy::init(config.policy.clone(), &arms, d)?;
        let log = match &config.log_path {
            Some(path) => Some(DecisionLog::create(path, &config.policy, d, arms)?),
            None => None,
        };
        Ok(RouterService {
            config,
            inner: Mutex::new(Inner {
                pool,
                policy,
                pipeline,
                pending: HashMap::new(),
                finalized_ids: HashSet::new(),
                expired_ids: HashSet::new(),
                selections: BTreeMap::new(),
                routed: 0,
                finalized: 0,
                expired: 0,
                realized_reward_total: 0.0,
                overhead: OverheadSums::default(),
                log,
            }),
        })
    }

    /// Default pool plus warmup-trained pipeline.
    pub fn from_config(config: ServiceConfig) -> Result<Self> {
        let pool = match &config.pool_path {
            Some(path) => ModelPool::load_json(path)?,
            None => crate::pool::default_pool(),
        };
        let pipeline = default_pipeline(&config)?;
        RouterService::new(config, pool, pipeline)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn expire_locked(inner: &mut Inner, ttl: Duration, now: Instant) -> Result<()> {
        let expired: Vec<String> = inner
            .pending
            .iter()
            .filter(|(_, p)| now.duration_since(p.routed_at) >= ttl)
            .map(|(id, _)| id.clone())
            .collect();
        for id in expired {
            let p = inner.pending.remove(&id).expect("id just listed");
            inner.expired += 1;
            inner.expired_ids.insert(id.clone());
            if let Some(log) = &mut inner.log {
                log.append(&LogRecord::Expired {
                    request_id: id,
                    chosen: p.chosen,
                })?;
            }
        }
        Ok(())
    }

    /// Drops pending decisions older than the TTL (also runs inside every
    /// route/feedback call).
    pub fn sweep_expired(&self) -> ServiceResult<u64> {
        let mut inner = self.inner.lock();
        Self::expire_locked(
            &mut inner,
            Duration::from_secs(self.config.pending_ttl_secs),
            Instant::now(),
        )?;
        Ok(inner.expired)
    }

    pub fn route(&self, req: RouteRequest) -> ServiceResult<RouteResponse> {
        if req.text.trim().is_empty() {
            return Err(ServiceError::BadRequest("query text is empty".into()));
        }
        if req.request_id.is_empty() {
            return Err(ServiceError::BadRequest("request_id is empty".into()));
        }
        let lambda = match req.lambda_override {
            Some(l) => {
                RewardParams::new(l)
                    .map_err(|_| ServiceError::BadRequest("lambda_override outside [0, 1]".into()))?;
                l
            }
            None => self.config.lambda,
        };

        let started = Instant::now();
        let mut inner = self.inner.lock();
        Self::expire_locked(
            &mut inner,
            Duration::from_secs(self.config.pending_ttl_secs),
            started,
        )?;
        if inner.pending.contains_key(&req.request_id)
            || inner.finalized_ids.contains(&req.request_id)
            || inner.expired_ids.contains(&req.request_id)
        {
            return Err(ServiceError::Conflict(format!(
                "request_id {:?} already seen",
                req.request_id
            )));
        }
        if inner.pool.active_ids().is_empty() {
            return Err(ServiceError::Unavailable("no active models in pool".into()));
        }

        let (context, breakdown, timings) = inner
            .pipeline
            .generate_context(&req.text)
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let feasible = inner
            .pool
            .feasible_set(
                &FeasibilityQuery {
                    task: breakdown.task_label.clone(),
                    l_max_ms: req.l_max_ms.unwrap_or(self.config.l_max_default_ms),
                },
                DEFAULT_OVERHEAD_MS,
            )
            .map_err(|e| match e {
                Error::NoFeasibleArm => ServiceError::Unavailable("no active models in pool".into()),
                other => ServiceError::Internal(other),
            })?;
        let t_select = Instant::now();
        let selection = inner.policy.select(&context, &feasible)?;
        let select_ms = t_select.elapsed().as_secs_f64() * 1e3;

        inner.pending.insert(
            req.request_id.clone(),
            PendingDecision {
                chosen: selection.arm_id.clone(),
                context,
                lambda,
                routed_at: started,
            },
        );
        inner.routed += 1;
        *inner
            .selections
            .entry(selection.arm_id.clone())
            .or_insert(0) += 1;
        inner.overhead.classify_ms += timings.classify_ms;
        inner.overhead.cluster_ms += timings.cluster_ms;
        inner.overhead.complexity_ms += timings.complexity_ms;
        inner.overhead.select_ms += select_ms;
        inner.overhead.n += 1;

        Ok(RouteResponse {
            request_id: req.request_id,
            model_id: selection.arm_id,
            context: breakdown,
            scores: selection.scores,
            decision_latency_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }

    pub fn feedback(&self, fb: FeedbackReport) -> ServiceResult<FeedbackAck> {
        if !(fb.energy_wh >= 0.0) || !(fb.latency_ms >= 0.0) {
            return Err(ServiceError::BadRequest(
                "energy_wh and latency_ms must be nonnegative".into(),
            ));
        }
        let mut inner = self.inner.lock();
        Self::expire_locked(
            &mut inner,
            Duration::from_secs(self.config.pending_ttl_secs),
            Instant::now(),
        )?;
        let pending = match inner.pending.remove(&fb.request_id) {
            Some(p) => p,
            None => {
                return Err(
                    if inner.finalized_ids.contains(&fb.request_id)
                        || inner.expired_ids.contains(&fb.request_id)
                    {
                        ServiceError::Conflict(format!(
                            "request_id {:?} already finalized or expired",
                            fb.request_id
                        ))
                    } else {
                        ServiceError::NotFound(format!(
                            "no pending decision for request_id {:?}",
                            fb.request_id
                        ))
                    },
                );
            }
        };

        let accuracy_norm =
            normalize_accuracy(fb.accuracy_raw, self.config.acc_min, self.config.acc_max)?;
        let energy_norm = normalize_energy(fb.energy_wh, inner.pool.max_query_energy_wh()?)?;
        let params = RewardParams::new(pending.lambda)?;
        let reward = params.reward(accuracy_norm, energy_norm);

        inner
            .policy
            .update(&pending.chosen, &pending.context, reward)?;
        inner.finalized += 1;
        inner.finalized_ids.insert(fb.request_id.clone());
        inner.realized_reward_total += reward;

        let (task, cluster, bin) = decode_breakdown(&pending.context, &inner.pipeline);
        let record = ServiceDecisionRecord {
            request_id: fb.request_id.clone(),
            chosen: pending.chosen,
            context: pending.context.values,
            task,
            cluster,
            bin,
            lambda: pending.lambda,
            metric: fb.metric,
            accuracy_raw: fb.accuracy_raw,
            accuracy_norm,
            energy_wh: fb.energy_wh,
            energy_norm,
            latency_ms: fb.latency_ms,
            reward,
            finalized_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0),
        };
        if let Some(log) = &mut inner.log {
            log.append(&LogRecord::Decision(record))?;
        }

        if self.config.checkpoint_every > 0
            && inner.finalized % self.config.checkpoint_every == 0
        {
            if let Some(path) = &self.config.checkpoint_path {
                std::fs::write(path, checkpoint::to_json(&inner.policy)?)
                    .map_err(Error::from)?;
            }
        }

        Ok(FeedbackAck {
            request_id: fb.request_id,
            reward,
            finalized: inner.finalized,
        })
    }

    /// Atomic pool + bandit churn.
    pub fn pool_churn(&self, op: PoolOp) -> ServiceResult<()> {
        let mut inner = self.inner.lock();
        match op {
            PoolOp::Add { entry } => {
                entry
                    .validate()
                    .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
                inner
                    .pool
                    .add_model(entry.clone())
                    .map_err(|e| ServiceError::Conflict(e.to_string()))?;
                inner.policy.add_arm(&entry.id)?;
                if let Some(log) = &mut inner.log {
                    log.append(&LogRecord::AddModel { entry })?;
                }
            }
            PoolOp::Deactivate { id } => {
                inner
                    .pool
                    .deactivate_model(&id)
                    .map_err(|e| ServiceError::NotFound(e.to_string()))?;
                // bandit statistics stay; feasibility filtering excludes the
                // model, and pending feedback for it still lands
                if let Some(log) = &mut inner.log {
                    log.append(&LogRecord::DeactivateModel { id })?;
                }
            }
        }
        Ok(())
    }

    pub fn stats(&self) -> StatsSnapshot {
        let inner = self.inner.lock();
        let total_selected: u64 = inner.selections.values().sum();
        let arms = inner
            .policy
            .arms()
            .iter()
            .map(|arm| {
                let picked = inner.selections.get(&arm.id).copied().unwrap_or(0);
                ArmStats {
                    id: arm.id.clone(),
                    active: inner.pool.get(&arm.id).map(|e| e.active).unwrap_or(false),
                    pulls: arm.pulls,
                    mean_reward: arm.mean_reward(),
                    theta_norm: arm.theta_hat().norm(),
                    selection_frequency: if total_selected == 0 {
                        0.0
                    } else {
                        picked as f64 / total_selected as f64
                    },
                }
            })
            .collect();
        let n = inner.overhead.n.max(1) as f64;
        StatsSnapshot {
            arms,
            routed: inner.routed,
            finalized: inner.finalized,
            pending: inner.pending.len(),
            expired: inner.expired,
            realized_reward_total: inner.realized_reward_total,
            mean_classify_ms: inner.overhead.classify_ms / n,
            mean_cluster_ms: inner.overhead.cluster_ms / n,
            mean_complexity_ms: inner.overhead.complexity_ms / n,
            mean_select_ms: inner.overhead.select_ms / n,
        }
    }

    /// Current policy checkpoint (bit-exact schema).
    pub fn checkpoint_json(&self) -> Result<String> {
        checkpoint::to_json(&self.inner.lock().policy)
    }

    pub fn total_pulls(&self) -> u64 {
        self.inner.lock().policy.total_pulls()
    }
}

/// Recovers the one-hot block indices from a stored context vector so log
/// records stay self-describing even for ablated configurations.
fn decode_breakdown(x: &ContextVector, pipeline: &QueryContextPipeline) -> (usize, usize, usize) {
    let dims = pipeline.dims();
    let mut offset = 0;
    let mut read_block = |len: usize, used: bool| -> usize {
        if !used {
            return 0;
        }
        let idx = x.values[offset..offset + len]
            .iter()
            .position(|v| *v == 1.0)
            .unwrap_or(0);
        offset += len;
        idx
    };
    let task = read_block(dims.n_tasks, pipeline.features.uses_task());
    let cluster = read_block(dims.k_clusters, pipeline.features.uses_cluster());
    let bin = read_block(dims.n_bins, pipeline.features.uses_complexity());
    (task, cluster, bin)
}
