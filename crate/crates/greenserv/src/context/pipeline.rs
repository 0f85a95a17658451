//! End-to-end query feature extraction: embed, classify, cluster, score.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::context::classifier::TaskClassifier;
use crate::context::cluster::ClusterModel;
use crate::context::embedding::EmbeddingProvider;
use crate::context::flesch::{flesch_score, ComplexityBinner};
use crate::context::vector::{ContextDims, ContextVector, FeatureConfig};
use crate::error::{Error, Result};

/// Per-query feature values with their raw intermediates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureBreakdown {
    pub task: usize,
    pub task_label: String,
    pub cluster: usize,
    pub bin: usize,
    pub flesch_raw: f64,
    pub flesch_score: f64,
}

/// Wall-clock milliseconds spent in each extraction stage.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub classify_ms: f64,
    pub cluster_ms: f64,
    pub complexity_ms: f64,
}

impl StageTimings {
    pub fn total_ms(&self) -> f64 {
        self.classify_ms + self.cluster_ms + self.complexity_ms
    }
}

/// Feature pipeline owning the extraction stages. Cluster centroids mutate on
/// every query, so callers hold `&mut` (a single-writer contract; wrap in a
/// lock for concurrent use).
pub struct QueryContextPipeline {
    pub provider: Box<dyn EmbeddingProvider>,
    pub classifier: TaskClassifier,
    pub clusters: ClusterModel,
    pub binner: ComplexityBinner,
    pub features: FeatureConfig,
    /// When false, cluster centroids are left untouched (frozen snapshot).
    pub update_clusters: bool,
}

impl QueryContextPipeline {
    pub fn dims(&self) -> ContextDims {
        ContextDims {
            n_tasks: self.classifier.n_labels(),
            k_clusters: self.clusters.k,
            n_bins: self.binner.n_bins,
        }
    }

    pub fn context_dim(&self) -> usize {
        self.features.dim(self.dims())
    }

    /// First 2 lines or first 200 characters of the prompt, whichever is
    /// shorter.
    pub fn instruction_slice(text: &str) -> &str {
        let mut end = text.len();
        let mut newlines = 0;
        for (i, ch) in text.char_indices() {
            if ch == '\n' {
                newlines += 1;
                if newlines == 2 {
                    end = i;
                    break;
                }
            }
        }
        let char_cap = text
            .char_indices()
            .nth(200)
            .map(|(i, _)| i)
            .unwrap_or(text.len());
        &text[..end.min(char_cap)]
    }

    /// Runs the full extraction chain and reports per-stage timings.
    /// Cluster assignment uses the current centroids; the centroid update for
    /// this query happens after assignment (and only if `update_clusters`).
    pub fn generate_context(
        &mut self,
        text: &str,
    ) -> Result<(ContextVector, FeatureBreakdown, StageTimings)> {
        if text.trim().is_empty() {
            return Err(Error::invalid("empty query text").in_stage("embed"));
        }
        let mut timings = StageTimings::default();

        let t0 = Instant::now();
        let instr = Self::instruction_slice(text);
        let e_instr = self
            .provider
            .embed(instr)
            .map_err(|e| e.in_stage("embed"))?;
        let (task, _probs) = self
            .classifier
            .classify(&e_instr)
            .map_err(|e| e.in_stage("classify"))?;
        timings.classify_ms = t0.elapsed().as_secs_f64() * 1e3;

        let t1 = Instant::now();
        let e_full = self
            .provider
            .embed(text)
            .map_err(|e| e.in_stage("embed"))?;
        let cluster = if self.clusters.is_initialized() {
            let c = self
                .clusters
                .assign(&e_full)
                .map_err(|e| e.in_stage("cluster"))?;
            if self.update_clusters {
                self.clusters
                    .update(&e_full, c)
                    .map_err(|e| e.in_stage("cluster"))?;
            }
            c
        } else if self.update_clusters {
            self.clusters
                .observe_for_init(&e_full)
                .map_err(|e| e.in_stage("cluster"))?
        } else {
            // frozen, partially initialized: nearest existing centroid
            self.clusters
                .assign(&e_full)
                .map_err(|e| e.in_stage("cluster"))?
        };
        timings.cluster_ms = t1.elapsed().as_secs_f64() * 1e3;

        let t2 = Instant::now();
        let flesch = flesch_score(text).map_err(|e| e.in_stage("complexity"))?;
        let bin = self.binner.bin(flesch.score);
        timings.complexity_ms = t2.elapsed().as_secs_f64() * 1e3;

        let vector = self
            .features
            .encode(self.dims(), task, cluster, bin)
            .map_err(|e| e.in_stage("encode"))?;
        let breakdown = FeatureBreakdown {
            task,
            task_label: self.classifier.labels[task].clone(),
            cluster,
            bin,
            flesch_raw: flesch.raw,
            flesch_score: flesch.score,
        };
        Ok((vector, breakdown, timings))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::classifier::{train_task_classifier, TrainingConfig};
    use crate::context::embedding::HashingEmbedder;

    fn test_pipeline() -> QueryContextPipeline {
        let provider = HashingEmbedder::default();
        let mut pairs = Vec::new();
        for i in 0..40 {
            let (text, label) = if i % 2 == 0 {
                (format!("summarize the following article number {i}"), "summarization")
            } else {
                (format!("solve the math problem number {i}"), "math")
            };
            pairs.push((provider.embed(&text).unwrap(), label.to_string()));
        }
        let trained = train_task_classifier(&pairs, &TrainingConfig::default()).unwrap();
        let mut clusters = ClusterModel::new(2).unwrap();
        clusters
            .observe_for_init(&provider.embed("finance markets stocks trading").unwrap())
            .unwrap();
        clusters
            .observe_for_init(&provider.embed("biology cells proteins enzymes").unwrap())
            .unwrap();
        QueryContextPipeline {
            provider: Box::new(provider),
            classifier: trained.classifier,
            clusters,
            binner: ComplexityBinner::default(),
            features: FeatureConfig::Full,
            update_clusters: true,
        }
    }

    #[test]
    fn one_hot_structure_holds() {
        let mut p = test_pipeline();
        let (x, _, _) = p
            .generate_context("summarize the quarterly finance markets report.")
            .unwrap();
        let ones = x.values.iter().filter(|v| **v == 1.0).count();
        assert_eq!(ones, 4);
        assert!(x.values.iter().all(|v| *v == 0.0 || *v == 1.0));
        assert_eq!(x.dim(), p.context_dim());
    }

    #[test]
    fn frozen_clusters_make_context_deterministic() {
        let mut p = test_pipeline();
        p.update_clusters = false;
        let q = "solve the math problem about biology cells quickly.";
        let (a, _, _) = p.generate_context(q).unwrap();
        let (b, _, _) = p.generate_context(q).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mass_conservation_across_pipeline_updates() {
        let mut p = test_pipeline();
        let before = p.clusters.total_updates();
        for i in 0..10 {
            p.generate_context(&format!("summarize item {i} about markets."))
                .unwrap();
        }
        assert_eq!(p.clusters.total_updates(), before + 10);
    }

    #[test]
    fn empty_query_fails_with_stage() {
        let mut p = test_pipeline();
        let err = p.generate_context("  ").unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "embed", .. }));
    }

    #[test]
    fn instruction_slice_bounds() {
        let text = "line one\nline two\nline three";
        assert_eq!(QueryContextPipeline::instruction_slice(text), "line one\nline two");
        let long = "x".repeat(500);
        assert_eq!(QueryContextPipeline::instruction_slice(&long).len(), 200);
    }
}
