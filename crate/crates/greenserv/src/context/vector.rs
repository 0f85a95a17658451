//! One-hot context vector assembly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The bandit input x_t: one-hot task, cluster and complexity blocks plus a
/// trailing bias entry fixed at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextVector {
    pub values: Vec<f64>,
}

impl ContextVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Bias-only context for context-free policies.
    pub fn bias_only() -> Self {
        ContextVector { values: vec![1.0] }
    }
}

/// Block sizes for the full context encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextDims {
    pub n_tasks: usize,
    pub k_clusters: usize,
    pub n_bins: usize,
}

impl ContextDims {
    pub fn dim(&self) -> usize {
        self.n_tasks + self.k_clusters + self.n_bins + 1
    }
}

/// Which feature blocks participate in the encoding (for ablation studies).
/// The bias entry is always present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureConfig {
    None,
    Task,
    Cluster,
    Complexity,
    TaskCluster,
    TaskComplexity,
    ClusterComplexity,
    Full,
}

impl FeatureConfig {
    pub fn uses_task(&self) -> bool {
        matches!(
            self,
            FeatureConfig::Task
                | FeatureConfig::TaskCluster
                | FeatureConfig::TaskComplexity
                | FeatureConfig::Full
        )
    }

    pub fn uses_cluster(&self) -> bool {
        matches!(
            self,
            FeatureConfig::Cluster
                | FeatureConfig::TaskCluster
                | FeatureConfig::ClusterComplexity
                | FeatureConfig::Full
        )
    }

    pub fn uses_complexity(&self) -> bool {
        matches!(
            self,
            FeatureConfig::Complexity
                | FeatureConfig::TaskComplexity
                | FeatureConfig::ClusterComplexity
                | FeatureConfig::Full
        )
    }

    pub fn dim(&self, dims: ContextDims) -> usize {
        let mut d = 1;
        if self.uses_task() {
            d += dims.n_tasks;
        }
        if self.uses_cluster() {
            d += dims.k_clusters;
        }
        if self.uses_complexity() {
            d += dims.n_bins;
        }
        d
    }

    /// Encodes the selected blocks; indices outside their block are rejected.
    pub fn encode(
        &self,
        dims: ContextDims,
        task: usize,
        cluster: usize,
        bin: usize,
    ) -> Result<ContextVector> {
        check_range("task", task, dims.n_tasks)?;
        check_range("cluster", cluster, dims.k_clusters)?;
        check_range("bin", bin, dims.n_bins)?;
        let mut values = Vec::with_capacity(self.dim(dims));
        if self.uses_task() {
            values.extend(one_hot(task, dims.n_tasks));
        }
        if self.uses_cluster() {
            values.extend(one_hot(cluster, dims.k_clusters));
        }
        if self.uses_complexity() {
            values.extend(one_hot(bin, dims.n_bins));
        }
        values.push(1.0);
        Ok(ContextVector { values })
    }
}

fn one_hot(idx: usize, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if i == idx { 1.0 } else { 0.0 })
}

fn check_range(name: &str, idx: usize, n: usize) -> Result<()> {
    if idx >= n {
        return Err(Error::invalid(format!(
            "{name} index {idx} out of range (block size {n})"
        )));
    }
    Ok(())
}

/// Full encoding [onehot(task) | onehot(cluster) | onehot(bin) | 1].
pub fn build_context(
    task: usize,
    cluster: usize,
    bin: usize,
    dims: ContextDims,
) -> Result<ContextVector> {
    FeatureConfig::Full.encode(dims, task, cluster, bin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_scale_dimension() {
        let dims = ContextDims {
            n_tasks: 5,
            k_clusters: 3,
            n_bins: 3,
        };
        assert_eq!(dims.dim(), 12);
        let x = build_context(2, 1, 0, dims).unwrap();
        assert_eq!(x.dim(), 12);
    }

    #[test]
    fn smallest_indices_layout() {
        let dims = ContextDims {
            n_tasks: 2,
            k_clusters: 2,
            n_bins: 2,
        };
        let x = build_context(0, 0, 0, dims).unwrap();
        assert_eq!(x.values, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn out_of_range_rejected() {
        let dims = ContextDims {
            n_tasks: 5,
            k_clusters: 3,
            n_bins: 3,
        };
        assert!(build_context(5, 0, 0, dims).is_err());
    }

    #[test]
    fn ablated_dims() {
        let dims = ContextDims {
            n_tasks: 5,
            k_clusters: 3,
            n_bins: 3,
        };
        assert_eq!(FeatureConfig::None.dim(dims), 1);
        assert_eq!(FeatureConfig::Task.dim(dims), 6);
        assert_eq!(FeatureConfig::TaskCluster.dim(dims), 9);
        assert_eq!(FeatureConfig::Full.dim(dims), 12);
        let x = FeatureConfig::None.encode(dims, 4, 2, 2).unwrap();
        assert_eq!(x.values, vec![1.0]);
    }
}
