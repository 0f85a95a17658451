//! Online K-means over query embeddings with cosine-similarity assignment.

use crate::context::embedding::EmbeddingVector;
use crate::error::{Error, Result};

/// Incremental K-means state. Centroids seed from the first K distinct
/// embeddings (pairwise cosine similarity below 0.999 counts as distinct).
#[derive(Debug, Clone)]
pub struct ClusterModel {
    pub k: usize,
    centroids: Vec<Vec<f64>>,
    counts: Vec<u64>,
}

impl ClusterModel {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("cluster count must be positive"));
        }
        Ok(ClusterModel {
            k,
            centroids: Vec::new(),
            counts: Vec::new(),
        })
    }

    pub fn is_initialized(&self) -> bool {
        self.centroids.len() == self.k
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_updates(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }

    /// Seeds a new centroid if the model still needs one and `e` is distinct
    /// from all existing centroids. Returns the index the point landed on.
    pub fn observe_for_init(&mut self, e: &EmbeddingVector) -> Result<usize> {
        if e.norm == 0.0 {
            return Err(Error::invalid("zero embedding"));
        }
        if self.centroids.len() < self.k {
            let distinct = self
                .centroids
                .iter()
                .all(|c| Self::cosine(c, &e.values) < 0.999);
            if distinct {
                self.centroids.push(e.values.clone());
                self.counts.push(1);
                return Ok(self.centroids.len() - 1);
            }
        }
        let c = self.assign(e)?;
        self.update(e, c)?;
        Ok(c)
    }

    /// Argmax of cosine similarity against current centroids; ties break to
    /// the lowest index.
    pub fn assign(&self, e: &EmbeddingVector) -> Result<usize> {
        if self.centroids.is_empty() {
            return Err(Error::NotReady("cluster model has no centroids".into()));
        }
        if e.norm == 0.0 {
            return Err(Error::invalid("zero embedding"));
        }
        let mut best = 0;
        let mut best_sim = Self::cosine(&self.centroids[0], &e.values);
        for (i, c) in self.centroids.iter().enumerate().skip(1) {
            let sim = Self::cosine(c, &e.values);
            if sim > best_sim {
                best = i;
                best_sim = sim;
            }
        }
        Ok(best)
    }

    /// mu_c <- mu_c + (e - mu_c) / (N_c + 1); N_c <- N_c + 1
    pub fn update(&mut self, e: &EmbeddingVector, c: usize) -> Result<()> {
        if c >= self.centroids.len() {
            return Err(Error::invalid(format!("cluster index {c} out of range")));
        }
        let n = self.counts[c];
        let lr = 1.0 / (n as f64 + 1.0);
        for (mu, x) in self.centroids[c].iter_mut().zip(&e.values) {
            *mu += lr * (x - *mu);
        }
        self.counts[c] = n + 1;
        Ok(())
    }
}
