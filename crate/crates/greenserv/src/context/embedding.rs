//! Embedding providers.
//!
//! Two implementations ship with the crate: a deterministic feature-hashing
//! embedder used throughout the tests and simulator, and a provider that
//! serves precomputed vectors from a JSON Lines file (for pairing with an
//! external sentence-embedding model).

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// A fixed-dimension embedding with its Euclidean norm cached.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub norm: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        EmbeddingVector { values, norm }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        if self.norm == 0.0 || other.norm == 0.0 {
            return 0.0;
        }
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        dot / (self.norm * other.norm)
    }
}

pub trait EmbeddingProvider: Send + Sync {
    /// Output dimension, constant per session.
    fn dim(&self) -> usize;

    /// Maximum number of whitespace tokens consumed; longer inputs are
    /// truncated before embedding.
    fn token_limit(&self) -> usize {
        256
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector>;
}

/// Embeds text deterministically via hashed token n-grams.
///
/// Tokens are lowercased maximal alphanumeric runs; unigrams and bigrams are
/// FNV-hashed into `dim` buckets and the bucket vector is L2-normalized.
pub struct HashingEmbedder {
    dim: usize,
    token_limit: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder {
            dim: 64,
            token_limit: 256,
        }
    }
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        HashingEmbedder { dim, token_limit: 256 }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub(crate) fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            tokens.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

impl EmbeddingProvider for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn token_limit(&self) -> usize {
        self.token_limit
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        if text.trim().is_empty() {
            return Err(Error::invalid("cannot embed empty text"));
        }
        let mut tokens = tokenize(text);
        tokens.truncate(self.token_limit);
        let mut buckets = vec![0.0_f64; self.dim];
        for tok in &tokens {
            let h = fnv1a(tok.as_bytes());
            let idx = (h % self.dim as u64) as usize;
            // sign bit decorrelates colliding tokens
            let sign = if (h >> 63) & 1 == 0 { 1.0 } else { -1.0 };
            buckets[idx] += sign;
        }
        for pair in tokens.windows(2) {
            let joined = format!("{} {}", pair[0], pair[1]);
            let h = fnv1a(joined.as_bytes());
            let idx = (h % self.dim as u64) as usize;
            let sign = if (h >> 63) & 1 == 0 { 1.0 } else { -1.0 };
            buckets[idx] += sign;
        }
        let norm = buckets.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut buckets {
                *v /= norm;
            }
        }
        Ok(EmbeddingVector::new(buckets))
    }
}

#[derive(Deserialize)]
struct PrecomputedLine {
    id: String,
    vector: Vec<f64>,
}

/// Serves precomputed embeddings keyed by id.
///
/// The file format is JSON Lines, one `{"id": ..., "vector": [...]}` object
/// per line. `embed` looks the input text up verbatim as the id, so callers
/// either key the file by prompt text or pass ids in place of text.
pub struct PrecomputedEmbeddings {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl PrecomputedEmbeddings {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut vectors = HashMap::new();
        let mut dim = None;
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: PrecomputedLine = serde_json::from_str(&line)?;
            match dim {
                None => dim = Some(parsed.vector.len()),
                Some(d) if d != parsed.vector.len() => {
                    return Err(Error::invalid(format!(
                        "embedding dimension mismatch in file: {} vs {}",
                        d,
                        parsed.vector.len()
                    )));
                }
                _ => {}
            }
            vectors.insert(parsed.id, parsed.vector);
        }
        let dim = dim.ok_or_else(|| Error::invalid("embedding file is empty"))?;
        Ok(PrecomputedEmbeddings { dim, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl EmbeddingProvider for PrecomputedEmbeddings {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        if text.trim().is_empty() {
            return Err(Error::invalid("cannot embed empty text"));
        }
        self.vectors
            .get(text)
            .map(|v| EmbeddingVector::new(v.clone()))
            .ok_or_else(|| Error::Provider(format!("no precomputed embedding for id {text:?}")))
    }
}
