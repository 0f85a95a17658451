//! Task-type classification via multinomial logistic regression on embeddings.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::embedding::EmbeddingVector;
use crate::error::{Error, Result};

/// Logistic-regression task classifier: p(l | e) = softmax(W e + b).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskClassifier {
    pub labels: Vec<String>,
    /// Row-major, one row per label.
    #[serde(rename = "W")]
    pub weights: Vec<Vec<f64>>,
    #[serde(rename = "b")]
    pub bias: Vec<f64>,
    pub d_emb: usize,
}

#[derive(Debug, Clone)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub weight_decay: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 0.1,
            iterations: 500,
            weight_decay: 1e-4,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Classifier plus the macro-F1 measured on the held-out split.
#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    pub classifier: TaskClassifier,
    pub validation_macro_f1: f64,
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

impl TaskClassifier {
    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    fn logits(&self, e: &EmbeddingVector) -> Result<Vec<f64>> {
        if e.dim() != self.d_emb {
            return Err(Error::invalid(format!(
                "embedding dimension {} does not match classifier d_emb {}",
                e.dim(),
                self.d_emb
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(&e.values).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect())
    }

    /// Returns (argmax label index, class probabilities). Ties break to the
    /// lowest label index.
    pub fn classify(&self, e: &EmbeddingVector) -> Result<(usize, Vec<f64>)> {
        let probs = softmax(&self.logits(e)?);
        let mut best = 0;
        for (i, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = i;
            }
        }
        Ok((best, probs))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// Mean cross-entropy loss with L2 weight decay, and its gradient.
/// Exposed for the finite-difference check in tests.
pub fn loss_and_gradient(
    weights: &[Vec<f64>],
    bias: &[f64],
    samples: &[(Vec<f64>, usize)],
    weight_decay: f64,
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let n_classes = weights.len();
    let d = weights[0].len();
    let n = samples.len() as f64;
    let mut grad_w = vec![vec![0.0; d]; n_classes];
    let mut grad_b = vec![0.0; n_classes];
    let mut loss = 0.0;
    for (x, y) in samples {
        let logits: Vec<f64> = weights
            .iter()
            .zip(bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect();
        let probs = softmax(&logits);
        loss -= probs[*y].max(1e-300).ln();
        for c in 0..n_classes {
            let err = probs[c] - if c == *y { 1.0 } else { 0.0 };
            grad_b[c] += err / n;
            for j in 0..d {
                grad_w[c][j] += err * x[j] / n;
            }
        }
    }
    loss /= n;
    for c in 0..n_classes {
        for j in 0..d {
            loss += 0.5 * weight_decay * weights[c][j] * weights[c][j];
            grad_w[c][j] += weight_decay * weights[c][j];
        }
    }
    (loss, grad_w, grad_b)
}

fn macro_f1(preds: &[usize], truth: &[usize], n_classes: usize) -> f64 {
    let mut f1_sum = 0.0;
    for c in 0..n_classes {
        let tp = preds
            .iter()
            .zip(truth)
            .filter(|(p, t)| **p == c && **t == c)
            .count() as f64;
        let fp = preds
            .iter()
            .zip(truth)
            .filter(|(p, t)| **p == c && **t != c)
            .count() as f64;
        let fneg = preds
            .iter()
            .zip(truth)
            .filter(|(p, t)| **p != c && **t == c)
            .count() as f64;
        let denom = 2.0 * tp + fp + fneg;
        f1_sum += if denom == 0.0 { 0.0 } else { 2.0 * tp / denom };
    }
    f1_sum / n_classes as f64
}

/// Full-batch gradient descent on softmax cross-entropy. Deterministic for a
/// fixed seed (the seed only drives the train/validation shuffle; weights
/// start at zero).
pub fn train_task_classifier(
    pairs: &[(EmbeddingVector, String)],
    config: &TrainingConfig,
) -> Result<TrainedClassifier> {
    if pairs.is_empty() {
        return Err(Error::invalid("no training pairs"));
    }
    let d_emb = pairs[0].0.dim();
    if pairs.iter().any(|(e, _)| e.dim() != d_emb) {
        return Err(Error::invalid("training embeddings have mixed dimensions"));
    }
    let mut labels: Vec<String> = pairs.iter().map(|(_, l)| l.clone()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::DegenerateTraining(
            "need at least 2 distinct labels".into(),
        ));
    }

    let label_idx = |l: &str| labels.iter().position(|x| x == l).unwrap();
    let mut indexed: Vec<(Vec<f64>, usize)> = pairs
        .iter()
        .map(|(e, l)| (e.values.clone(), label_idx(l)))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    indexed.shuffle(&mut rng);
    let n_val = ((indexed.len() as f64) * config.validation_fraction).round() as usize;
    let n_val = n_val.min(indexed.len().saturating_sub(1));
    let (val, train) = indexed.split_at(n_val);
    let train: Vec<(Vec<f64>, usize)> = train.to_vec();

    let n_classes = labels.len();
    let mut weights = vec![vec![0.0; d_emb]; n_classes];
    let mut bias = vec![0.0; n_classes];
    for _ in 0..config.iterations {
        let (_, grad_w, grad_b) =
            loss_and_gradient(&weights, &bias, &train, config.weight_decay);
        for c in 0..n_classes {
            bias[c] -= config.learning_rate * grad_b[c];
            for j in 0..d_emb {
                weights[c][j] -= config.learning_rate * grad_w[c][j];
            }
        }
    }

    let classifier = TaskClassifier {
        labels,
        weights,
        bias,
        d_emb,
    };

    let eval_set: &[(Vec<f64>, usize)] = if val.is_empty() { &train } else { val };
    let mut preds = Vec::with_capacity(eval_set.len());
    let mut truth = Vec::with_capacity(eval_set.len());
    for (x, y) in eval_set {
        let (p, _) = classifier.classify(&EmbeddingVector::new(x.clone()))?;
        preds.push(p);
        truth.push(*y);
    }
    let validation_macro_f1 = macro_f1(&preds, &truth, classifier.n_labels());

    Ok(TrainedClassifier {
        classifier,
        validation_macro_f1,
    })
}
