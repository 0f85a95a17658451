//! Synthetic query stream.
//!
//! Text is templated so every context feature is causally meaningful: the
//! first line's vocabulary encodes the task (separable by the hashing
//! embedder), topic words encode the semantic cluster, and sentence length /
//! syllable density steer the Flesch score into a target complexity bin. The
//! ground-truth bin is the one the generated text actually scores.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::flesch::{flesch_score, ComplexityBinner};
use crate::error::{Error, Result};
use crate::pool::DEFAULT_TASKS;
use crate::sim::oracle::ContextCell;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StreamConfig {
    pub t: usize,
    /// Per-task mix proportions; uniform when empty.
    #[serde(default)]
    pub task_mix: Vec<f64>,
    pub seed: u64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            t: 2500,
            task_mix: Vec::new(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Query {
    pub id: String,
    pub text: String,
    pub cell: ContextCell,
}

const TASK_INSTRUCTIONS: [&str; 5] = [
    "answer the following trivia question precisely",
    "complete the unfinished sentence below naturally",
    "pick the most sensible everyday outcome",
    "solve the arithmetic word problem step by step",
    "summarize the passage below in a few sentences",
];

const TOPICS: [[&str; 6]; 3] = [
    ["market", "stock", "profit", "trade", "price", "fund"],
    ["cell", "protein", "enzyme", "gene", "tissue", "organ"],
    ["journey", "hotel", "flight", "luggage", "beach", "tour"],
];

const EASY_WORDS: [&str; 12] = [
    "time", "work", "way", "day", "year", "part", "life", "world", "hand", "place", "week", "home",
];

const MEDIUM_WORDS: [&str; 10] = [
    "window", "standard", "body", "garden", "paper", "music", "under", "open", "water", "lesson",
];

const HARD_WORDS: [&str; 10] = [
    "information",
    "necessary",
    "development",
    "particular",
    "environment",
    "significant",
    "understanding",
    "approximately",
    "organization",
    "considerable",
];

pub struct QueryStream {
    pub config: StreamConfig,
    pub n_tasks: usize,
    pub n_clusters: usize,
    pub binner: ComplexityBinner,
}

impl QueryStream {
    pub fn new(config: StreamConfig) -> Result<Self> {
        if config.t == 0 {
            return Err(Error::invalid("stream length must be positive"));
        }
        if !config.task_mix.is_empty() {
            if config.task_mix.len() != DEFAULT_TASKS.len() {
                return Err(Error::invalid("task mix must cover all tasks"));
            }
            if config.task_mix.iter().any(|p| *p < 0.0) {
                return Err(Error::invalid("task mix proportions must be nonnegative"));
            }
        }
        Ok(QueryStream {
            config,
            n_tasks: DEFAULT_TASKS.len(),
            n_clusters: TOPICS.len(),
            binner: ComplexityBinner::default(),
        })
    }

    fn pick_task(&self, rng: &mut ChaCha8Rng) -> usize {
        if self.config.task_mix.is_empty() {
            rng.gen_range(0..self.n_tasks)
        } else {
            let total: f64 = self.config.task_mix.iter().sum();
            let mut r = rng.gen::<f64>() * total;
            for (i, p) in self.config.task_mix.iter().enumerate() {
                r -= p;
                if r <= 0.0 {
                    return i;
                }
            }
            self.n_tasks - 1
        }
    }

    fn sentence(
        &self,
        rng: &mut ChaCha8Rng,
        target_bin: usize,
        topic: usize,
    ) -> String {
        // (words per sentence, hard-word share) tuned so the Flesch score
        // lands inside the target bin
        let (len, hard_share, medium_share) = match target_bin {
            0 => (25, 0.65, 0.25),
            1 => (16, 0.05, 0.55),
            _ => (6, 0.0, 0.05),
        };
        let mut words: Vec<&str> = Vec::with_capacity(len + 1);
        words.push(TOPICS[topic].choose(rng).expect("topic words"));
        for _ in 1..len {
            let roll: f64 = rng.gen();
            let w = if roll < hard_share {
                HARD_WORDS.choose(rng).unwrap()
            } else if roll < hard_share + medium_share {
                MEDIUM_WORDS.choose(rng).unwrap()
            } else {
                EASY_WORDS.choose(rng).unwrap()
            };
            words.push(w);
        }
        format!("{}.", words.join(" "))
    }

    fn query_text(&self, rng: &mut ChaCha8Rng, task: usize, topic: usize, target_bin: usize) -> String {
        let n_sentences = rng.gen_range(2..=3);
        let body: Vec<String> = (0..n_sentences)
            .map(|_| self.sentence(rng, target_bin, topic))
            .collect();
        format!("{}\n{}", TASK_INSTRUCTIONS[task], body.join(" "))
    }

    /// Generates the full stream. Ground-truth cells use the generator's task
    /// and topic and the *measured* complexity bin of the emitted text.
    pub fn generate(&self) -> Result<Vec<Query>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut out = Vec::with_capacity(self.config.t);
        for i in 0..self.config.t {
            let task = self.pick_task(&mut rng);
            let topic = rng.gen_range(0..self.n_clusters);
            let target_bin = rng.gen_range(0..self.binner.n_bins);
            let text = self.query_text(&mut rng, task, topic, target_bin);
            let bin = self.binner.bin(flesch_score(&text)?.score);
            out.push(Query {
                id: format!("q{:06}", i),
                text,
                cell: ContextCell {
                    task,
                    cluster: topic,
                    bin,
                },
            });
        }
        Ok(out)
    }

    /// Labeled (text, task-label) pairs for classifier warmup, drawn from an
    /// offset seed so they do not overlap the main stream.
    pub fn labeled_warmup(&self, n: usize) -> Result<Vec<(String, String)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed.wrapping_add(0x5eed));
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let task = rng.gen_range(0..self.n_tasks);
            let topic = rng.gen_range(0..self.n_clusters);
            let target_bin = rng.gen_range(0..self.binner.n_bins);
            let text = self.query_text(&mut rng, task, topic, target_bin);
            out.push((text, DEFAULT_TASKS[task].to_string()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn deterministic_for_seed() {
        let s = QueryStream::new(StreamConfig {
            t: 50,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        let a = s.generate().unwrap();
        let b = s.generate().unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.text, y.text);
            assert_eq!(x.cell, y.cell);
        }
    }

    #[test]
    fn covers_all_tasks_and_bins_over_500() {
        let s = QueryStream::new(StreamConfig {
            t: 500,
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        let queries = s.generate().unwrap();
        let tasks: HashSet<usize> = queries.iter().map(|q| q.cell.task).collect();
        let bins: HashSet<usize> = queries.iter().map(|q| q.cell.bin).collect();
        let clusters: HashSet<usize> = queries.iter().map(|q| q.cell.cluster).collect();
        assert_eq!(tasks.len(), 5);
        assert_eq!(bins.len(), 3);
        assert_eq!(clusters.len(), 3);
    }

    #[test]
    fn target_bins_mostly_hit() {
        // the generated text should land in the intended bin most of the time;
        // the ground truth is the measured bin either way
        let s = QueryStream::new(StreamConfig {
            t: 300,
            seed: 2,
            ..Default::default()
        })
        .unwrap();
        let queries = s.generate().unwrap();
        let mut per_bin = [0usize; 3];
        for q in &queries {
            per_bin[q.cell.bin] += 1;
        }
        for (i, n) in per_bin.iter().enumerate() {
            assert!(*n >= 30, "bin {i} underrepresented: {n}/300");
        }
    }

    #[test]
    fn task_mix_is_respected() {
        let s = QueryStream::new(StreamConfig {
            t: 2000,
            task_mix: vec![1.0, 0.0, 0.0, 0.0, 1.0],
            seed: 4,
        })
        .unwrap();
        let queries = s.generate().unwrap();
        assert!(queries.iter().all(|q| q.cell.task == 0 || q.cell.task == 4));
    }
}
