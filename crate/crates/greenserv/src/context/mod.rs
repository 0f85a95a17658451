//! Query feature extraction: embeddings, task classification, online
//! clustering, readability scoring, and one-hot context assembly.

pub mod classifier;
pub mod cluster;
pub mod embedding;
pub mod flesch;
pub mod pipeline;
pub mod vector;

pub use classifier::{train_task_classifier, TaskClassifier, TrainedClassifier, TrainingConfig};
pub use cluster::ClusterModel;
pub use embedding::{EmbeddingProvider, EmbeddingVector, HashingEmbedder, PrecomputedEmbeddings};
pub use flesch::{flesch_score, ComplexityBinner, FleschBreakdown};
pub use pipeline::{FeatureBreakdown, QueryContextPipeline, StageTimings};
pub use vector::{build_context, ContextDims, ContextVector, FeatureConfig};
