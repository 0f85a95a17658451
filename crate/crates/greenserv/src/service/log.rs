//! Append-only JSON Lines decision log and state replay.
//!
//! The log opens with an `init` record fixing the policy configuration and
//! initial arm set; every finalized decision, churn operation and pending
//! expiry appends one line. Replaying the lines in order reconstructs the
//! bandit's (A, b) state without the original traffic.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bandit::{Policy, PolicyConfig};
use crate::context::ContextVector;
use crate::error::{Error, Result};
use crate::pool::ModelEntry;

/// One finalized routing decision (route + feedback pair).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServiceDecisionRecord {
    pub request_id: String,
    pub chosen: String,
    pub context: Vec<f64>,
    pub task: usize,
    pub cluster: usize,
    pub bin: usize,
    pub lambda: f64,
    pub metric: String,
    pub accuracy_raw: f64,
    pub accuracy_norm: f64,
    pub energy_wh: f64,
    pub energy_norm: f64,
    pub latency_ms: f64,
    pub reward: f64,
    /// Seconds since the Unix epoch at finalization.
    pub finalized_at: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Init {
        config: PolicyConfig,
        d: usize,
        arms: Vec<String>,
    },
    Decision(ServiceDecisionRecord),
    AddModel {
        entry: ModelEntry,
    },
    DeactivateModel {
        id: String,
    },
    Expired {
        request_id: String,
        chosen: String,
    },
}

/// Append-only writer; each record is one line, flushed immediately.
pub struct DecisionLog {
    file: File,
}

impl DecisionLog {
    /// Creates (or truncates) the log and writes the init record.
    pub fn create(
        path: impl AsRef<Path>,
        config: &PolicyConfig,
        d: usize,
        arms: Vec<String>,
    ) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(path)?;
        let mut log = DecisionLog { file };
        log.append(&LogRecord::Init {
            config: config.clone(),
            d,
            arms,
        })?;
        Ok(log)
    }

    pub fn append(&mut self, record: &LogRecord) -> Result<()> {
        let line = serde_json::to_string(record)?;
        writeln!(self.file, "{line}")?;
        self.file.flush()?;
        Ok(())
    }
}

/// Replays a log into a fresh policy. Decisions apply exactly one update
/// each; deactivations leave bandit statistics in place (matching the live
/// service, which keeps learning for still-pending requests).
pub fn replay(path: impl AsRef<Path>) -> Result<Policy> {
    let reader = BufReader::new(File::open(path)?);
    let mut policy: Option<Policy> = None;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LogRecord = serde_json::from_str(&line)?;
        match record {
            LogRecord::Init { config, d, arms } => {
                if policy.is_some() {
                    return Err(Error::invalid("duplicate init record in log"));
                }
                policy = Some(Policy::init(config, &arms, d)?);
            }
            LogRecord::Decision(dec) => {
                let p = policy
                    .as_mut()
                    .ok_or_else(|| Error::invalid("decision before init record"))?;
                p.update(
                    &dec.chosen,
                    &ContextVector {
                        values: dec.context,
                    },
                    dec.reward,
                )?;
            }
            LogRecord::AddModel { entry } => {
                let p = policy
                    .as_mut()
                    .ok_or_else(|| Error::invalid("churn before init record"))?;
                p.add_arm(&entry.id)?;
            }
            LogRecord::DeactivateModel { .. } | LogRecord::Expired { .. } => {}
        }
    }
    policy.ok_or_else(|| Error::invalid("log has no init record"))
}
