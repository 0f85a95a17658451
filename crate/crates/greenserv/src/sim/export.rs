//! Plot-ready file exports for experiment outputs.

use std::fs::File;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::sim::experiments::{AblationRow, AdditionOutcome, LambdaSweepResult};
use crate::sim::runner::ExperimentResult;

/// Pretty-printed JSON dump of any serializable result.
pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Per-step regret curve: step, arm_id, reward, optimal_reward, regret,
/// cumulative_regret, moving_avg.
pub fn write_regret_csv(path: impl AsRef<Path>, result: &ExperimentResult) -> Result<()> {
    result.ledger().export_csv(File::create(path)?)
}

/// Long-format windowed selection frequencies: window_start, model, frequency.
pub fn write_frequency_csv(
    path: impl AsRef<Path>,
    result: &ExperimentResult,
    window: usize,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["window_start", "model", "frequency"])?;
    for (start, freq) in result.selection_frequency(window) {
        for (model, f) in freq {
            w.write_record([start.to_string(), model, f.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Sweep table: lambda, mean_accuracy, std_accuracy, mean_energy_wh,
/// std_energy_wh, mean_regret.
pub fn write_sweep_csv(path: impl AsRef<Path>, sweep: &LambdaSweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record([
        "lambda",
        "mean_accuracy",
        "std_accuracy",
        "mean_energy_wh",
        "std_energy_wh",
        "mean_regret",
    ])?;
    for p in &sweep.points {
        w.write_record([
            p.lambda.to_string(),
            p.mean_accuracy.to_string(),
            p.std_accuracy.to_string(),
            p.mean_energy_wh.to_string(),
            p.std_energy_wh.to_string(),
            p.mean_regret.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Ablation table: features, rep, final_cumulative_regret.
pub fn write_ablation_csv(path: impl AsRef<Path>, rows: &[AblationRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["features", "rep", "final_cumulative_regret"])?;
    for row in rows {
        let name = serde_json::to_value(row.features)?
            .as_str()
            .expect("feature config serializes to string")
            .to_string();
        for (rep, regret) in row.final_regrets.iter().enumerate() {
            w.write_record([name.clone(), rep.to_string(), regret.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Adoption curve of a newly added model: window_start, frequency.
pub fn write_adoption_csv(path: impl AsRef<Path>, outcome: &AdditionOutcome) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["window_start", "frequency"])?;
    for (start, f) in &outcome.adoption {
        w.write_record([start.to_string(), f.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
