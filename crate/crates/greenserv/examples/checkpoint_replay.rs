//! Persist decisions to the JSONL log, then rebuild the bandit state from
//! the log alone and compare it to a live checkpoint.
//!
//! Run with: cargo run --example checkpoint_replay

use greenserv::service::{replay, FeedbackReport, RouteRequest, RouterService, ServiceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("greenserv-replay-example");
    std::fs::create_dir_all(&dir)?;
    let log_path = dir.join("decisions.jsonl");

    let service = RouterService::from_config(ServiceConfig {
        log_path: Some(log_path.clone()),
        ..Default::default()
    })?;

    for i in 0..60 {
        let id = format!("q{i}");
        service.route(RouteRequest {
            request_id: id.clone(),
            text: format!(
                "answer the following trivia question precisely\nthe stock price moved {i} points over the week."
            ),
            l_max_ms: None,
            lambda_override: None,
        })?;
        service.feedback(FeedbackReport {
            request_id: id,
            accuracy_raw: 0.4 + 0.01 * (i % 20) as f64,
            metric: "exact_match".into(),
            energy_wh: 0.03,
            latency_ms: 500.0,
        })?;
    }

    let replayed = replay(&log_path)?;
    let live: serde_json::Value = serde_json::from_str(&service.checkpoint_json()?)?;

    let mut max_drift = 0.0_f64;
    for (arm, live_arm) in replayed.arms().iter().zip(live["arms"].as_array().unwrap()) {
        let d = arm.b.len();
        let live_a = live_arm["A"].as_array().unwrap();
        for r in 0..d {
            for c in 0..d {
                let drift = (arm.a[(r, c)] - live_a[r * d + c].as_f64().unwrap()).abs();
                max_drift = max_drift.max(drift);
            }
        }
    }
    println!(
        "replayed {} finalized decisions from {}",
        replayed.total_pulls(),
        log_path.display()
    );
    println!("max |A_live - A_replayed| = {max_drift:e}");
    Ok(())
}
