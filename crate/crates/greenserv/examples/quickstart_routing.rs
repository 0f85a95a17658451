//! Route queries and feed back measurements through the in-process service.
//!
//! Run with: cargo run --example quickstart_routing

use greenserv::service::{FeedbackReport, RouteRequest, RouterService, ServiceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // default config: lambda = 0.4, built-in 16-model pool, LinUCB
    let service = RouterService::from_config(ServiceConfig::default())?;

    let queries = [
        "solve the arithmetic word problem step by step\nthe market fund grew by twelve each year for three years.",
        "summarize the passage below in a few sentences\nthe enzyme binds the protein and the gene is expressed in the tissue.",
        "answer the following trivia question precisely\nwhich beach city hosts the largest yearly travel tour?",
    ];

    for (i, text) in queries.iter().enumerate() {
        let resp = service.route(RouteRequest {
            request_id: format!("q{i}"),
            text: text.to_string(),
            l_max_ms: Some(5_000.0),
            lambda_override: None,
        })?;
        println!(
            "q{i}: -> {} (task={}, cluster={}, bin={}, {:.2} ms decision)",
            resp.model_id,
            resp.context.task_label,
            resp.context.cluster,
            resp.context.bin,
            resp.decision_latency_ms
        );

        // in production these numbers come from the inference backend
        service.feedback(FeedbackReport {
            request_id: format!("q{i}"),
            accuracy_raw: 0.8,
            metric: "exact_match".into(),
            energy_wh: 0.05,
            latency_ms: 900.0,
        })?;
    }

    let stats = service.stats();
    println!(
        "finalized {} decisions, realized reward total {:.3}",
        stats.finalized, stats.realized_reward_total
    );
    Ok(())
}
