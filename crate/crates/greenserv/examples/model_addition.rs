//! Add a strong, efficient model mid-run and watch the router adopt it.
//!
//! Run with: cargo run --release --example model_addition

use greenserv::pool::default_pool;
use greenserv::sim::experiments::{default_added_model, run_model_addition};
use greenserv::sim::oracle::default_oracle;
use greenserv::sim::runner::SimConfig;
use greenserv::sim::stream::StreamConfig;

fn main() -> greenserv::error::Result<()> {
    let pool = default_pool();
    let oracle = default_oracle(&pool, 1);
    let cfg = SimConfig {
        stream: StreamConfig {
            t: 1200,
            ..Default::default()
        },
        ..Default::default()
    };

    let at_step = 600;
    let (entry, acc) = default_added_model();
    let outcome = run_model_addition(&oracle, &pool, &cfg, at_step, entry, acc)?;

    println!(
        "{} joined at step {at_step} (expected accuracy {acc})",
        outcome.added_id
    );
    println!("windowed selection frequency of the new model:");
    for (start, freq) in outcome
        .adoption
        .iter()
        .filter(|(start, _)| *start + 100 >= at_step)
    {
        println!("  steps {:>4}+  {:>5.1}%", start, freq * 100.0);
    }
    Ok(())
}
