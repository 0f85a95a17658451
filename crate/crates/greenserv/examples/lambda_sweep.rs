//! Trace the accuracy/energy trade-off curve over the lambda grid.
//!
//! Run with: cargo run --release --example lambda_sweep

use greenserv::pool::default_pool;
use greenserv::sim::experiments::run_lambda_sweep;
use greenserv::sim::oracle::default_oracle;
use greenserv::sim::runner::SimConfig;
use greenserv::sim::stream::StreamConfig;

fn main() -> greenserv::error::Result<()> {
    let pool = default_pool();
    let oracle = default_oracle(&pool, 1);
    let cfg = SimConfig {
        stream: StreamConfig {
            t: 600,
            ..Default::default()
        },
        ..Default::default()
    };

    let sweep = run_lambda_sweep(&oracle, &pool, &cfg, &[0.0, 0.25, 0.5, 0.75, 1.0], 3)?;
    println!("lambda   accuracy          energy (Wh)");
    for p in &sweep.points {
        println!(
            "{:>5.2}   {:.4} ± {:.4}   {:>8.2} ± {:.2}",
            p.lambda, p.mean_accuracy, p.std_accuracy, p.mean_energy_wh, p.std_energy_wh
        );
    }

    println!("\nstatic single-model Pareto front (accuracy vs energy/query):");
    for m in &sweep.model_front {
        println!("  {:<36} acc {:.3}  {:.4} Wh", m.id, m.accuracy, m.energy);
    }
    Ok(())
}
