//! Measure how much each context feature block contributes to regret
//! reduction, on a ground truth where the task feature is provably
//! informative.
//!
//! Run with: cargo run --release --example feature_ablation

use greenserv::context::FeatureConfig;
use greenserv::pool::default_pool;
use greenserv::sim::experiments::run_feature_ablation;
use greenserv::sim::oracle::task_separable_oracle;
use greenserv::sim::runner::SimConfig;
use greenserv::sim::stream::StreamConfig;

fn main() -> greenserv::error::Result<()> {
    let pool = default_pool();
    let oracle = task_separable_oracle(&pool);
    let cfg = SimConfig {
        stream: StreamConfig {
            t: 800,
            ..Default::default()
        },
        ..Default::default()
    };

    let rows = run_feature_ablation(
        &oracle,
        &pool,
        &cfg,
        &[
            FeatureConfig::None,
            FeatureConfig::Task,
            FeatureConfig::Cluster,
            FeatureConfig::Complexity,
            FeatureConfig::Full,
        ],
        3,
    )?;
    println!("features            final cumulative regret");
    for row in &rows {
        println!(
            "{:<18?}  {:>8.2} ± {:.2}",
            row.features, row.mean_final_regret, row.std_final_regret
        );
    }
    Ok(())
}
