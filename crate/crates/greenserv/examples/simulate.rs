//! Compare the learned router against static baselines on the synthetic
//! ground truth.
//!
//! Run with: cargo run --release --example simulate

use greenserv::pool::default_pool;
use greenserv::sim::oracle::default_oracle;
use greenserv::sim::runner::{run_baseline, run_policy, BaselineKind, SimConfig};
use greenserv::sim::stream::StreamConfig;

fn main() -> greenserv::error::Result<()> {
    let pool = default_pool();
    let oracle = default_oracle(&pool, 1);
    let cfg = SimConfig {
        stream: StreamConfig {
            t: 1000,
            ..Default::default()
        },
        ..Default::default()
    };

    let policy = run_policy(&oracle, &pool, &cfg)?;
    println!(
        "linucb           acc {:.4}  energy {:>8.2} Wh  regret {:>8.2}",
        policy.mean_accuracy_norm, policy.total_energy_wh, policy.cumulative_regret
    );
    for kind in [
        BaselineKind::Random,
        BaselineKind::Largest,
        BaselineKind::Smallest,
        BaselineKind::HighestAccuracy,
    ] {
        let b = run_baseline(kind, &oracle, &pool, &cfg)?;
        println!(
            "{kind:<16?} acc {:.4}  energy {:>8.2} Wh  regret {:>8.2}",
            b.mean_accuracy_norm, b.total_energy_wh, b.cumulative_regret
        );
    }

    // the moving-average regret curve should fall as the router learns
    let ma = policy.ledger().moving_average();
    println!(
        "moving-average regret: step 50 = {:.4}, final = {:.4}",
        ma[49],
        ma.last().unwrap()
    );
    Ok(())
}
