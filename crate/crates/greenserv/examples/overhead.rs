//! Per-stage routing overhead: context extraction and policy selection.
//!
//! Run with: cargo run --release --example overhead

use greenserv::pool::default_pool;
use greenserv::sim::experiments::measure_overhead;
use greenserv::sim::oracle::default_oracle;

fn main() -> greenserv::error::Result<()> {
    let pool = default_pool();
    let oracle = default_oracle(&pool, 1);
    let report = measure_overhead(&oracle, &pool, 500, 0)?;

    println!("mean per-query cost over {} queries (ms):", report.n_queries);
    println!("  task classification   {:.4}", report.classify_ms);
    println!("  semantic clustering   {:.4}", report.cluster_ms);
    println!("  complexity scoring    {:.4}", report.complexity_ms);
    println!("  pipeline total        {:.4}", report.pipeline_total_ms);
    println!("selection only:");
    for (kind, ms) in &report.select_ms {
        println!("  {kind:<24}{ms:.4}");
    }
    Ok(())
}
