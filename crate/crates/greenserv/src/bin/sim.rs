//! Simulation CLI: thin argument parsing over the library's experiment
//! protocols. Every subcommand reads an optional JSON experiment file and
//! writes plot-ready JSON/CSV artifacts into --out.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use greenserv::context::FeatureConfig;
use greenserv::error::Result;
use greenserv::pool::{default_pool, ModelPool};
use greenserv::sim::experiments::{
    ablation_grid, default_added_model, lambda_grid, measure_overhead, run_feature_ablation,
    run_lambda_sweep, run_model_addition, DEFAULT_ADDITION_STEP,
};
use greenserv::sim::export::{
    write_ablation_csv, write_adoption_csv, write_frequency_csv, write_json, write_regret_csv,
    write_sweep_csv,
};
use greenserv::sim::oracle::{default_oracle, task_separable_oracle, OracleSpec};
use greenserv::sim::runner::{run_baseline, run_policy, BaselineKind, SimConfig};

#[derive(Parser)]
#[command(name = "sim", about = "Energy-aware routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides both the policy and stream seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for result artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// One policy run plus the four reference baselines.
    Run(Common),
    /// Accuracy/energy trade-off across a lambda grid.
    SweepLambda(Common),
    /// Final regret per context-feature configuration.
    AblateFeatures(Common),
    /// Mid-run pool addition with the adoption curve of the new model.
    AddModel(Common),
    /// Per-stage routing overhead table.
    Overhead(Common),
}

/// Experiment file schema shared by all subcommands; unknown sections are
/// ignored by the verbs that do not use them.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct ExperimentFile {
    sim: SimConfig,
    /// Seed for the synthetic ground truth.
    oracle_seed: u64,
    /// "default" | "task_separable"; which oracle calibration to use.
    oracle: Option<String>,
    pool_path: Option<PathBuf>,
    oracle_path: Option<PathBuf>,
    lambda_grid: Option<Vec<f64>>,
    reps: Option<usize>,
    features: Option<Vec<FeatureConfig>>,
    add_at_step: Option<usize>,
    overhead_queries: Option<usize>,
}

struct Setup {
    file: ExperimentFile,
    pool: ModelPool,
    oracle: OracleSpec,
    out: PathBuf,
}

fn setup(common: &Common) -> Result<Setup> {
    let mut file: ExperimentFile = match &common.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => ExperimentFile::default(),
    };
    if let Some(seed) = common.seed {
        file.sim.policy.seed = seed;
        file.sim.stream.seed = seed;
    }
    let pool = match &file.pool_path {
        Some(path) => ModelPool::load_json(path)?,
        None => default_pool(),
    };
    let oracle = match (&file.oracle_path, file.oracle.as_deref()) {
        (Some(path), _) => OracleSpec::load_json(path)?,
        (None, Some("task_separable")) => task_separable_oracle(&pool),
        _ => default_oracle(&pool, file.oracle_seed),
    };
    std::fs::create_dir_all(&common.out)?;
    Ok(Setup {
        file,
        pool,
        oracle,
        out: common.out.clone(),
    })
}

fn cmd_run(common: &Common) -> Result<()> {
    let s = setup(common)?;
    let result = run_policy(&s.oracle, &s.pool, &s.file.sim)?;
    write_json(s.out.join("run.json"), &result)?;
    write_regret_csv(s.out.join("regret.csv"), &result)?;
    write_frequency_csv(s.out.join("frequency.csv"), &result, 50)?;
    println!(
        "policy: mean accuracy {:.4}, total energy {:.2} Wh, cumulative regret {:.3}",
        result.mean_accuracy_norm, result.total_energy_wh, result.cumulative_regret
    );
    for kind in [
        BaselineKind::Random,
        BaselineKind::Largest,
        BaselineKind::Smallest,
        BaselineKind::HighestAccuracy,
    ] {
        let b = run_baseline(kind, &s.oracle, &s.pool, &s.file.sim)?;
        let name = serde_json::to_value(kind)?
            .as_str()
            .expect("kind serializes to string")
            .to_string();
        write_regret_csv(s.out.join(format!("regret_{name}.csv")), &b)?;
        println!(
            "baseline {name}: mean accuracy {:.4}, total energy {:.2} Wh, cumulative regret {:.3}",
            b.mean_accuracy_norm, b.total_energy_wh, b.cumulative_regret
        );
    }
    Ok(())
}

fn cmd_sweep(common: &Common) -> Result<()> {
    let s = setup(common)?;
    let grid = s.file.lambda_grid.clone().unwrap_or_else(lambda_grid);
    let reps = s.file.reps.unwrap_or(5);
    let sweep = run_lambda_sweep(&s.oracle, &s.pool, &s.file.sim, &grid, reps)?;
    write_json(s.out.join("sweep.json"), &sweep)?;
    write_sweep_csv(s.out.join("sweep.csv"), &sweep)?;
    for p in &sweep.points {
        println!(
            "lambda {:.2}: accuracy {:.4} ± {:.4}, energy {:.2} ± {:.2} Wh",
            p.lambda, p.mean_accuracy, p.std_accuracy, p.mean_energy_wh, p.std_energy_wh
        );
    }
    Ok(())
}

fn cmd_ablate(common: &Common) -> Result<()> {
    let s = setup(common)?;
    let configs = s.file.features.clone().unwrap_or_else(ablation_grid);
    let reps = s.file.reps.unwrap_or(5);
    let rows = run_feature_ablation(&s.oracle, &s.pool, &s.file.sim, &configs, reps)?;
    write_json(s.out.join("ablation.json"), &rows)?;
    write_ablation_csv(s.out.join("ablation.csv"), &rows)?;
    for row in &rows {
        println!(
            "{:?}: final regret {:.3} ± {:.3}",
            row.features, row.mean_final_regret, row.std_final_regret
        );
    }
    Ok(())
}

fn cmd_add_model(common: &Common) -> Result<()> {
    let s = setup(common)?;
    let at_step = s.file.add_at_step.unwrap_or(DEFAULT_ADDITION_STEP);
    let (entry, acc) = default_added_model();
    let outcome = run_model_addition(&s.oracle, &s.pool, &s.file.sim, at_step, entry, acc)?;
    write_json(s.out.join("addition.json"), &outcome)?;
    write_adoption_csv(s.out.join("adoption.csv"), &outcome)?;
    write_regret_csv(s.out.join("regret.csv"), &outcome.result)?;
    let peak = outcome
        .adoption
        .iter()
        .filter(|(start, _)| *start >= at_step)
        .map(|(_, f)| *f)
        .fold(0.0, f64::max);
    println!(
        "{} joined at step {at_step}; peak windowed selection frequency {peak:.2}",
        outcome.added_id
    );
    Ok(())
}

fn cmd_overhead(common: &Common) -> Result<()> {
    let s = setup(common)?;
    let n = s.file.overhead_queries.unwrap_or(200);
    let report = measure_overhead(&s.oracle, &s.pool, n, s.file.sim.policy.seed)?;
    write_json(s.out.join("overhead.json"), &report)?;
    println!("stage means over {n} queries (ms):");
    println!("  classify   {:.4}", report.classify_ms);
    println!("  cluster    {:.4}", report.cluster_ms);
    println!("  complexity {:.4}", report.complexity_ms);
    println!("  pipeline   {:.4}", report.pipeline_total_ms);
    for (kind, ms) in &report.select_ms {
        println!("  select[{kind}] {ms:.4}");
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::SweepLambda(c) => cmd_sweep(c),
        Command::AblateFeatures(c) => cmd_ablate(c),
        Command::AddModel(c) => cmd_add_model(c),
        Command::Overhead(c) => cmd_overhead(c),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
