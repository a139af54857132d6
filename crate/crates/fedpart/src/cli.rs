//! Command-line surface. Subcommands map directly onto library calls; all
//! real work lives in the other modules.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::collector::{
    expected_rounds_m, expected_rounds_once, monte_carlo_rounds, rolling_rounds_to_cover,
};
use crate::config::ExperimentConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::extraction::Scheme;
use crate::federation::{prepare_data, run_experiment_on, trace_cohort_payloads};
use crate::metrics::{cost_report, summarize, write_jsonl, MetricsRecord, SummaryRecord};

#[derive(Parser)]
#[command(
    name = "fedpart",
    version,
    about = "Partial-training federated learning simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config across one or more seeds.
    Run(RunArgs),
    /// Sweep a capacity-ratio or server-scale grid across seeds.
    Sweep(SweepArgs),
    /// Closed-form vs Monte Carlo coverage round counts.
    Lemmas(LemmasArgs),
    /// Communication/computation cost of a config.
    Cost(CostArgs),
    /// Shard sizes and label skew of a config's partition.
    PartitionStats(PartitionStatsArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to a `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the run seeds (repeatable).
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Override the extraction scheme.
    #[arg(long)]
    scheme: Option<Scheme>,
    /// Override the evaluation interval.
    #[arg(long = "eval-every")]
    eval_every: Option<u64>,
    /// Output directory for metrics and model snapshots.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if !self.seeds.is_empty() {
            config.seeds = self.seeds.clone();
        }
        if let Some(scheme) = self.scheme {
            config.scheme = scheme;
        }
        if let Some(interval) = self.eval_every {
            config.eval_interval = interval;
        }
        if let Some(out) = &self.out {
            config.out_dir = Some(out.clone());
        }
        for warning in config.validate()? {
            log::warn!("{warning}");
        }
        Ok(config)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: ConfigArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Capacity-ratio grid, e.g. `0,0.1,0.5,1`.
    #[arg(long, value_delimiter = ',')]
    rho: Vec<f64>,
    /// Server-scale grid, e.g. `1,2,4`.
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<usize>,
}

#[derive(Args)]
struct LemmasArgs {
    /// Largest index count I in the table.
    #[arg(long = "max-i", default_value_t = 10)]
    max_i: u64,
    /// Required selection count m.
    #[arg(long, default_value_t = 1)]
    m: u32,
    /// Monte Carlo trials per row.
    #[arg(long, default_value_t = 20_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CostArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Cohort-sampling rounds to average over.
    #[arg(long, default_value_t = 1000)]
    rounds: u64,
}

#[derive(Args)]
struct PartitionStatsArgs {
    #[command(flatten)]
    common: ConfigArgs,
}

/// Parse and execute; returns the process exit status.
pub fn cli_run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path too.
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Lemmas(args) => cmd_lemmas(args),
        Command::Cost(args) => cmd_cost(args),
        Command::PartitionStats(args) => cmd_partition_stats(args),
    }
}

fn out_dir(config: &ExperimentConfig) -> PathBuf {
    config
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn run_config_to(config: &ExperimentConfig, dir: &Path, stem: &str) -> Result<Vec<MetricsRecord>> {
    std::fs::create_dir_all(dir)?;
    let data = prepare_data(config)?;
    let mut finals = Vec::new();
    for &seed in &config.seeds {
        let result = run_experiment_on(config, &data, seed)?;
        let metrics_path = dir.join(format!("{stem}_seed{seed}.jsonl"));
        write_jsonl(&metrics_path, &result.records)?;
        let model_path = dir.join(format!("{stem}_seed{seed}.fmd1"));
        crate::io::write_model(&model_path, &result.final_params)?;
        println!(
            "{stem} seed {seed}: final global accuracy {:.4} (baseline {:.4}) -> {}",
            result.final_global_accuracy().unwrap_or(f64::NAN),
            result.majority_baseline,
            metrics_path.display()
        );
        if let Some(last) = result.records.last() {
            finals.push(last.clone());
        }
    }
    let summary = summarize(&finals.iter().collect::<Vec<_>>());
    write_jsonl(&dir.join(format!("{stem}_summary.jsonl")), &[summary])?;
    Ok(finals)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let config = args.common.load()?;
    let dir = out_dir(&config);
    run_config_to(&config, &dir, "run")?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let base = args.common.load()?;
    if args.rho.is_empty() && args.gamma.is_empty() {
        return Err(Error::field("rho/gamma", "sweep needs at least one grid"));
    }
    let dir = out_dir(&base);
    std::fs::create_dir_all(&dir)?;
    let mut grid_rows: Vec<SummaryRecord> = Vec::new();

    for &rho in &args.rho {
        let mut config = base.clone();
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::field("rho", format!("{rho} not in [0, 1]")));
        }
        if rho == 0.0 {
            config.capacities = vec![0.0625];
            config.capacity_probs = vec![1.0];
        } else if rho == 1.0 {
            config.capacities = vec![1.0];
            config.capacity_probs = vec![1.0];
        } else {
            config.capacities = vec![1.0, 0.0625];
            config.capacity_probs = vec![rho, 1.0 - rho];
        }
        config.validate()?;
        let finals = run_config_to(&config, &dir, &format!("rho{rho}"))?;
        grid_rows.push(summarize(&finals.iter().collect::<Vec<_>>()));
    }

    for &gamma in &args.gamma {
        let mut config = base.clone();
        config.gamma = gamma;
        config.validate()?;
        let finals = run_config_to(&config, &dir, &format!("gamma{gamma}"))?;
        grid_rows.push(summarize(&finals.iter().collect::<Vec<_>>()));
    }

    write_jsonl(&dir.join("sweep_summary.jsonl"), &grid_rows)?;
    Ok(())
}

fn cmd_lemmas(args: LemmasArgs) -> Result<()> {
    println!(
        "{:>4} {:>3} {:>14} {:>14} {:>10} {:>10} {:>12}",
        "I", "m", "expected", "monte_carlo", "std_err", "cyclic", "asymptotic"
    );
    for i in 1..=args.max_i {
        let expected = if args.m == 1 {
            expected_rounds_once(i)?
        } else {
            expected_rounds_m(i, args.m)?
        };
        let (mc, se) = monte_carlo_rounds(i, args.m, args.trials, args.seed)?;
        // Large-I growth rate I*ln(I) + I*(m-1)*ln(ln(I)); informational only.
        let fi = i as f64;
        let asymptotic = if args.m == 1 {
            Some(fi * fi.ln())
        } else if fi.ln() > 1.0 {
            Some(fi * fi.ln() + fi * (args.m - 1) as f64 * fi.ln().ln())
        } else {
            None
        };
        println!(
            "{:>4} {:>3} {:>14.6} {:>14.6} {:>10.6} {:>10} {}",
            i,
            args.m,
            expected,
            mc,
            se,
            rolling_rounds_to_cover(i, args.m as u64),
            asymptotic.map_or_else(|| format!("{:>12}", "-"), |a| format!("{a:>12.4}")),
        );
    }
    Ok(())
}

fn cmd_cost(args: CostArgs) -> Result<()> {
    let config = args.common.load()?;
    let trace = trace_cohort_payloads(&config, args.rounds, config.seeds[0])?;
    let report = cost_report(&trace)?;
    println!("rounds sampled:            {}", report.rounds);
    println!("client-rounds:             {}", report.client_rounds);
    println!(
        "avg parameters per client: {:.2}",
        report.avg_params_per_client
    );
    println!(
        "avg MACs/example:          {:.2}",
        report.avg_macs_per_client
    );
    println!(
        "avg payload bytes:         {:.2}",
        report.avg_payload_bytes_per_client
    );
    Ok(())
}

fn print_partition_stats(ds: &Dataset, plan: &crate::data::PartitionPlan) {
    let sizes = plan.shard_sizes();
    let min = sizes.iter().min().copied().unwrap_or(0);
    let max = sizes.iter().max().copied().unwrap_or(0);
    let mean = sizes.iter().sum::<usize>() as f64 / sizes.len().max(1) as f64;
    let labels = plan.labels_per_client(ds);
    println!("clients:             {}", plan.num_clients());
    println!("shard size min/mean/max: {min} / {mean:.1} / {max}");
    println!(
        "distinct labels per client min/max: {} / {}",
        labels.iter().min().copied().unwrap_or(0),
        labels.iter().max().copied().unwrap_or(0)
    );
    let counts = plan.label_client_counts(ds);
    for label in 0..ds.num_classes() {
        let holders = counts.iter().filter(|hist| hist[label] > 0).count();
        let total: usize = counts.iter().map(|hist| hist[label]).sum();
        println!("label {label}: {total} samples on {holders} clients");
    }
}

fn cmd_partition_stats(args: PartitionStatsArgs) -> Result<()> {
    let config = args.common.load()?;
    let data = prepare_data(&config)?;
    print_partition_stats(&data.train, &data.plan);
    Ok(())
}
