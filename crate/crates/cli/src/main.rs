use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{error, info, LevelFilter};

use cevib::datasets::SynthConfig;
use cevib::experiment::{
    export_synthetic_instance, parse_methods, parse_mu_list, parse_range, run_experiment, run_robustness_sweep,
    summarize, DatasetSelector, ExperimentConfig, ExperimentOutcome,
};

#[derive(Parser)]
#[command(name = "cevib", version, about = "Causal effect estimation experiments")]
struct Cli {
    /// Log progress for every replication.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicated experiments and write records plus a summary.
    Run(RunArgs),
    /// Run the selection-bias sweep on generated data and write sweep.csv.
    Sweep(SweepArgs),
    /// Aggregate one or more records.jsonl files into a comparison table.
    Summarize(SummarizeArgs),
    /// Write one generated dataset to CSV with a metadata sidecar.
    SynthExport(ExportArgs),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated methods: cevib, ols1, ols2, oracle.
    #[arg(long)]
    methods: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// IHDP replicate files, e.g. `1-10` or `1,4,7`.
    #[arg(long)]
    files: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated mean shifts, e.g. `1,2,3,4`.
    #[arg(long)]
    mu: Option<String>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// records.jsonl files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Also write the summary CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Destination CSV; the sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Master seed, as for `sweep`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replication index within the sweep.
    #[arg(long, default_value_t = 0)]
    replication: usize,
    #[arg(long, default_value_t = 5000)]
    n_control: usize,
    #[arg(long, default_value_t = 2500)]
    n_treated: usize,
    #[arg(long, default_value_t = 10)]
    dim: usize,
}

fn load_config(common: &Common, default: impl FnOnce() -> ExperimentConfig) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => default(),
    };
    if let Some(d) = &common.data_dir {
        cfg.data_dir = d.clone();
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.replications {
        cfg.replications = r;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(m) = &common.methods {
        cfg.methods = parse_methods(m)?;
    }
    Ok(cfg)
}

fn report(outcome: &ExperimentOutcome, cfg: &ExperimentConfig) -> ExitCode {
    for f in &outcome.failures {
        error!(
            "{}{} replication {} {}: {}",
            f.dataset,
            f.instance.as_deref().map(|i| format!("/{i}")).unwrap_or_default(),
            f.replication,
            f.method,
            f.error
        );
    }
    let table = std::fs::read_to_string(cfg.out_dir.join("summary.txt")).unwrap_or_default();
    print!("{table}");
    println!(
        "{} records, {}/{} replications failed, results in {}",
        outcome.records.len(),
        outcome.replications_failed,
        outcome.replications_total,
        cfg.out_dir.display()
    );
    ExitCode::from(outcome.exit_code() as u8)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&args.common, || {
        let mut c = ExperimentConfig::new(DatasetSelector::Ihdp {
            files: (1..=10).collect(),
        });
        c.data_dir = PathBuf::from("data/ihdp");
        c
    })?;
    if let Some(spec) = &args.files {
        match &mut cfg.dataset {
            DatasetSelector::Ihdp { files } => *files = parse_range(spec)?,
            other => bail!("--files applies to IHDP runs, but the config selects {}", other.name()),
        }
    }
    info!("running {} experiment, {} replications", cfg.dataset.name(), cfg.replications);
    let outcome = run_experiment(&cfg)?;
    Ok(report(&outcome, &cfg))
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&args.common, || {
        ExperimentConfig::new(DatasetSelector::Synthetic {
            mu: vec![1.0, 2.0, 3.0, 4.0],
            generator: SynthConfig::default(),
        })
    })?;
    if let Some(list) = &args.mu {
        match &mut cfg.dataset {
            DatasetSelector::Synthetic { mu, .. } => *mu = parse_mu_list(list)?,
            other => bail!("--mu applies to synthetic sweeps, but the config selects {}", other.name()),
        }
    }
    let (outcome, rows) = run_robustness_sweep(&cfg)?;
    info!("{} sweep rows written", rows.len());
    Ok(report(&outcome, &cfg))
}

fn summarize_cmd(args: SummarizeArgs) -> Result<ExitCode> {
    let summary = summarize(&args.files)?;
    print!("{}", summary.to_table());
    if let Some(out) = &args.out {
        std::fs::write(out, summary.to_csv()?).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn export(args: ExportArgs) -> Result<ExitCode> {
    let generator = SynthConfig {
        n_control: args.n_control,
        n_treated: args.n_treated,
        dim: args.dim,
        ..Default::default()
    };
    let (data, meta) = export_synthetic_instance(&generator, args.mu, args.seed, args.replication, &args.out)?;
    println!(
        "wrote {} subjects to {} (KL {:.6}, metadata {})",
        data.dataset.len(),
        args.out.display(),
        data.kl,
        meta.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { LevelFilter::Info } else { LevelFilter::Warn })
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Summarize(a) => summarize_cmd(a),
        Command::SynthExport(a) => export(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
