//! `dapmlm`: run ε sweeps, compare runs, export and audit protocol traces.
//!
//! Exit codes: 0 success, 1 failed cells or audit violations, 2 bad
//! configuration or unreadable input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dapmlm_core::experiment::{
    cell_trace, compare_runs, load_dataset, run_experiment, write_comparison, CellKey,
    ExperimentConfig, ExperimentError, Mode, WilcoxonRow,
};
use dapmlm_core::metrics::Verdict;
use dapmlm_core::protocol::{audit_export, audit_trace, export_trace};

#[derive(Parser)]
#[command(name = "dapmlm", version, about = "Differentially private naive Bayes over a simulated two-cloud protocol")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (dataset, ε, mode, trial) cell and write the result tables.
    Run(RunArgs),
    /// Paired Wilcoxon tests between two finished runs.
    Compare(CompareArgs),
    /// Check an exported protocol trace.
    Audit {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Run one cell and export its protocol trace.
    Trace(TraceArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated dataset CSVs, each with a sibling `.schema`.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    epsilon_grid: Option<String>,
    /// Comma-separated: clean, dp_data, dp_model, dp_both.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// One noise draw per record instead of per attribute.
    #[arg(long)]
    noise_per_row: bool,
    #[arg(long)]
    count_noise_scale: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Mode taken from run A; defaults to comparing each shared mode with itself.
    #[arg(long, requires = "mode_b")]
    mode_a: Option<Mode>,
    #[arg(long, requires = "mode_a")]
    mode_b: Option<Mode>,
    /// Also write the table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value = "dp_both")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    trial: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    owners: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
        Command::Audit { trace } => audit(trace),
        Command::Trace(args) => trace(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                ExperimentError::Output { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::new(Vec::new()),
    };
    let overrides = [
        ("datasets", args.dataset.clone()),
        ("epsilon_grid", args.epsilon_grid.clone()),
        ("modes", args.mode.clone()),
        ("trials", args.trials.clone()),
        ("seed", args.seed.clone()),
        ("split", args.split.clone()),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
        ("noise_per_row", args.noise_per_row.then(|| "true".to_string())),
        ("count_noise_scale", args.count_noise_scale.clone()),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)
                .map_err(|e| ExperimentError::Config(format!("--{}: {e}", key.replace('_', "-"))))?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<ExitCode, ExperimentError> {
    let cfg = build_config(&args)?;
    let output = run_experiment(&cfg)?;
    output.write(&cfg.out)?;
    for s in &output.summary {
        println!(
            "{:<16} {:<9} ε={:<6} accuracy {:.4} ± {:.4}  f1 {:.4}  ({} trials)",
            s.dataset,
            s.mode,
            s.epsilon.map_or("-".into(), |e| e.to_string()),
            s.mean.accuracy,
            s.std.accuracy,
            s.mean.f1,
            s.trials
        );
    }
    let failed: Vec<_> = output.failures().collect();
    for f in &failed {
        eprintln!(
            "cell failed: {} {} ε={:?} trial {} (noise seed {}): {}",
            f.key.dataset,
            f.key.mode,
            f.key.epsilon,
            f.key.trial,
            f.seeds.noise,
            f.outcome.as_ref().unwrap_err()
        );
    }
    println!("wrote {}", cfg.out.display());
    Ok(if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn print_rows(rows: &[WilcoxonRow]) {
    for r in rows {
        let tail = match &r.result {
            Ok(o) => format!(
                "W={} p={:.4} {}",
                o.statistic,
                o.p_value,
                match o.verdict {
                    Verdict::Accepted => "accepted",
                    Verdict::Rejected => "rejected",
                }
            ),
            Err(note) => note.clone(),
        };
        println!(
            "{:<16} {:<9} {} vs {}: {}",
            r.dataset,
            r.metric.as_str(),
            r.mode_a,
            r.mode_b,
            tail
        );
    }
}

fn compare(args: CompareArgs) -> Result<ExitCode, ExperimentError> {
    let pairs = args.mode_a.zip(args.mode_b).map(|p| vec![p]);
    let rows = compare_runs(&args.a, &args.b, pairs.as_deref())?;
    print_rows(&rows);
    if let Some(out) = &args.out {
        write_comparison(out, &rows)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn audit(path: PathBuf) -> Result<ExitCode, ExperimentError> {
    let text = std::fs::read_to_string(&path)
        .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
    let report = audit_export(&text)?;
    println!("{report}");
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn trace(args: TraceArgs) -> Result<ExitCode, ExperimentError> {
    let loaded = load_dataset(&args.dataset)?;
    let mut cfg = ExperimentConfig::new(vec![args.dataset.clone()]);
    cfg.seed = args.seed;
    cfg.owners = args.owners;
    let key = CellKey {
        dataset: loaded.data.name().to_string(),
        epsilon: if args.mode.uses_epsilon() { args.epsilon } else { None },
        mode: args.mode,
        trial: args.trial,
    };
    let (trace, _) = cell_trace(&loaded.data, &cfg, &key)?;
    std::fs::write(&args.out, export_trace(&trace)).map_err(|e| ExperimentError::Output {
        path: args.out.clone(),
        message: e.to_string(),
    })?;
    println!("{}", audit_trace(&trace));
    println!("wrote {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}
