use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bellrmt_core::analytic::AnalyticTable;
use bellrmt_core::engine::io::{emit_results, write_csv, write_hist_csv, write_json, OutputFormat};
use bellrmt_core::engine::validate::{run_validation, ValidationPlan};
use bellrmt_core::engine::{exp_grid, run_sweep, SweepConfig, SweepResult, DEFAULT_BINS, DEFAULT_SAMPLES, DEFAULT_SEED};
use bellrmt_core::ensembles::EnsembleKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_VALIDATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "bellrmt", version, about = "Expected Bell violations of random pure states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean target value over a grid of local dimensions.
    Sweep(SweepArgs),
    /// Histogram of target values at one N.
    Hist(HistArgs),
    /// Print the analytic reference values as JSON.
    Analytic,
    /// Run the oracle and invariant suite; exit 1 if any check fails.
    Validate {
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EnsembleArg {
    Hs,
    Structured,
    Maxent,
    Coulomb,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON file with SweepConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Repeat or comma-separate to select several ensembles.
    #[arg(long, value_enum, value_delimiter = ',')]
    ensemble: Vec<EnsembleArg>,
    /// Parameters for `structured`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    k: Vec<u32>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    /// `exp` or `list:<n1,n2,...>`.
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    bins: Option<usize>,
    /// Output file; CSV also writes `<out>.hist.csv`. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Worker threads (falls back to BELLRMT_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct HistArgs {
    #[arg(long, value_enum)]
    ensemble: EnsembleArg,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn runtime(msg: impl std::fmt::Display) -> Failure {
    Failure::Runtime(msg.to_string())
}

fn kinds_from(ensembles: &[EnsembleArg], ks: &[u32]) -> Result<Vec<EnsembleKind>, Failure> {
    let mut kinds = Vec::new();
    for e in ensembles {
        match e {
            EnsembleArg::Hs => kinds.push(EnsembleKind::Hs),
            EnsembleArg::Maxent => kinds.push(EnsembleKind::MaxEntangled),
            EnsembleArg::Coulomb => kinds.push(EnsembleKind::CoulombGas(None)),
            EnsembleArg::Structured => {
                if ks.is_empty() {
                    return Err(usage("--ensemble structured requires --k"));
                }
                for &k in ks {
                    if k < 1 {
                        return Err(usage(format!("--k {k}: k must be at least 1")));
                    }
                    kinds.push(EnsembleKind::Structured { k });
                }
            }
        }
    }
    if !ks.is_empty() && !ensembles.contains(&EnsembleArg::Structured) {
        return Err(usage("--k is only valid with --ensemble structured"));
    }
    Ok(kinds)
}

fn parse_grid(spec: &str) -> Result<Option<Vec<usize>>, Failure> {
    if spec == "exp" {
        return Ok(None);
    }
    let list = spec
        .strip_prefix("list:")
        .ok_or_else(|| usage(format!("--n-grid '{spec}': expected exp or list:<csv>")))?;
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("--n-grid: '{s}' is not a positive integer")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn threads_from(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("BELLRMT_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("BELLRMT_THREADS='{v}' is not a positive integer"))),
        _ => Ok(None),
    }
}

fn check_counts(samples: Option<usize>, bins: Option<usize>, threads: Option<usize>) -> Result<(), Failure> {
    if let Some(s) = samples.filter(|&s| s < 2) {
        return Err(usage(format!("--samples {s}: need at least 2")));
    }
    if bins == Some(0) {
        return Err(usage("--bins 0: need at least 1"));
    }
    if threads == Some(0) {
        return Err(usage("--threads 0: need at least 1"));
    }
    Ok(())
}

fn build_config(a: &SweepArgs) -> Result<SweepConfig, Failure> {
    check_counts(a.samples, a.bins, a.threads)?;
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| usage(format!("--config {}: {e}", path.display())))?
        }
        None => SweepConfig::default(),
    };
    if !a.ensemble.is_empty() {
        cfg.ensembles = kinds_from(&a.ensemble, &a.k)?;
    } else if !a.k.is_empty() {
        return Err(usage("--k is only valid with --ensemble structured"));
    }
    let listed = match &a.n_grid {
        Some(spec) => parse_grid(spec)?,
        None => None,
    };
    match listed {
        Some(list) => {
            if a.n_min.is_some() || a.n_max.is_some() {
                return Err(usage("--n-min/--n-max cannot be combined with --n-grid list:"));
            }
            cfg.n_grid = list;
        }
        None if a.n_grid.is_some() || a.n_min.is_some() || a.n_max.is_some() => {
            let lo = a.n_min.unwrap_or(2);
            let hi = a.n_max.unwrap_or(512);
            cfg.n_grid = exp_grid(lo, hi)
                .map_err(|_| usage(format!("--n-min {lo} / --n-max {hi}: need 2 <= n-min <= n-max")))?;
        }
        None => {}
    }
    if let Some(s) = a.samples {
        cfg.samples_per_point = s;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(b) = a.bins {
        cfg.histogram_bins = b;
    }
    if let Some(out) = &a.out {
        cfg.output_path = Some(out.clone());
    }
    if let Some(t) = threads_from(a.threads)? {
        cfg.threads = Some(t);
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn write_to(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<(), String>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| runtime(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            f(&mut w).map_err(runtime)?;
            w.flush().map_err(|e| runtime(format!("{}: {e}", p.display())))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(runtime)
        }
    }
}

fn sweep(a: &SweepArgs) -> Result<(), Failure> {
    let cfg = build_config(a)?;
    let result = run_sweep(&cfg).map_err(runtime)?;
    let format = match a.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Json,
    };
    match &cfg.output_path {
        Some(path) => emit_results(&result, format, path).map_err(runtime),
        None => write_to(None, |w| print_result(&result, format, w)),
    }
}

fn print_result(result: &SweepResult, format: OutputFormat, w: &mut dyn Write) -> Result<(), String> {
    match format {
        OutputFormat::Csv => write_csv(result, w).map_err(|e| e.to_string()),
        OutputFormat::Json => write_json(result, w).map_err(|e| e.to_string()),
    }
}

fn hist(a: &HistArgs) -> Result<(), Failure> {
    check_counts(Some(a.samples), Some(a.bins), a.threads)?;
    if a.n < 2 {
        return Err(usage(format!("--n {}: need N >= 2", a.n)));
    }
    let ks: Vec<u32> = a.k.into_iter().collect();
    let cfg = SweepConfig {
        ensembles: kinds_from(&[a.ensemble], &ks)?,
        n_grid: vec![a.n],
        samples_per_point: a.samples,
        master_seed: a.seed,
        output_path: a.out.clone(),
        histogram_bins: a.bins,
        threads: threads_from(a.threads)?,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let result = run_sweep(&cfg).map_err(runtime)?;
    write_to(a.out.as_deref(), |w| write_hist_csv(&result, w).map_err(|e| e.to_string()))
}

fn analytic() -> Result<(), Failure> {
    let table = AnalyticTable::new(&[2, 3, 6, 12]).map_err(runtime)?;
    let json = serde_json::to_string_pretty(&table).map_err(runtime)?;
    println!("{json}");
    Ok(())
}

fn validate(seed: Option<u64>) -> Result<bool, Failure> {
    let mut plan = ValidationPlan::default();
    if let Some(s) = seed {
        plan.seed = s;
    }
    let checks = run_validation(&plan);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match &cli.command {
        Command::Sweep(a) => sweep(a).map(|_| true),
        Command::Hist(a) => hist(a).map(|_| true),
        Command::Analytic => analytic().map(|_| true),
        Command::Validate { seed } => validate(*seed),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VALIDATION),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
