//! Command-line surface: `gen`, `metrics` and `bench`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::bench::{run_bench, to_csv, BenchConfig};
use crate::dp::NoiseKind;
use crate::error::{Error, Result};
use crate::io::{load_dataset, save_dataset};
use crate::metrics::workload_error;
use crate::partition::{partition, PartitionMode};
use crate::pipeline::{run_caps, Algo, BackendKind, CapsConfig, PrivacyBudget};
use crate::schema::Schema;
use crate::workload::Workload;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sharesynth", version, about = "Differentially private synthetic data from secret-shared inputs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Workload error between two datasets.
    Metrics(MetricsArgs),
    /// Scaling sweep of the secure marginal computation, as CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    domain: PathBuf,
    /// `all-2way` or a workload JSON file.
    #[arg(long, default_value = "all-2way")]
    workload: String,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-9)]
    delta: f64,
    #[arg(long, default_value_t = 10)]
    rounds: usize,
    #[arg(long, default_value = "aim", value_parser = parse_with::<Algo>)]
    algo: Algo,
    /// `ih`, `bm`, `lap` or a full noise name.
    #[arg(long, default_value = "ih", value_parser = parse_with::<NoiseKind>)]
    noise: NoiseKind,
    /// `central`, `horizontal:N`, `vertical:N` or `mixed:FILE`.
    #[arg(long, default_value = "central")]
    partition: String,
    #[arg(long, default_value = "mpc", value_parser = parse_with::<BackendKind>)]
    backend: BackendKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write a metrics report comparing the output with the input.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Write the run log.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    synth: PathBuf,
    #[arg(long)]
    domain: PathBuf,
    #[arg(long, default_value = "all-2way")]
    workload: String,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [250, 500, 1000])]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [2])]
    holders: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 3])]
    qstar: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    omega: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_with<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Metrics(a) => metrics(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                EXIT_USER
            } else {
                EXIT_INTERNAL
            }
        }
    }
}

fn workload_for(spec: &str, schema: &Schema) -> Result<Workload> {
    match spec {
        "all-2way" => Workload::all_2way(schema),
        path => Workload::from_file(Path::new(path), schema),
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io { path: p.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let start = Instant::now();
    let data = load_dataset(&a.data, &a.domain)?;
    let workload = workload_for(&a.workload, &data.schema)?;
    let mode: PartitionMode = a.partition.parse()?;
    let budget = PrivacyBudget::new(a.epsilon, a.delta, a.rounds)?;
    let (plan, holders) = partition(&data, &mode, a.seed)?;
    let config = CapsConfig {
        workload: workload.clone(),
        budget,
        algo: a.algo,
        noise: a.noise,
        backend: a.backend,
        seed: a.seed,
        record_messages: false,
    };
    let (synth, log) = run_caps(&data.schema, &plan, &holders, &config)?;
    save_dataset(&a.out, &synth)?;
    if let Some(p) = &a.log {
        write_text(Some(p), &(log.to_json() + "\n"))?;
    }
    if let Some(p) = &a.metrics {
        let mut report = workload_error(&data, &synth, &workload)?;
        report.config = json!({
            "data": a.data.display().to_string(),
            "workload": a.workload,
            "epsilon": a.epsilon,
            "delta": a.delta,
            "rounds": a.rounds,
            "algo": a.algo.to_string(),
            "noise": a.noise.to_string(),
            "partition": mode.to_string(),
            "backend": a.backend.to_string(),
        });
        report.seed = Some(a.seed);
        report.runtime_ms = Some(start.elapsed().as_millis());
        report.transcript = log.transcript_summary.clone();
        write_text(Some(p), &(report.to_json() + "\n"))?;
    }
    Ok(())
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let real = load_dataset(&a.real, &a.domain)?;
    let synth = load_dataset(&a.synth, &a.domain)?;
    let workload = workload_for(&a.workload, &real.schema)?;
    let mut report = workload_error(&real, &synth, &workload)?;
    report.config = json!({
        "real": a.real.display().to_string(),
        "synth": a.synth.display().to_string(),
        "workload": a.workload,
    });
    write_text(a.out.as_deref(), &(report.to_json() + "\n"))
}

fn bench(a: BenchArgs) -> Result<()> {
    let rows = run_bench(&BenchConfig { ns: a.n, holders: a.holders, qstar: a.qstar, omega: a.omega, seed: a.seed })?;
    write_text(a.out.as_deref(), &to_csv(&rows)?)
}
