use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use plasticity_harness::data::{gen_synthetic, write_csv, DataSource, DatasetManifest, ShiftScript, SyntheticDocument};
use plasticity_harness::runner::{self, ExperimentConfig, RunOptions};
use plasticity_harness::{Error, Result};

#[derive(Parser)]
#[command(name = "plasticity", version, about = "Temporal-plasticity benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Config file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic series from a generator file.
    Generate(Common),
    /// Check a config file without running it.
    Validate(Common),
    /// Execute an experiment.
    Run(Common),
    /// Summarize a results directory (given by --out).
    Report(Common),
}

/// Generator file consumed by `generate`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateFile {
    #[serde(default = "default_name")]
    name: String,
    script: ShiftScript,
    length: usize,
    #[serde(default = "one")]
    channels: usize,
    partitions: usize,
    #[serde(default)]
    seed: u64,
}

fn default_name() -> String {
    "synthetic".into()
}

fn one() -> usize {
    1
}

fn need<'a>(path: &'a Option<PathBuf>, flag: &str) -> std::result::Result<&'a Path, ExitCode> {
    path.as_deref().ok_or_else(|| {
        eprintln!("error: --{flag} is required");
        ExitCode::from(1)
    })
}

fn generate(args: &Common) -> std::result::Result<(), ExitCode> {
    let config = need(&args.config, "config")?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let result = (|| -> Result<PathBuf> {
        let text = std::fs::read_to_string(config).map_err(|e| Error::Invalid(format!("{}: {e}", config.display())))?;
        let file: GenerateFile = serde_json::from_str(&text)?;
        let seeds = args.seed.clone().unwrap_or_else(|| vec![file.seed]);
        let mut last = out.clone();
        for seed in seeds {
            let stream = gen_synthetic(&file.script, file.length, file.channels, file.partitions, seed)?;
            let stem = format!("{}-s{seed}", file.name);
            let csv_path = out.join(format!("{stem}.csv"));
            write_csv(&stream.series, &csv_path)?;
            let doc = SyntheticDocument {
                manifest: DatasetManifest::describe(&stem, &stream.series, DataSource::Synthetic),
                script: file.script.clone(),
                seed,
                partitions: file.partitions,
                events: stream.events,
            };
            runner::write_atomic(&out.join(format!("{stem}.json")), serde_json::to_string_pretty(&doc)?.as_bytes())?;
            last = csv_path;
        }
        Ok(last)
    })();
    match result {
        Ok(path) => {
            println!("wrote {}", path.display());
            Ok(())
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(1))
        }
    }
}

fn validate(args: &Common) -> std::result::Result<(), ExitCode> {
    let config = need(&args.config, "config")?;
    let findings = runner::validate_config(config);
    if findings.is_empty() {
        println!("ok");
        Ok(())
    } else {
        for f in findings {
            println!("{f}");
        }
        Err(ExitCode::from(1))
    }
}

fn run(args: &Common) -> std::result::Result<(), ExitCode> {
    let path = need(&args.config, "config")?;
    let (config, base) = match ExperimentConfig::load(path) {
        Ok(loaded) => loaded,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return Err(ExitCode::from(1));
        }
    };
    let options = RunOptions {
        // --out is taken relative to the working directory, not the config file
        output: args.out.as_ref().map(|o| std::path::absolute(o).unwrap_or_else(|_| o.clone())),
        seeds: args.seed.clone(),
        jobs: args.jobs,
    };
    match runner::run_experiment(&config, &base, &options) {
        Ok(result) => {
            println!("{}", result.dir.display());
            for failure in &result.summary.failures {
                eprintln!("failed: {} seed {}: {}", failure.model_id, failure.seed, failure.error);
            }
            if result.failed() {
                Err(ExitCode::from(2))
            } else {
                Ok(())
            }
        }
        Err(Error::Config(findings)) => {
            for f in findings {
                eprintln!("{f}");
            }
            Err(ExitCode::from(1))
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(2))
        }
    }
}

fn report(args: &Common) -> std::result::Result<(), ExitCode> {
    let dir = need(&args.out, "out")?;
    match runner::report(dir) {
        Ok(report) => {
            print!("{}", report.text);
            Ok(())
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(2))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Cmd::Generate(args) => generate(args),
        Cmd::Validate(args) => validate(args),
        Cmd::Run(args) => run(args),
        Cmd::Report(args) => report(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
