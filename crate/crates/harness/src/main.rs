use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pgrowth_harness::{run_experiment, Experiment, ExperimentConfig, HarnessError};

/// Runs one canonical experiment and writes its artifacts.
#[derive(Parser)]
#[command(name = "pg", version)]
struct Cli {
    experiment: Experiment,
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", cli.config.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if config.experiment != cli.experiment {
        return Err(HarnessError::Config(format!(
            "command is {} but the config describes {}",
            cli.experiment.as_str(),
            config.experiment.as_str()
        )));
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = Some(out.clone());
    }
    Ok(config)
}

fn threads() -> Result<(), HarnessError> {
    let Ok(v) = std::env::var("PG_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| HarnessError::Config(format!("PG_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| HarnessError::Config(e.to_string()))
}

fn run(cli: &Cli) -> Result<Vec<String>, HarnessError> {
    threads()?;
    let config = load(cli)?;
    let report = run_experiment(&config)?;
    println!("{}", report.dir.display());
    Ok(report.failures)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in failures {
                eprintln!("pg: validation failed: {f}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("pg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
