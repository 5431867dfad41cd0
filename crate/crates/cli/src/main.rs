use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use s7flow_cli::config::{ExperimentConfig, SCHEMA};
use s7flow_cli::{run_with_threads, CliError};

/// Run a seeded experiment on stochastic flows over the 7-sphere.
#[derive(Debug, Parser)]
#[command(name = "s7flow", version)]
struct Args {
    /// TOML configuration file
    #[arg(long, required_unless_present = "print_schema")]
    config: Option<PathBuf>,
    /// Override the seed from the file
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory (overrides `output` in the file; default `out`)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Print the configuration schema and exit
    #[arg(long)]
    print_schema: bool,
}

fn load(args: &Args) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let path = args.config.as_ref().expect("clap enforces --config");
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(dir) = &args.output {
        cfg.output = Some(dir.clone());
    }
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    if args.print_schema {
        print!("{SCHEMA}");
        return ExitCode::SUCCESS;
    }
    let result = load(&args).and_then(|(cfg, out)| run_with_threads(&cfg, &out, args.threads));
    match result {
        Ok(summary) => {
            for line in summary.report_lines() {
                println!("{line}");
            }
            println!("wrote {} files", summary.artifacts.len());
            if summary.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
