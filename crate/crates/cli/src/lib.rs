//! Seeded experiment runner: reads a flat TOML configuration, runs one
//! experiment, and writes CSV series, optional SVG charts and a JSON summary
//! into a single output directory.

pub mod config;
pub mod experiments;
pub mod summary;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Experiment, ExperimentConfig};
pub use summary::{Check, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] s7flow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(_) => 1,
        }
    }
}

/// Output sink confined to one directory. Artifact names are plain file names.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let plain = Path::new(name)
            .file_name()
            .map(|f| f == name)
            .unwrap_or(false);
        if !plain || name == ".." {
            return Err(CliError::Config(format!(
                "artifact name {name:?} is not a plain file name"
            )));
        }
        fs::write(self.dir.join(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn artifacts(&self) -> &[String] {
        &self.written
    }
}

/// Runs the configured experiment on the current rayon pool.
pub fn run(config: &ExperimentConfig, output: &Path) -> Result<RunSummary, CliError> {
    config.validate()?;
    let clock = Instant::now();
    let mut out = Outputs::create(output)?;
    log::info!("running {:?} into {}", config.experiment, output.display());
    let checks = experiments::dispatch(config, &mut out)?;
    let mut summary = RunSummary {
        config: config.clone(),
        passed: checks.iter().all(|c| c.pass),
        checks,
        wall_time_seconds: 0.0,
        artifacts: out.artifacts().to_vec(),
    };
    summary.artifacts.push("summary.json".into());
    summary.wall_time_seconds = clock.elapsed().as_secs_f64();
    out.write("summary.json", &summary.to_json())?;
    Ok(summary)
}

/// Runs on a dedicated pool of `threads` workers (0: rayon default).
pub fn run_with_threads(
    config: &ExperimentConfig,
    output: &Path,
    threads: usize,
) -> Result<RunSummary, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| run(config, output))
}
