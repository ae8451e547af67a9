//! Experiment harness for the ramdp planners.
//!
//! Exit codes: 0 success, 2 bad configuration or arguments, 3 solver
//! failure, 4 output failure.

pub mod args;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use ramdp_core::simulation::{write_batch_csv, BatchRow};
use thiserror::Error;

use args::{Cli, Command};
use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ramdp_core::Error),
    #[error("cannot write {}: {message}", path.display())]
    Output { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use ramdp_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Output { .. } => 4,
            CliError::Core(e) => match e {
                E::Divergence { .. } | E::Infeasible { .. } | E::Internal(_) => 3,
                E::Io(_) | E::Csv(_) | E::Json(_) => 4,
                E::Domain(_) | E::InvalidModel(_) | E::Contract(_) | E::BudgetExceeded(_) => 2,
            },
        }
    }
}

fn write_rows(rows: &[BatchRow], out: &Path) -> Result<(), CliError> {
    let fail = |e: &dyn std::fmt::Display| CliError::Output {
        path: out.to_path_buf(),
        message: e.to_string(),
    };
    if out == Path::new("-") {
        return write_batch_csv(io::stdout().lock(), rows).map_err(|e| fail(&e));
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| fail(&e))?;
    }
    let mut w = BufWriter::new(File::create(out).map_err(|e| fail(&e))?);
    write_batch_csv(&mut w, rows).map_err(|e| fail(&e))?;
    w.flush().map_err(|e| fail(&e))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {jobs} workers: {e}")))?;
    }
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let rows = commands::run_experiment(&cfg, cli.seed, cli.episodes)?;
            let out = out
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("-"));
            write_rows(&rows, &out)?;
            if out != Path::new("-") {
                eprintln!("wrote {} rows to {}", rows.len(), out.display());
            }
        }
        Command::Oracle(args) => {
            println!(
                "{}",
                commands::oracle_report(&args, cli.seed, cli.episodes)?
            );
        }
        Command::ExportModel { env, params, out } => {
            println!("{}", commands::export_model(env, &params, &out)?);
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, mapping failures to exit codes.
pub fn run_cli<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            e.print().ok();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
