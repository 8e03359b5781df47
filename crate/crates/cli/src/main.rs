//! `gcca` command-line driver.
//!
//! Exit codes: 0 success, 1 usage, 2 data (I/O, parsing, validation),
//! 3 model (fitting or simulation failure).

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gcca::error::ErrorClass;

use crate::config::{Emit, FileConfig, Overrides, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Model(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Model(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Model(m) => m,
        }
    }

    /// Wraps a library error, prefixing the offending file when known.
    pub fn from_core(e: gcca::Error, file: Option<&Path>) -> Self {
        let msg = match file {
            Some(f) => format!("{}: {e}", f.display()),
            None => e.to_string(),
        };
        match e.class() {
            ErrorClass::Data => CliError::Data(msg),
            ErrorClass::Model => CliError::Model(msg),
        }
    }
}

impl From<gcca::Error> for CliError {
    fn from(e: gcca::Error) -> Self {
        CliError::from_core(e, None)
    }
}

#[derive(Parser)]
#[command(name = "gcca", version, about = "Graph canonical correlation analysis")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct RunFlags {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated tuning grid, e.g. 0.5,0.6,0.7.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long)]
    max_subgraphs: Option<usize>,
    /// Defaults to epsilon.
    #[arg(long)]
    min_block_mean: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated outputs: json, csv, table.
    #[arg(long, value_delimiter = ',', value_enum)]
    emit: Option<Vec<Emit>>,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            epsilon: self.epsilon,
            lambda_grid: self.lambdas.clone(),
            max_subgraphs: self.max_subgraphs,
            min_block_mean: self.min_block_mean,
            seed: self.seed,
            output_dir: self.out.clone(),
            emit: self.emit.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit on two CSV files sharing the same subjects (rows).
    Fit {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Monte-Carlo study of a planted design from a TOML file with a
    /// `[simulation]` table.
    Simulate {
        #[command(flatten)]
        run: RunFlags,
        /// Also run the convergence study over these sample sizes.
        #[arg(long, value_delimiter = ',')]
        convergence: Option<Vec<usize>>,
        /// Print aligned recovery and error tables.
        #[arg(long)]
        emit_table: bool,
    },
    /// Write one synthetic replicate (x.csv, y.csv, truth.json).
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        replicate: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy vs exhaustive agreement on small planted instances.
    #[command(hide = true)]
    OracleCheck {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.7)]
        lambda: f64,
        #[arg(long, default_value_t = 0.95)]
        min_rate: f64,
    },
}

fn load_file(path: Option<&Path>) -> Result<FileConfig, CliError> {
    path.map_or_else(|| Ok(FileConfig::default()), FileConfig::load)
}

fn validate(rc: &RunConfig) -> Result<(), CliError> {
    if rc.lambda_grid.is_empty() {
        return Err(CliError::Usage("lambda grid is empty".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot set up thread pool: {e}")))?;
    }
    match cli.command {
        Command::Fit { x, y, run } => {
            let rc = RunConfig::resolve(&load_file(run.config.as_deref())?, &run.overrides());
            validate(&rc)?;
            commands::cmd_fit(&x, &y, &rc)
        }
        Command::Simulate {
            run,
            convergence,
            emit_table,
        } => {
            let path = run
                .config
                .clone()
                .ok_or_else(|| CliError::Usage("simulate needs --config with a [simulation] table".into()))?;
            let file = FileConfig::load(&path)?;
            let rc = RunConfig::resolve(&file, &run.overrides());
            validate(&rc)?;
            let sim = file
                .simulation
                .as_ref()
                .ok_or_else(|| CliError::Usage(format!("{} has no [simulation] table", path.display())))?
                .with_seed(rc.seed);
            commands::cmd_simulate(&path, &sim, &rc, convergence.as_deref(), emit_table)
        }
        Command::Generate {
            config,
            seed,
            replicate,
            out,
        } => {
            let file = FileConfig::load(&config)?;
            let seed = seed.or(file.seed).unwrap_or(0);
            let sim = file
                .simulation
                .as_ref()
                .ok_or_else(|| CliError::Usage(format!("{} has no [simulation] table", config.display())))?
                .with_seed(seed);
            for p in commands::cmd_generate(&sim, replicate, &out)? {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::OracleCheck {
            instances,
            seed,
            lambda,
            min_rate,
        } => {
            if commands::cmd_oracle_check(instances, seed, lambda, min_rate)? {
                Ok(())
            } else {
                Err(CliError::Model("oracle agreement below threshold".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
