//! Run configuration: flags override the TOML file, which overrides defaults.

use std::path::{Path, PathBuf};

use gcca::data::DEFAULT_EPSILON;
use gcca::extraction::DEFAULT_MAX_SUBGRAPHS;
use gcca::tuning::default_lambda_grid;
use gcca::{GccaConfig, SimConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Json,
    Csv,
    Table,
}

/// Planted-block design as written in the `[simulation]` table. The seed is
/// deliberately absent: it comes from the run-level `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub block_rows: usize,
    pub block_cols: usize,
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub replicates: usize,
}

impl SimSection {
    pub fn with_seed(&self, seed: u64) -> SimConfig {
        SimConfig {
            n: self.n,
            p: self.p,
            q: self.q,
            block_rows: self.block_rows,
            block_cols: self.block_cols,
            rho_lo: self.rho_lo,
            rho_hi: self.rho_hi,
            seed,
            replicates: self.replicates,
        }
    }
}

/// Everything a config file may set.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub epsilon: Option<f64>,
    pub lambda_grid: Option<Vec<f64>>,
    pub max_subgraphs: Option<usize>,
    pub min_block_mean: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub emit: Option<Vec<Emit>>,
    pub simulation: Option<SimSection>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Values given on the command line; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub lambda_grid: Option<Vec<f64>>,
    pub max_subgraphs: Option<usize>,
    pub min_block_mean: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub emit: Option<Vec<Emit>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub epsilon: f64,
    pub lambda_grid: Vec<f64>,
    pub max_subgraphs: usize,
    pub min_block_mean: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub emit: Vec<Emit>,
}

pub const DEFAULT_OUTPUT_DIR: &str = "gcca_out";

impl RunConfig {
    pub fn resolve(file: &FileConfig, flags: &Overrides) -> Self {
        let epsilon = flags.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON);
        let mut emit = flags
            .emit
            .clone()
            .or_else(|| file.emit.clone())
            .unwrap_or_else(|| vec![Emit::Json, Emit::Csv]);
        emit.sort_unstable();
        emit.dedup();
        Self {
            epsilon,
            lambda_grid: flags
                .lambda_grid
                .clone()
                .or_else(|| file.lambda_grid.clone())
                .unwrap_or_else(default_lambda_grid),
            max_subgraphs: flags
                .max_subgraphs
                .or(file.max_subgraphs)
                .unwrap_or(DEFAULT_MAX_SUBGRAPHS),
            // Follows the resolved epsilon unless set explicitly somewhere.
            min_block_mean: flags.min_block_mean.or(file.min_block_mean).unwrap_or(epsilon),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            output_dir: flags
                .output_dir
                .clone()
                .or_else(|| file.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
            emit,
        }
    }

    pub fn gcca(&self) -> GccaConfig {
        GccaConfig {
            epsilon: self.epsilon,
            lambdas: self.lambda_grid.clone(),
            max_subgraphs: self.max_subgraphs,
            min_block_mean: self.min_block_mean,
        }
    }

    pub fn emits(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }
}
