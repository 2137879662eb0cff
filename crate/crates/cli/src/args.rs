use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "washboard", version, about = "Drift and effective diffusion in tilted periodic potentials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the selected engines over a list of forces and write one row per force.
    Sweep(SweepArgs),
    /// Compare two or more engines and report pass/fail per force.
    Validate(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

/// Flags override values from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    /// JSON config file with any of the options below (snake_case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Potential as inline JSON, e.g. '{"kind":"cosine","A":1}', or a path to a JSON file.
    #[arg(long)]
    pub potential: Option<String>,
    /// Forces: `1,2,4`, linear `a:b:n`, or logarithmic `loga:b:n`.
    #[arg(long, allow_hyphen_values = true)]
    pub forces: Option<String>,
    /// Comma-separated subset of formula,small_f,large_f,sde,fpe.
    #[arg(long)]
    pub engines: Option<String>,
    /// Table destination; stdout when absent (sweep only).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON summary destination; stderr for sweep, stdout for validate.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "quad-n")]
    pub quad_n: Option<usize>,
    #[arg(long = "quad-tol")]
    pub quad_tol: Option<f64>,
    #[arg(long = "sde-dt")]
    pub sde_dt: Option<f64>,
    #[arg(long = "sde-tfinal")]
    pub sde_tfinal: Option<f64>,
    #[arg(long = "sde-paths")]
    pub sde_paths: Option<usize>,
    #[arg(long = "fpe-n")]
    pub fpe_n: Option<usize>,
    #[arg(long = "fpe-tfinal")]
    pub fpe_tfinal: Option<f64>,
    /// Locate the force minimising D_eff within `a:b`.
    #[arg(long = "min-scan", allow_hyphen_values = true)]
    pub min_scan: Option<String>,
    /// Largest |f| at which the small-force expansion is judged.
    #[arg(long = "small-f-max")]
    pub small_f_max: Option<f64>,
    /// Smallest f at which the large-force expansion is judged.
    #[arg(long = "large-f-min")]
    pub large_f_min: Option<f64>,
}
