//! Command-line front end: `generate-model`, `run`, `compare`, `landscape`.

pub mod artifacts;
pub mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::appmodel::LengthObjective;
use crate::engine::Mode;

/// Exit code for bad flags or inputs.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for internal failures.
pub const EXIT_INTERNAL: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "divgen", version, about = "Diversity-aware multi-objective test-suite generation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random app model.
    GenerateModel(GenerateModelArgs),
    /// Run repeated searches and write run artifacts.
    Run(RunArgs),
    /// Compare two sets of runs concern by concern.
    Compare(CompareArgs),
    /// Export per-generation landscape metrics averaged over repetitions.
    Landscape(LandscapeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateModelArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 30)]
    pub states: u32,
    #[arg(long, default_value_t = 12)]
    pub alphabet: u32,
    #[arg(long, default_value_t = 200)]
    pub blocks: u32,
    #[arg(long = "crash-rules", default_value_t = 8)]
    pub crash_rules: u32,
    #[arg(long, default_value_t = 3)]
    pub branching: u32,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Model file; may be repeated.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    /// Search mode; may be repeated to run both.
    #[arg(long = "mode", value_enum, default_values_t = [ModeArg::Baseline])]
    pub modes: Vec<ModeArg>,
    #[arg(long, default_value_t = 1)]
    pub reps: u32,
    #[arg(long)]
    pub generations: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Evaluation threads per run (0 = all cores). Never affects results.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Debug, Default, Args)]
pub struct ConfigOverrides {
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub offspring: Option<usize>,
    #[arg(long = "suite-size")]
    pub suite_size: Option<usize>,
    #[arg(long = "min-len")]
    pub min_len: Option<usize>,
    #[arg(long = "max-len")]
    pub max_len: Option<usize>,
    #[arg(long = "crossover-prob")]
    pub crossover_prob: Option<f64>,
    #[arg(long = "mutation-prob")]
    pub mutation_prob: Option<f64>,
    #[arg(long = "inner-prob")]
    pub inner_prob: Option<f64>,
    #[arg(long = "size-init")]
    pub size_init: Option<usize>,
    #[arg(long = "div-limit")]
    pub div_limit: Option<f64>,
    #[arg(long = "n-div")]
    pub n_div: Option<usize>,
    /// Connectedness threshold k.
    #[arg(long = "connectedness-k")]
    pub connectedness_k: Option<u64>,
    #[arg(long = "length-objective", value_enum)]
    pub length_objective: Option<LengthArg>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Run directory of the first approach.
    #[arg(long = "a")]
    pub a: PathBuf,
    /// Run directory of the second approach.
    #[arg(long = "b")]
    pub b: PathBuf,
    #[arg(long = "a-mode", value_enum)]
    pub a_mode: Option<ModeArg>,
    #[arg(long = "b-mode", value_enum)]
    pub b_mode: Option<ModeArg>,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    /// Directory holding run artifacts.
    #[arg(long = "input")]
    pub input: PathBuf,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Baseline,
    Div,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Baseline => Mode::Baseline,
            ModeArg::Div => Mode::Div,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LengthArg {
    Total,
    Mean,
}

impl From<LengthArg> for LengthObjective {
    fn from(l: LengthArg) -> Self {
        match l {
            LengthArg::Total => LengthObjective::Total,
            LengthArg::Mean => LengthObjective::Mean,
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("DIVGEN_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `std::env::args`, runs the command, and returns the process exit code.
pub fn main() -> i32 {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
