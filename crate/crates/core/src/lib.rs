//! Multi-objective test-suite generation for simulated apps.
//!
//! The crate provides a baseline NSGA-II search and a diversity-promoting
//! variant over test suites of GUI event sequences, a per-generation fitness
//! landscape analyzer, and the statistics used to compare repeated runs.

pub mod appmodel;
pub mod cli;
pub mod engine;
pub mod error;
mod fsutil;
pub mod genotype;
pub mod landscape;
pub mod moea;
pub mod rng;
pub mod stats;
pub mod variation;

pub use appmodel::{evaluate, generate_model, load_model, save_model, AppModel, EvaluationResult, GeneratorParams};
pub use engine::{run, run_with, Mode, RunOptions, RunRecord, SearchConfig};
pub use error::{Error, Result};
pub use genotype::{distance, is_duplicate, random_suite, Event, SuiteShape, TestCase, TestSuite};
pub use landscape::LandscapeSnapshot;
pub use moea::{dominates, hypervolume, FitnessTriple};
