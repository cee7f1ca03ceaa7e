use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::artifacts::{self, csv_writer, RunArtifact};
use super::{CompareArgs, Command, ConfigOverrides, GenerateModelArgs, LandscapeArgs, RunArgs, EXIT_INPUT, EXIT_INTERNAL};
use crate::appmodel::{generate_model, load_model, save_model, GeneratorParams};
use crate::engine::{run_with, Mode, RunOptions, RunRecord, SearchConfig};
use crate::error::Error;
use crate::fsutil::write_atomic;
use crate::rng::mix;
use crate::stats::{self, ComparisonRow, SampleSet};

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() { EXIT_INPUT } else { EXIT_INTERNAL };
        CliError { code, message: e.to_string() }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::GenerateModel(args) => cmd_generate_model(&args),
        Command::Run(args) => cmd_run(&args).map(|_| ()),
        Command::Compare(args) => {
            let report = cmd_compare(&args)?;
            print!("{}", report.table());
            Ok(())
        }
        Command::Landscape(args) => {
            for p in cmd_landscape(&args)? {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).into())
}

pub fn cmd_generate_model(args: &GenerateModelArgs) -> CliResult<()> {
    let params = GeneratorParams {
        n_states: args.states,
        alphabet_size: args.alphabet,
        total_blocks: args.blocks,
        n_crash_rules: args.crash_rules,
        branching: args.branching,
    };
    let model = generate_model(args.seed, &params)?;
    save_model(&model, &args.out)?;
    let f = model.file();
    println!(
        "{}: {} states, alphabet {}, {} transitions, {} crash rules, {} blocks",
        args.out.display(),
        f.states.len(),
        f.alphabet_size,
        f.transitions.len(),
        f.crash_rules.len(),
        f.total_blocks
    );
    Ok(())
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of repetition `rep` on `model_id`, shared by both modes so runs pair up.
pub fn run_seed(base_seed: u64, model_id: &str, rep: u32) -> u64 {
    mix(&[base_seed, fnv1a(model_id), u64::from(rep)])
}

pub fn model_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into())
}

impl ConfigOverrides {
    pub fn apply(&self, cfg: &mut SearchConfig) {
        macro_rules! set {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { cfg.$target = v.into(); })*
            };
        }
        set!(
            pop => size_pop,
            offspring => size_off,
            suite_size => suite_size,
            min_len => min_seq_len,
            max_len => max_seq_len,
            crossover_prob => crossover_prob,
            mutation_prob => mutation_prob,
            inner_prob => inner_prob,
            size_init => size_init,
            div_limit => div_limit,
            n_div => n_div,
            connectedness_k => connectedness_k,
            length_objective => length_objective,
        );
    }
}

pub fn cmd_run(args: &RunArgs) -> CliResult<Vec<PathBuf>> {
    if args.reps == 0 {
        return Err(CliError::input("--reps must be at least 1"));
    }
    let mut models = Vec::new();
    for path in &args.models {
        if !path.is_file() {
            return Err(CliError::input(format!("model file {} not found", path.display())));
        }
        models.push((model_id(path), load_model(path)?));
    }
    ensure_dir(&args.out)?;

    let mut written = Vec::new();
    for (id, model) in &models {
        for &mode in &args.modes {
            let mode = Mode::from(mode);
            for rep in 0..args.reps {
                let mut config = SearchConfig { mode, ..SearchConfig::default() };
                args.overrides.apply(&mut config);
                if let Some(g) = args.generations {
                    config.g_max = g;
                }
                config.seed = run_seed(args.seed, id, rep);
                let g_max = config.g_max;
                let record = run_with(&config, model, &RunOptions { workers: args.workers }, |s| {
                    println!(
                        "{id} {mode} rep {rep} gen {}/{g_max} hv={:.4} avgdiam={:.1} ppos={:.3} coverage={:.3} crashes={}",
                        s.generation, s.hv, s.avgdiam, s.ppos, s.best_coverage, s.unique_crashes
                    );
                })?;
                let artifact = RunArtifact { model_id: id.clone(), rep, record };
                let (json, csv) = artifacts::write_run(&args.out, &artifact)?;
                written.push(json);
                written.push(csv);
            }
        }
    }
    Ok(written)
}

/// The four compared concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Concern {
    Duration,
    Coverage,
    Crashes,
    Length,
}

impl Concern {
    pub const ALL: [Concern; 4] = [Concern::Duration, Concern::Coverage, Concern::Crashes, Concern::Length];

    pub fn as_str(&self) -> &'static str {
        match self {
            Concern::Duration => "duration",
            Concern::Coverage => "coverage",
            Concern::Crashes => "crashes",
            Concern::Length => "length",
        }
    }

    pub fn larger_is_better(&self) -> bool {
        matches!(self, Concern::Coverage | Concern::Crashes)
    }

    /// Value of this concern for `record` read at `generation`.
    pub fn value(&self, record: &RunRecord, generation: u32) -> Option<f64> {
        let snap = record.snapshots.get(generation as usize).or(record.snapshots.last());
        match self {
            Concern::Duration => Some(record.duration.search_secs),
            Concern::Coverage => snap.map(|s| s.best_coverage),
            Concern::Crashes => snap.map(|s| s.unique_crashes as f64),
            Concern::Length => stats::min_crash_sequence_length_at(record, generation),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model_id: String,
    pub concern: Concern,
    pub gen_a: u32,
    pub gen_b: u32,
    pub row: ComparisonRow,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
    pub overhead_percent: BTreeMap<String, f64>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ComparisonReport {
    pub fn to_csv(&self) -> crate::Result<Vec<u8>> {
        let mut w = csv_writer().from_writer(Vec::new());
        w.write_record([
            "subject", "gen_a", "mean_a", "median_a", "sd_a", "gen_b", "mean_b", "median_b", "sd_b", "p_value", "a12",
            "effect_class", "direction",
        ])?;
        for r in &self.rows {
            w.write_record([
                format!("{}:{}", r.model_id, r.concern.as_str()),
                r.gen_a.to_string(),
                r.row.a.mean.to_string(),
                r.row.a.median.to_string(),
                fmt_opt(r.row.a.sd),
                r.gen_b.to_string(),
                r.row.b.mean.to_string(),
                r.row.b.median.to_string(),
                fmt_opt(r.row.b.sd),
                r.row.p_value.to_string(),
                r.row.a12.to_string(),
                r.row.effect_class.as_str().to_string(),
                r.row.direction.as_str().to_string(),
            ])?;
        }
        w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<24} {:>5} {:>12} {:>12} {:>5} {:>12} {:>12} {:>8} {:>6} {:<10} {:<7}",
            "subject", "gen_a", "median_a", "sd_a", "gen_b", "median_b", "sd_b", "p", "a12", "effect", "dir"
        );
        for r in &self.rows {
            let sd = |v: Option<f64>| v.map_or("--".to_string(), |x| format!("{x:.4}"));
            let _ = writeln!(
                out,
                "{:<24} {:>5} {:>12.4} {:>12} {:>5} {:>12.4} {:>12} {:>8.4} {:>6.3} {:<10} {:<7}{}",
                format!("{}:{}", r.model_id, r.concern.as_str()),
                r.gen_a,
                r.row.a.median,
                sd(r.row.a.sd),
                r.gen_b,
                r.row.b.median,
                sd(r.row.b.sd),
                r.row.p_value,
                r.row.a12,
                r.row.effect_class.as_str(),
                r.row.direction.as_str(),
                if r.row.significant { " *" } else { "" }
            );
        }
        for (model, o) in &self.overhead_percent {
            let _ = writeln!(out, "overhead {model}: {o:.2}%");
        }
        out
    }
}

fn select_side(dir: &Path, mode: Option<Mode>) -> CliResult<BTreeMap<String, Vec<RunRecord>>> {
    if !dir.is_dir() {
        return Err(CliError::input(format!("run directory {} not found", dir.display())));
    }
    let mut side: BTreeMap<String, Vec<RunRecord>> = BTreeMap::new();
    let mut modes_seen: BTreeMap<String, BTreeSet<Mode>> = BTreeMap::new();
    for ((model, m), runs) in artifacts::load_runs(dir)? {
        if mode.is_some_and(|want| want != m) {
            continue;
        }
        modes_seen.entry(model.clone()).or_default().insert(m);
        side.entry(model).or_default().extend(runs.into_iter().map(|a| a.record));
    }
    if let Some((model, _)) = modes_seen.iter().find(|(_, ms)| ms.len() > 1) {
        return Err(CliError::input(format!(
            "{} holds several modes for model `{model}`; pick one with --a-mode/--b-mode",
            dir.display()
        )));
    }
    if side.is_empty() {
        return Err(CliError::input(format!("no run artifacts in {}", dir.display())));
    }
    Ok(side)
}

fn median(values: &[f64]) -> f64 {
    SampleSet::new("", values.to_vec()).median()
}

/// Compares side `a` against side `b`. When exactly one side ran in div mode
/// against a baseline, its non-duration concerns are read at the generation
/// that equalizes the median wall clock.
pub fn compare_sides(
    a: &BTreeMap<String, Vec<RunRecord>>,
    b: &BTreeMap<String, Vec<RunRecord>>,
) -> CliResult<ComparisonReport> {
    let ka: BTreeSet<&String> = a.keys().collect();
    let kb: BTreeSet<&String> = b.keys().collect();
    if ka != kb {
        let only_a: Vec<_> = ka.difference(&kb).map(|s| s.as_str()).collect();
        let only_b: Vec<_> = kb.difference(&ka).map(|s| s.as_str()).collect();
        return Err(CliError::input(format!(
            "model sets differ: only in a: [{}]; only in b: [{}]",
            only_a.join(", "),
            only_b.join(", ")
        )));
    }

    let mut report = ComparisonReport::default();
    for model in ka {
        let (ra, rb) = (&a[model], &b[model]);
        let (mode_a, mode_b) = (ra[0].mode, rb[0].mode);
        let (g_a, g_b) = (ra[0].config.g_max, rb[0].config.g_max);
        let dur = |rs: &[RunRecord]| rs.iter().map(|r| r.duration.search_secs).collect::<Vec<_>>();

        let (mut adj_a, mut adj_b) = (g_a, g_b);
        match (mode_a, mode_b) {
            (Mode::Div, Mode::Baseline) => {
                let o = stats::overhead_percent(median(&dur(rb)), median(&dur(ra)))?;
                adj_a = stats::adjusted_generations(g_a, o);
                report.overhead_percent.insert(model.clone(), o);
            }
            (Mode::Baseline, Mode::Div) => {
                let o = stats::overhead_percent(median(&dur(ra)), median(&dur(rb)))?;
                adj_b = stats::adjusted_generations(g_b, o);
                report.overhead_percent.insert(model.clone(), o);
            }
            _ => {}
        }

        for concern in Concern::ALL {
            let (gen_a, gen_b) = match concern {
                Concern::Duration => (g_a, g_b),
                _ => (adj_a, adj_b),
            };
            let va: Vec<f64> = ra.iter().filter_map(|r| concern.value(r, gen_a)).collect();
            let vb: Vec<f64> = rb.iter().filter_map(|r| concern.value(r, gen_b)).collect();
            if va.is_empty() || vb.is_empty() {
                log::warn!("{model}: no values for {} on one side, row skipped", concern.as_str());
                continue;
            }
            let row = stats::compare(
                &SampleSet::new(format!("{model}/a"), va),
                &SampleSet::new(format!("{model}/b"), vb),
                concern.larger_is_better(),
            )?;
            report.rows.push(ReportRow { model_id: model.clone(), concern, gen_a, gen_b, row });
        }
    }
    Ok(report)
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult<ComparisonReport> {
    let a = select_side(&args.a, args.a_mode.map(Mode::from))?;
    let b = select_side(&args.b, args.b_mode.map(Mode::from))?;
    let report = compare_sides(&a, &b)?;
    ensure_dir(&args.out)?;
    write_atomic(&args.out.join("comparison.csv"), &report.to_csv()?)?;
    Ok(report)
}

/// Per-generation mean of each metric across repetitions.
pub fn average_metrics(runs: &[&RunRecord]) -> CliResult<Vec<(u32, [f64; 11])>> {
    let len = runs[0].snapshots.len();
    if runs.iter().any(|r| r.snapshots.len() != len) {
        return Err(CliError::input("repetitions disagree on the number of generations"));
    }
    Ok((0..len)
        .map(|g| {
            let mut acc = [0.0; 11];
            for r in runs {
                for (a, v) in acc.iter_mut().zip(r.snapshots[g].metric_values()) {
                    *a += v;
                }
            }
            for a in &mut acc {
                *a /= runs.len() as f64;
            }
            (runs[0].snapshots[g].generation, acc)
        })
        .collect())
}

pub fn cmd_landscape(args: &LandscapeArgs) -> CliResult<Vec<PathBuf>> {
    if !args.input.is_dir() {
        return Err(CliError::input(format!("input directory {} not found", args.input.display())));
    }
    let groups = artifacts::load_runs(&args.input)?;
    if groups.is_empty() {
        return Err(CliError::input(format!("no run artifacts in {}", args.input.display())));
    }
    ensure_dir(&args.out)?;
    let mut written = Vec::new();
    for ((model, mode), runs) in &groups {
        for a in runs {
            let rows: Vec<_> = a.record.snapshots.iter().map(|s| (s.generation, s.metric_values())).collect();
            let path = args.out.join(format!("landscape_{model}_{mode}_rep{}.csv", a.rep));
            write_atomic(&path, &artifacts::metrics_csv(&rows)?)?;
            written.push(path);
        }
        let records: Vec<&RunRecord> = runs.iter().map(|a| &a.record).collect();
        let path = args.out.join(format!("landscape_{model}_{mode}.csv"));
        write_atomic(&path, &artifacts::metrics_csv(&average_metrics(&records)?)?)?;
        written.push(path);
    }
    Ok(written)
}
