//! Deterministic simulated app under test.
//!
//! A model is a finite-state machine over an event alphabet. Firing an event
//! either moves to another state (covering some code blocks), crashes the
//! app with a signature, or does nothing. Every test case starts from the
//! initial state.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::genotype::TestSuite;
use crate::moea::FitnessTriple;
use crate::rng::{substream, Role};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: u32,
    pub event: u32,
    pub to: u32,
    pub blocks: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashRule {
    pub state: u32,
    pub event: u32,
    pub signature: u32,
}

/// On-disk schema of a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub alphabet_size: u32,
    pub initial_state: u32,
    pub states: Vec<u32>,
    pub transitions: Vec<Transition>,
    pub crash_rules: Vec<CrashRule>,
    pub total_blocks: u32,
}

#[derive(Debug, Clone)]
enum Cell {
    Inert,
    Move { to: usize, blocks: Vec<u32> },
    Crash(u32),
}

/// A validated model with a dense (state, event) lookup table.
#[derive(Debug, Clone)]
pub struct AppModel {
    file: ModelFile,
    initial: usize,
    table: Vec<Cell>,
}

impl PartialEq for AppModel {
    fn eq(&self, other: &Self) -> bool {
        self.file == other.file
    }
}

impl AppModel {
    pub fn new(file: ModelFile) -> Result<Self> {
        if file.alphabet_size == 0 {
            return Err(Error::parse("alphabet_size", "must be at least 1"));
        }
        if file.total_blocks == 0 {
            return Err(Error::parse("total_blocks", "must be at least 1"));
        }
        if file.states.is_empty() {
            return Err(Error::parse("states", "must list at least one state"));
        }
        let mut index = HashMap::with_capacity(file.states.len());
        for (i, &s) in file.states.iter().enumerate() {
            if index.insert(s, i).is_some() {
                return Err(Error::parse(format!("states[{i}]"), format!("duplicate state id {s}")));
            }
        }
        let initial = *index
            .get(&file.initial_state)
            .ok_or_else(|| Error::parse("initial_state", format!("{} is not a listed state", file.initial_state)))?;

        let alphabet = file.alphabet_size as usize;
        let mut table = vec![Cell::Inert; file.states.len() * alphabet];
        let lookup = |field: String, state: u32| {
            index.get(&state).copied().ok_or_else(|| Error::parse(field, format!("unknown state {state}")))
        };

        for (i, t) in file.transitions.iter().enumerate() {
            let from = lookup(format!("transitions[{i}].from"), t.from)?;
            let to = lookup(format!("transitions[{i}].to"), t.to)?;
            if t.event >= file.alphabet_size {
                return Err(Error::parse(
                    format!("transitions[{i}].event"),
                    format!("event {} >= alphabet_size {}", t.event, file.alphabet_size),
                ));
            }
            if let Some(&b) = t.blocks.iter().find(|&&b| b >= file.total_blocks) {
                return Err(Error::parse(
                    format!("transitions[{i}].blocks"),
                    format!("block id {b} >= total_blocks {}", file.total_blocks),
                ));
            }
            let cell = &mut table[from * alphabet + t.event as usize];
            if !matches!(cell, Cell::Inert) {
                return Err(Error::parse(
                    format!("transitions[{i}]"),
                    format!("duplicate transition for (state {}, event {})", t.from, t.event),
                ));
            }
            *cell = Cell::Move { to, blocks: t.blocks.clone() };
        }

        for (i, r) in file.crash_rules.iter().enumerate() {
            let state = lookup(format!("crash_rules[{i}].state"), r.state)?;
            if r.event >= file.alphabet_size {
                return Err(Error::parse(
                    format!("crash_rules[{i}].event"),
                    format!("event {} >= alphabet_size {}", r.event, file.alphabet_size),
                ));
            }
            let cell = &mut table[state * alphabet + r.event as usize];
            match cell {
                Cell::Inert => *cell = Cell::Crash(r.signature),
                Cell::Move { .. } => {
                    return Err(Error::parse(
                        format!("crash_rules[{i}]"),
                        format!("(state {}, event {}) also has a transition", r.state, r.event),
                    ))
                }
                Cell::Crash(_) => {
                    return Err(Error::parse(
                        format!("crash_rules[{i}]"),
                        format!("duplicate crash rule for (state {}, event {})", r.state, r.event),
                    ))
                }
            }
        }
        Ok(AppModel { file, initial, table })
    }

    pub fn file(&self) -> &ModelFile {
        &self.file
    }

    pub fn alphabet_size(&self) -> u32 {
        self.file.alphabet_size
    }

    pub fn total_blocks(&self) -> u32 {
        self.file.total_blocks
    }

    pub fn n_states(&self) -> usize {
        self.file.states.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::parse("model", e.to_string()))?;
        AppModel::new(file)
    }

    fn cell(&self, state: usize, event: u32) -> &Cell {
        &self.table[state * self.file.alphabet_size as usize + event as usize]
    }
}

pub fn load_model(path: &Path) -> Result<AppModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    AppModel::from_json(&text)
}

pub fn save_model(model: &AppModel, path: &Path) -> Result<()> {
    write_atomic(path, model.to_json()?.as_bytes())
}

/// How the length objective aggregates the cases of a suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthObjective {
    #[default]
    Total,
    Mean,
}

impl LengthObjective {
    pub fn of(&self, suite: &TestSuite) -> f64 {
        let total = suite.total_len() as f64;
        match self {
            LengthObjective::Total => total,
            LengthObjective::Mean => total / suite.size().max(1) as f64,
        }
    }
}

/// Crash observed while executing one case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseCrash {
    pub signature: u32,
    /// Position of the crashing event within the case.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub fitness: FitnessTriple,
    pub crash_signatures: BTreeSet<u32>,
    pub covered_blocks: BTreeSet<u32>,
    pub per_case_crash: Vec<Option<CaseCrash>>,
}

pub fn evaluate(suite: &TestSuite, model: &AppModel) -> Result<EvaluationResult> {
    evaluate_with(suite, model, LengthObjective::Total)
}

pub fn evaluate_with(suite: &TestSuite, model: &AppModel, length: LengthObjective) -> Result<EvaluationResult> {
    let mut covered = vec![false; model.total_blocks() as usize];
    let mut crash_signatures = BTreeSet::new();
    let mut per_case_crash = Vec::with_capacity(suite.size());

    for (ci, case) in suite.cases.iter().enumerate() {
        if let Some((j, e)) = case.events.iter().enumerate().find(|(_, e)| e.0 >= model.alphabet_size()) {
            return Err(Error::precondition(format!(
                "case {ci} event {j} has id {} outside alphabet of size {}",
                e.0,
                model.alphabet_size()
            )));
        }
        let mut state = model.initial;
        let mut crash = None;
        for (j, e) in case.events.iter().enumerate() {
            match model.cell(state, e.0) {
                Cell::Inert => {}
                Cell::Move { to, blocks } => {
                    for &b in blocks {
                        covered[b as usize] = true;
                    }
                    state = *to;
                }
                Cell::Crash(sig) => {
                    crash = Some(CaseCrash { signature: *sig, index: j });
                    crash_signatures.insert(*sig);
                    break;
                }
            }
        }
        per_case_crash.push(crash);
    }

    let covered_blocks: BTreeSet<u32> =
        covered.iter().enumerate().filter(|(_, &c)| c).map(|(b, _)| b as u32).collect();
    let fitness = FitnessTriple {
        crashes: crash_signatures.len() as u32,
        coverage: covered_blocks.len() as f64 / f64::from(model.total_blocks()),
        length: length.of(suite),
    };
    Ok(EvaluationResult { fitness, crash_signatures, covered_blocks, per_case_crash })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n_states: u32,
    pub alphabet_size: u32,
    pub total_blocks: u32,
    pub n_crash_rules: u32,
    /// Target number of outgoing transitions per state.
    pub branching: u32,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams { n_states: 30, alphabet_size: 12, total_blocks: 200, n_crash_rules: 8, branching: 3 }
    }
}

/// Generates a random model in which every state is reachable from state 0.
///
/// A random spanning tree rooted at the initial state is laid down first,
/// crash rules take distinct free (state, event) pairs next, then extra
/// transitions fill each state up to `branching` outgoing edges. Blocks are
/// dealt so that each one is covered by at least one transition whenever
/// the model has any transitions.
pub fn generate_model(seed: u64, params: &GeneratorParams) -> Result<AppModel> {
    let GeneratorParams { n_states, alphabet_size, total_blocks, n_crash_rules, branching } = *params;
    if n_states == 0 || alphabet_size == 0 || total_blocks == 0 {
        return Err(Error::config("n_states, alphabet_size and total_blocks must all be positive"));
    }
    let pairs = u64::from(n_states) * u64::from(alphabet_size);
    let free_after_tree = pairs - u64::from(n_states - 1);
    if u64::from(n_crash_rules) > free_after_tree {
        return Err(Error::config(format!(
            "n_crash_rules ({n_crash_rules}) must not exceed n_states * alphabet_size - (n_states - 1) = {free_after_tree}"
        )));
    }

    let mut rng = substream(seed, 0, Role::ModelGen, 0);
    let mut free: Vec<Vec<u32>> = (0..n_states).map(|_| (0..alphabet_size).collect()).collect();
    let take_free = |free: &mut Vec<Vec<u32>>, state: usize, rng: &mut crate::rng::Stream| {
        let k = rng.gen_range(0..free[state].len());
        free[state].swap_remove(k)
    };

    let mut edges: Vec<(u32, u32, u32)> = Vec::new();
    for s in 1..n_states {
        let candidates: Vec<usize> = (0..s as usize).filter(|&p| !free[p].is_empty()).collect();
        let parent = *candidates.choose(&mut rng).expect("state s-1 always has a free event");
        let event = take_free(&mut free, parent, &mut rng);
        edges.push((parent as u32, event, s));
    }

    let mut open: Vec<(u32, u32)> = Vec::new();
    for (s, evs) in free.iter().enumerate() {
        let mut evs = evs.clone();
        evs.sort_unstable();
        open.extend(evs.into_iter().map(|e| (s as u32, e)));
    }
    open.shuffle(&mut rng);
    let crash_keys: Vec<(u32, u32)> = open.drain(..n_crash_rules as usize).collect();
    for (s, e) in &crash_keys {
        free[*s as usize].retain(|x| x != e);
    }

    let mut out_degree = vec![0u32; n_states as usize];
    for &(from, _, _) in &edges {
        out_degree[from as usize] += 1;
    }
    let target = branching.min(alphabet_size);
    for s in 0..n_states as usize {
        free[s].sort_unstable();
        while out_degree[s] < target && !free[s].is_empty() {
            let event = take_free(&mut free, s, &mut rng);
            let to = rng.gen_range(0..n_states);
            edges.push((s as u32, event, to));
            out_degree[s] += 1;
        }
    }

    let mut blocks: Vec<Vec<u32>> = vec![Vec::new(); edges.len()];
    if !edges.is_empty() {
        let mut ids: Vec<u32> = (0..total_blocks).collect();
        ids.shuffle(&mut rng);
        for (k, b) in ids.into_iter().enumerate() {
            blocks[k % edges.len()].push(b);
        }
        for bs in &mut blocks {
            if bs.is_empty() {
                bs.push(rng.gen_range(0..total_blocks));
            }
            bs.sort_unstable();
        }
    }

    let mut transitions: Vec<Transition> = edges
        .into_iter()
        .zip(blocks)
        .map(|((from, event, to), blocks)| Transition { from, event, to, blocks })
        .collect();
    transitions.sort_by_key(|t| (t.from, t.event));

    let mut crash_rules: Vec<CrashRule> = crash_keys
        .into_iter()
        .map(|(state, event)| CrashRule { state, event, signature: 0 })
        .collect();
    crash_rules.sort_by_key(|r| (r.state, r.event));
    for (i, r) in crash_rules.iter_mut().enumerate() {
        r.signature = i as u32;
    }

    AppModel::new(ModelFile {
        alphabet_size,
        initial_state: 0,
        states: (0..n_states).collect(),
        transitions,
        crash_rules,
        total_blocks,
    })
}
