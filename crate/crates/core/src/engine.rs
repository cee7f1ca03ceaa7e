//! The search loop, in baseline NSGA-II and diversity-promoting modes.

use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::appmodel::{evaluate_with, AppModel, LengthObjective};
use crate::error::{Error, Result};
use crate::genotype::{random_suite, DistanceMatrix, SuiteShape, TestSuite};
use crate::landscape::{self, LandscapeParams, LandscapeSnapshot};
use crate::moea::{dominates, FitnessTriple, FrontAssignment};
use crate::rng::{Role, StreamSource};
use crate::variation::{whole_test_suite_variation, VariationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Div,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Div => "div",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "div" => Ok(Mode::Div),
            other => Err(Error::config(format!("unknown mode `{other}` (expected baseline or div)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub inner_prob: f64,
    pub size_pop: usize,
    pub size_off: usize,
    pub suite_size: usize,
    pub min_seq_len: usize,
    pub max_seq_len: usize,
    pub g_max: u32,
    pub size_init: usize,
    pub div_limit: f64,
    pub n_div: usize,
    pub mode: Mode,
    pub seed: u64,
    pub connectedness_k: u64,
    pub length_objective: LengthObjective,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            crossover_prob: 0.7,
            mutation_prob: 0.3,
            inner_prob: 0.3,
            size_pop: 50,
            size_off: 50,
            suite_size: 5,
            min_seq_len: 20,
            max_seq_len: 500,
            g_max: 40,
            size_init: 100,
            div_limit: 0.5,
            n_div: 15,
            mode: Mode::Baseline,
            seed: 0,
            connectedness_k: 300,
            length_objective: LengthObjective::Total,
        }
    }
}

impl SearchConfig {
    pub fn variation(&self) -> VariationConfig {
        VariationConfig {
            crossover_prob: self.crossover_prob,
            mutation_prob: self.mutation_prob,
            inner_prob: self.inner_prob,
        }
    }

    pub fn shape(&self) -> SuiteShape {
        SuiteShape { suite_size: self.suite_size, min_seq_len: self.min_seq_len, max_seq_len: self.max_seq_len }
    }

    /// Nadir point: no crashes, no coverage, longest admissible length.
    pub fn hv_reference(&self) -> FitnessTriple {
        let max_len = match self.length_objective {
            LengthObjective::Total => self.suite_size * self.max_seq_len,
            LengthObjective::Mean => self.max_seq_len,
        };
        FitnessTriple::new(0, 0.0, max_len as f64)
    }

    pub fn landscape_params(&self) -> LandscapeParams {
        LandscapeParams {
            connectedness_k: self.connectedness_k,
            max_distance: self.shape().max_distance(),
            hv_reference: self.hv_reference(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.variation().validate()?;
        self.shape().validate()?;
        if self.size_pop < 2 {
            return Err(Error::config(format!("size_pop must be at least 2, got {}", self.size_pop)));
        }
        if self.size_off == 0 {
            return Err(Error::config("size_off must be at least 1"));
        }
        if self.size_init < self.size_pop {
            return Err(Error::config(format!(
                "size_init ({}) must be at least size_pop ({})",
                self.size_init, self.size_pop
            )));
        }
        if !(0.0..=1.0).contains(&self.div_limit) {
            return Err(Error::config(format!("div_limit must lie in [0, 1], got {}", self.div_limit)));
        }
        if self.n_div > self.size_pop {
            return Err(Error::config(format!("n_div ({}) exceeds size_pop ({})", self.n_div, self.size_pop)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub suite: TestSuite,
    pub fitness: FitnessTriple,
}

/// A crash signature and how short its revealing cases have become.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashLogEntry {
    pub signature: u32,
    pub first_generation: u32,
    pub min_length: usize,
    /// `(generation, length)` each time the minimum revealing length dropped.
    pub history: Vec<(u32, usize)>,
}

impl CrashLogEntry {
    /// Shortest revealing length known by the end of `generation`.
    pub fn min_length_at(&self, generation: u32) -> Option<usize> {
        self.history.iter().filter(|(g, _)| *g <= generation).map(|&(_, l)| l).min()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Duration {
    /// Wall clock spent in the search itself.
    pub search_secs: f64,
    /// Wall clock spent computing landscape snapshots.
    pub analysis_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: SearchConfig,
    pub seed: u64,
    pub mode: Mode,
    pub snapshots: Vec<LandscapeSnapshot>,
    /// Population indices of each connectedness cluster, per generation.
    pub front_clusters: Vec<Vec<Vec<usize>>>,
    pub final_population: Vec<Individual>,
    pub archive: Vec<Individual>,
    pub crash_log: Vec<CrashLogEntry>,
    pub evaluations: u64,
    pub duration: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Threads used for fitness evaluation; 0 picks the rayon default.
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { workers: 1 }
    }
}

/// Elitist archive of every non-dominated fitness seen so far. Candidates
/// weakly dominated by a member (including equal fitness) are rejected.
#[derive(Debug, Clone, Default)]
pub struct ParetoArchive {
    members: Vec<Individual>,
}

impl ParetoArchive {
    pub fn offer(&mut self, candidate: &Individual) -> bool {
        if self.members.iter().any(|m| m.fitness.weakly_dominates(&candidate.fitness)) {
            return false;
        }
        self.members.retain(|m| !dominates(&candidate.fitness, &m.fitness));
        self.members.push(candidate.clone());
        true
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn fitnesses(&self) -> Vec<FitnessTriple> {
        self.members.iter().map(|m| m.fitness).collect()
    }
}

fn pairwise_max_pair(matrix: &DistanceMatrix) -> (usize, usize) {
    let mut best = (0, 1, 0u64);
    for (i, j, d) in matrix.pairs() {
        if d > best.2 {
            best = (i, j, d);
        }
    }
    (best.0, best.1)
}

/// Greedy farthest-point selection over a precomputed matrix.
pub fn select_most_distant_indices(matrix: &DistanceMatrix, k: usize) -> Vec<usize> {
    let n = matrix.len();
    let k = k.min(n);
    match k {
        0 => return Vec::new(),
        1 => return vec![0],
        _ => {}
    }
    let (a, b) = pairwise_max_pair(matrix);
    let mut selected = vec![a, b];
    let mut taken = vec![false; n];
    taken[a] = true;
    taken[b] = true;
    let mut nearest: Vec<u64> = (0..n).map(|i| matrix.get(i, a).min(matrix.get(i, b))).collect();
    while selected.len() < k {
        let mut pick = None;
        let mut best = 0u64;
        for i in (0..n).filter(|&i| !taken[i]) {
            if pick.is_none() || nearest[i] > best {
                pick = Some(i);
                best = nearest[i];
            }
        }
        let p = pick.expect("k <= n leaves an untaken candidate");
        taken[p] = true;
        selected.push(p);
        for i in 0..n {
            nearest[i] = nearest[i].min(matrix.get(i, p));
        }
    }
    selected
}

/// Picks `k` suites that are far apart from each other.
///
/// Starts from the most distant pair, then repeatedly adds the candidate
/// whose nearest selected suite is farthest away. Ties go to the lowest
/// index; `k == 1` yields the first candidate.
pub fn select_most_distant(candidates: &[TestSuite], k: usize) -> Result<Vec<TestSuite>> {
    if k == 0 || k > candidates.len() {
        return Err(Error::precondition(format!(
            "select_most_distant needs 1 <= k <= {}, got {k}",
            candidates.len()
        )));
    }
    let matrix = DistanceMatrix::compute(candidates)?;
    Ok(select_most_distant_indices(&matrix, k).into_iter().map(|i| candidates[i].clone()).collect())
}

/// Average population diameter, used as the population diversity measure.
pub fn calculate_diversity(population: &[TestSuite]) -> Result<f64> {
    if population.len() < 2 {
        return Err(Error::precondition(format!(
            "diversity needs at least 2 individuals, got {}",
            population.len()
        )));
    }
    landscape::avgdiam(population)
}

/// Indices of the first occurrence of each distinct suite, in order.
pub fn dedup_indices<'a, I>(pool: I) -> Vec<usize>
where
    I: IntoIterator<Item = &'a TestSuite>,
{
    // distance 0 is exactly structural equality, so hashing finds the classes
    let mut seen = HashSet::new();
    pool.into_iter().enumerate().filter(|(_, s)| seen.insert(*s)).map(|(i, _)| i).collect()
}

pub fn remove_duplicates(pool: &[TestSuite]) -> Vec<TestSuite> {
    dedup_indices(pool).into_iter().map(|i| pool[i].clone()).collect()
}

fn distinct_count(pool: &[Individual]) -> usize {
    dedup_indices(pool.iter().map(|i| &i.suite)).len()
}

struct Search<'a> {
    config: &'a SearchConfig,
    model: &'a AppModel,
    pool: Option<rayon::ThreadPool>,
    archive: ParetoArchive,
    crash_log: Vec<CrashLogEntry>,
    best_coverage: f64,
    evaluations: u64,
}

impl<'a> Search<'a> {
    fn evaluate(&mut self, suites: Vec<TestSuite>, generation: u32) -> Result<Vec<Individual>> {
        let objective = self.config.length_objective;
        let model = self.model;
        let work = || -> Result<Vec<_>> {
            suites
                .into_par_iter()
                .map(|s| evaluate_with(&s, model, objective).map(|r| (s, r)))
                .collect()
        };
        let results = match &self.pool {
            Some(pool) => pool.install(work)?,
            None => work()?,
        };

        // bookkeeping runs in index order so the archive is schedule-independent
        let mut out = Vec::with_capacity(results.len());
        for (suite, result) in results {
            self.evaluations += 1;
            for (case, crash) in suite.cases.iter().zip(&result.per_case_crash) {
                if let Some(c) = crash {
                    self.log_crash(c.signature, case.len(), generation);
                }
            }
            self.best_coverage = self.best_coverage.max(result.fitness.coverage);
            let ind = Individual { suite, fitness: result.fitness };
            self.archive.offer(&ind);
            out.push(ind);
        }
        Ok(out)
    }

    fn log_crash(&mut self, signature: u32, length: usize, generation: u32) {
        match self.crash_log.iter_mut().find(|e| e.signature == signature) {
            Some(entry) => {
                if length < entry.min_length {
                    entry.min_length = length;
                    entry.history.push((generation, length));
                }
            }
            None => self.crash_log.push(CrashLogEntry {
                signature,
                first_generation: generation,
                min_length: length,
                history: vec![(generation, length)],
            }),
        }
    }

    fn random_suites(&self, streams: &StreamSource, role: Role, count: usize) -> Result<Vec<TestSuite>> {
        let shape = self.config.shape();
        (0..count)
            .map(|i| random_suite(&mut streams.stream(role, i as u64), &shape, self.model.alphabet_size()))
            .collect()
    }
}

/// Outcome of one generation's environmental selection.
struct Selected {
    population: Vec<Individual>,
    shortfall: bool,
}

fn nsga2_select(pool: Vec<Individual>, size: usize) -> Result<Vec<Individual>> {
    let fitness: Vec<FitnessTriple> = pool.iter().map(|i| i.fitness).collect();
    let order = FrontAssignment::compute(&fitness)?.crowded_order();
    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    Ok(order.into_iter().take(size).map(|i| slots[i].take().expect("order is a permutation")).collect())
}

fn distance_select(pool: Vec<Individual>, size: usize) -> Result<Selected> {
    let shortfall = distinct_count(&pool) < size;
    let suites: Vec<TestSuite> = pool.iter().map(|i| i.suite.clone()).collect();
    let matrix = DistanceMatrix::compute(&suites)?;
    let picks = select_most_distant_indices(&matrix, size);
    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    let population = picks.into_iter().map(|i| slots[i].take().expect("picks are distinct")).collect();
    Ok(Selected { population, shortfall })
}

/// Duplicate elimination followed by hybrid selection: the crowded-order
/// best `size - n_div`, plus the `n_div` most distant of the remaining
/// distinct pool.
fn hybrid_select(pool: Vec<Individual>, size: usize, n_div: usize) -> Result<Selected> {
    let distinct = dedup_indices(pool.iter().map(|i| &i.suite));
    let shortfall = distinct.len() < size;
    let fitness: Vec<FitnessTriple> = distinct.iter().map(|&i| pool[i].fitness).collect();
    let order = FrontAssignment::compute(&fitness)?.crowded_order();

    let n_best = (size - n_div).min(distinct.len());
    let mut chosen: Vec<usize> = order[..n_best].iter().map(|&k| distinct[k]).collect();

    let rest: Vec<usize> = order[n_best..].iter().map(|&k| distinct[k]).collect();
    if n_div > 0 && !rest.is_empty() {
        // keep pool order inside the remainder so index tie-breaks are stable
        let mut rest = rest;
        rest.sort_unstable();
        let suites: Vec<TestSuite> = rest.iter().map(|&i| pool[i].suite.clone()).collect();
        let matrix = DistanceMatrix::compute(&suites)?;
        let picks = select_most_distant_indices(&matrix, n_div.min(rest.len()));
        chosen.extend(picks.into_iter().map(|k| rest[k]));
    }

    if chosen.len() < size {
        let all_fitness: Vec<FitnessTriple> = pool.iter().map(|i| i.fitness).collect();
        let taken: HashSet<usize> = chosen.iter().copied().collect();
        let fill: Vec<usize> = FrontAssignment::compute(&all_fitness)?
            .crowded_order()
            .into_iter()
            .filter(|i| !taken.contains(i))
            .take(size - chosen.len())
            .collect();
        chosen.extend(fill);
    }

    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    let population = chosen.into_iter().map(|i| slots[i].take().expect("chosen indices are distinct")).collect();
    Ok(Selected { population, shortfall })
}

pub fn run(config: &SearchConfig, model: &AppModel) -> Result<RunRecord> {
    run_with(config, model, &RunOptions::default(), |_| {})
}

/// Runs the search and calls `progress` with every generation's snapshot.
pub fn run_with<F>(config: &SearchConfig, model: &AppModel, options: &RunOptions, mut progress: F) -> Result<RunRecord>
where
    F: FnMut(&LandscapeSnapshot),
{
    config.validate()?;
    let pool = if options.workers == 1 {
        None
    } else {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(options.workers)
                .build()
                .map_err(|e| Error::config(format!("cannot start {} workers: {e}", options.workers)))?,
        )
    };
    let mut search = Search {
        config,
        model,
        pool,
        archive: ParetoArchive::default(),
        crash_log: Vec::new(),
        best_coverage: 0.0,
        evaluations: 0,
    };
    let params = config.landscape_params();
    let mut snapshots = Vec::with_capacity(config.g_max as usize + 1);
    let mut front_clusters = Vec::with_capacity(config.g_max as usize + 1);
    let mut analysis_secs = 0.0;
    let started = Instant::now();

    let init = StreamSource::new(config.seed, 0);
    let (initial, init_shortfall) = match config.mode {
        Mode::Baseline => (search.random_suites(&init, Role::Init, config.size_pop)?, false),
        Mode::Div => {
            let large = search.random_suites(&init, Role::Init, config.size_init)?;
            let shortfall = distinct_count_suites(&large) < config.size_pop;
            (select_most_distant(&large, config.size_pop)?, shortfall)
        }
    };
    let mut population = search.evaluate(initial, 0)?;
    let div_init = match config.mode {
        Mode::Div => Some(calculate_diversity(&suites_of(&population))?),
        Mode::Baseline => None,
    };

    let mut record_generation = |search: &Search, population: &[Individual], generation: u32, div_pop, restart, shortfall| -> Result<()> {
        let t = Instant::now();
        let suites = suites_of(population);
        let fitness: Vec<FitnessTriple> = population.iter().map(|i| i.fitness).collect();
        let (mut snap, clusters) = landscape::snapshot(generation, &suites, &fitness, &search.archive.fitnesses(), &params)?;
        snap.div_pop = div_pop;
        snap.adaptive_restart = restart;
        snap.dedup_shortfall = shortfall;
        snap.best_coverage = search.best_coverage;
        snap.unique_crashes = search.crash_log.len();
        progress(&snap);
        snapshots.push(snap);
        front_clusters.push(clusters);
        analysis_secs += t.elapsed().as_secs_f64();
        Ok(())
    };
    record_generation(&search, &population, 0, None, false, init_shortfall)?;

    for generation in 1..=config.g_max {
        let streams = StreamSource::new(config.seed, u64::from(generation));
        let (next, div_pop, restart, shortfall) = match (config.mode, div_init) {
            (Mode::Div, Some(div_init)) => {
                let div_pop = calculate_diversity(&suites_of(&population))?;
                if div_pop <= config.div_limit * div_init {
                    let fresh = search.random_suites(&streams, Role::Restart, config.size_off)?;
                    let offspring = search.evaluate(fresh, generation)?;
                    let size = population.len();
                    let mut pool = population;
                    pool.extend(offspring);
                    let sel = distance_select(pool, size)?;
                    (sel.population, Some(div_pop), true, sel.shortfall)
                } else {
                    let children = whole_test_suite_variation(
                        &suites_of(&population),
                        &config.variation(),
                        &config.shape(),
                        config.size_off,
                        &streams,
                    )?;
                    let offspring = search.evaluate(children, generation)?;
                    let mut pool = population;
                    pool.extend(offspring);
                    let sel = hybrid_select(pool, config.size_pop, config.n_div)?;
                    (sel.population, Some(div_pop), false, sel.shortfall)
                }
            }
            _ => {
                let children = whole_test_suite_variation(
                    &suites_of(&population),
                    &config.variation(),
                    &config.shape(),
                    config.size_off,
                    &streams,
                )?;
                let offspring = search.evaluate(children, generation)?;
                let mut pool = population;
                pool.extend(offspring);
                (nsga2_select(pool, config.size_pop)?, None, false, false)
            }
        };
        population = next;
        debug_assert_eq!(population.len(), config.size_pop);
        record_generation(&search, &population, generation, div_pop, restart, shortfall)?;
    }

    let total = started.elapsed().as_secs_f64();
    Ok(RunRecord {
        config: config.clone(),
        seed: config.seed,
        mode: config.mode,
        snapshots,
        front_clusters,
        final_population: population,
        archive: search.archive.members().to_vec(),
        crash_log: search.crash_log,
        evaluations: search.evaluations,
        duration: Duration { search_secs: (total - analysis_secs).max(0.0), analysis_secs },
    })
}

fn suites_of(population: &[Individual]) -> Vec<TestSuite> {
    population.iter().map(|i| i.suite.clone()).collect()
}

fn distinct_count_suites(suites: &[TestSuite]) -> usize {
    dedup_indices(suites).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appmodel::{generate_model, GeneratorParams};
    use crate::genotype::TestCase;

    fn matrix(rows: &[&[u64]]) -> DistanceMatrix {
        DistanceMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn small_config(mode: Mode) -> SearchConfig {
        SearchConfig {
            size_pop: 10,
            size_off: 10,
            size_init: 20,
            n_div: 3,
            suite_size: 3,
            min_seq_len: 5,
            max_seq_len: 40,
            g_max: 6,
            connectedness_k: 40,
            mode,
            seed: 5,
            ..SearchConfig::default()
        }
    }

    fn small_model() -> AppModel {
        generate_model(3, &GeneratorParams { n_states: 10, alphabet_size: 6, total_blocks: 40, n_crash_rules: 4, branching: 3 })
            .unwrap()
    }

    #[test]
    fn greedy_selection_hand_trace() {
        let m = matrix(&[&[0, 10, 2, 6], &[10, 0, 9, 5], &[2, 9, 0, 8], &[6, 5, 8, 0]]);
        assert_eq!(select_most_distant_indices(&m, 3), vec![0, 1, 3]);
        assert_eq!(select_most_distant_indices(&m, 1), vec![0]);
        let mut all = select_most_distant_indices(&m, 4);
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3]);
    }

    #[test]
    fn identical_candidates_select_first_k() {
        let s = TestSuite::from_ids(&[&[1, 2]]);
        let picked = select_most_distant(&vec![s.clone(); 5], 3).unwrap();
        assert_eq!(picked, vec![s; 3]);
        let m = matrix(&[&[0, 0, 0], &[0, 0, 0], &[0, 0, 0]]);
        assert_eq!(select_most_distant_indices(&m, 3), vec![0, 1, 2]);
    }

    #[test]
    fn select_most_distant_whole_list_and_bounds() {
        let c: Vec<TestSuite> = (0..4).map(|i| TestSuite::from_ids(&[&[i, i]])).collect();
        let mut picked = select_most_distant(&c, 4).unwrap();
        picked.sort_by(|a, b| a.cases[0].events.cmp(&b.cases[0].events));
        assert_eq!(picked, c);
        assert!(select_most_distant(&c, 0).is_err());
        assert!(select_most_distant(&c, 5).is_err());
    }

    #[test]
    fn diversity_examples() {
        let s = TestSuite::from_ids(&[&[1, 2, 3]]);
        assert_eq!(calculate_diversity(&[s.clone(), s.clone()]).unwrap(), 0.0);
        let far = TestSuite::new(vec![TestCase::from_ids(&[1; 13])]);
        assert_eq!(calculate_diversity(&[TestSuite::from_ids(&[&[1, 1, 1]]), far]).unwrap(), 10.0);
        // pairwise 4, 6, 8
        let a = TestSuite::from_ids(&[&[0; 10]]);
        let b = TestSuite::from_ids(&[&[1, 1, 1, 1, 0, 0, 0, 0, 0, 0]]);
        let c = TestSuite::from_ids(&[&[0, 0, 2, 2, 2, 2, 2, 2, 0, 0]]);
        assert_eq!(crate::genotype::distance(&a, &b).unwrap(), 4);
        assert_eq!(crate::genotype::distance(&a, &c).unwrap(), 6);
        assert_eq!(crate::genotype::distance(&b, &c).unwrap(), 8);
        assert_eq!(calculate_diversity(&[a.clone(), b, c]).unwrap(), 6.0);
        assert!(calculate_diversity(&[a]).is_err());
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let a = TestSuite::from_ids(&[&[1]]);
        let b = TestSuite::from_ids(&[&[2]]);
        let c = TestSuite::from_ids(&[&[3]]);
        assert_eq!(remove_duplicates(&[a.clone(), b.clone(), c.clone()]), vec![a.clone(), b.clone(), c.clone()]);
        assert_eq!(remove_duplicates(&vec![a.clone(); 4]), vec![a.clone()]);
        assert_eq!(remove_duplicates(&[a.clone(), b.clone(), a.clone(), c.clone()]), vec![a, b, c]);
    }

    #[test]
    fn archive_stays_non_dominated() {
        let mut archive = ParetoArchive::default();
        let ind = |c, cov, len| Individual { suite: TestSuite::default(), fitness: FitnessTriple::new(c, cov, len) };
        assert!(archive.offer(&ind(0, 0.2, 100.0)));
        assert!(!archive.offer(&ind(0, 0.2, 100.0)));
        assert!(archive.offer(&ind(1, 0.1, 100.0)));
        assert!(archive.offer(&ind(1, 0.3, 90.0)));
        assert_eq!(archive.members().len(), 1);
    }

    #[test]
    fn zero_generations_gives_one_snapshot() {
        let cfg = SearchConfig { g_max: 0, ..small_config(Mode::Div) };
        let rec = run(&cfg, &small_model()).unwrap();
        assert_eq!(rec.snapshots.len(), 1);
        assert_eq!(rec.snapshots[0].generation, 0);
    }

    #[test]
    fn both_modes_keep_population_size() {
        let model = small_model();
        for mode in [Mode::Baseline, Mode::Div] {
            let rec = run(&small_config(mode), &model).unwrap();
            assert_eq!(rec.snapshots.len(), 7);
            assert_eq!(rec.final_population.len(), 10);
            for s in &rec.snapshots {
                s.check_invariants().unwrap();
            }
            for (i, a) in rec.archive.iter().enumerate() {
                for b in &rec.archive[i + 1..] {
                    assert!(!dominates(&a.fitness, &b.fitness) && !dominates(&b.fitness, &a.fitness));
                }
            }
            assert_eq!(rec.snapshots.iter().any(|s| s.div_pop.is_some()), mode == Mode::Div);
        }
    }

    #[test]
    fn zero_div_limit_never_restarts() {
        let cfg = SearchConfig { div_limit: 0.0, g_max: 8, ..small_config(Mode::Div) };
        let rec = run(&cfg, &small_model()).unwrap();
        assert!(rec.snapshots.iter().all(|s| !s.adaptive_restart));
    }

    #[test]
    fn full_div_limit_always_restarts() {
        let cfg = SearchConfig { div_limit: 1.0, g_max: 4, ..small_config(Mode::Div) };
        let rec = run(&cfg, &small_model()).unwrap();
        // the first generation compares the initial population against itself
        assert!(rec.snapshots[1].adaptive_restart);
    }

    #[test]
    fn runs_are_deterministic() {
        let model = small_model();
        for mode in [Mode::Baseline, Mode::Div] {
            let a = run(&small_config(mode), &model).unwrap();
            let b = run_with(&small_config(mode), &model, &RunOptions { workers: 3 }, |_| {}).unwrap();
            assert_eq!(a.snapshots, b.snapshots);
            assert_eq!(a.archive, b.archive);
            assert_eq!(a.crash_log, b.crash_log);
            assert_eq!(a.final_population, b.final_population);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let model = small_model();
        for cfg in [
            SearchConfig { size_init: 5, ..small_config(Mode::Div) },
            SearchConfig { div_limit: 1.5, ..small_config(Mode::Div) },
            SearchConfig { n_div: 11, ..small_config(Mode::Div) },
            SearchConfig { size_pop: 1, size_init: 1, n_div: 0, ..small_config(Mode::Div) },
            SearchConfig { min_seq_len: 50, ..small_config(Mode::Baseline) },
        ] {
            assert!(matches!(run(&cfg, &model), Err(Error::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn crash_log_minima_track_history() {
        let entry = CrashLogEntry { signature: 1, first_generation: 2, min_length: 30, history: vec![(2, 80), (5, 30)] };
        assert_eq!(entry.min_length_at(1), None);
        assert_eq!(entry.min_length_at(3), Some(80));
        assert_eq!(entry.min_length_at(9), Some(30));
    }
}
