//! Test-suite genotype and the positional genotypic distance.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into an app model's event alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Event(pub u32);

/// An ordered sequence of events executed from a fresh app start.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TestCase {
    pub events: Vec<Event>,
}

/// The search individual: an ordered list of test cases.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TestSuite {
    pub cases: Vec<TestCase>,
}

impl TestCase {
    pub fn new(events: Vec<Event>) -> Self {
        TestCase { events }
    }

    pub fn from_ids(ids: &[u32]) -> Self {
        TestCase { events: ids.iter().copied().map(Event).collect() }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

impl TestSuite {
    pub fn new(cases: Vec<TestCase>) -> Self {
        TestSuite { cases }
    }

    pub fn from_ids(cases: &[&[u32]]) -> Self {
        TestSuite { cases: cases.iter().map(|c| TestCase::from_ids(c)).collect() }
    }

    pub fn size(&self) -> usize {
        self.cases.len()
    }

    /// Total number of events over all cases.
    pub fn total_len(&self) -> usize {
        self.cases.iter().map(TestCase::len).sum()
    }
}

/// Structural limits every suite in a run must respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteShape {
    pub suite_size: usize,
    pub min_seq_len: usize,
    pub max_seq_len: usize,
}

impl Default for SuiteShape {
    fn default() -> Self {
        SuiteShape { suite_size: 5, min_seq_len: 20, max_seq_len: 500 }
    }
}

impl SuiteShape {
    pub fn validate(&self) -> Result<()> {
        if self.suite_size == 0 {
            return Err(Error::config("suite_size must be at least 1"));
        }
        if self.min_seq_len == 0 {
            return Err(Error::config("min_seq_len must be at least 1"));
        }
        if self.min_seq_len > self.max_seq_len {
            return Err(Error::config(format!(
                "min_seq_len ({}) exceeds max_seq_len ({})",
                self.min_seq_len, self.max_seq_len
            )));
        }
        Ok(())
    }

    /// Largest possible distance between two conforming suites.
    pub fn max_distance(&self) -> u64 {
        (self.suite_size * self.max_seq_len) as u64
    }

    pub fn admits_len(&self, len: usize) -> bool {
        (self.min_seq_len..=self.max_seq_len).contains(&len)
    }

    pub fn conforms(&self, suite: &TestSuite) -> bool {
        suite.size() == self.suite_size && suite.cases.iter().all(|c| self.admits_len(c.len()))
    }
}

pub(crate) fn case_distance(a: &TestCase, b: &TestCase) -> u64 {
    let len_diff = a.len().abs_diff(b.len()) as u64;
    let mismatches = a.events.iter().zip(&b.events).filter(|(x, y)| x != y).count() as u64;
    len_diff + mismatches
}

/// Distance for suites already known to have the same size.
pub(crate) fn distance_unchecked(t1: &TestSuite, t2: &TestSuite) -> u64 {
    debug_assert_eq!(t1.size(), t2.size());
    t1.cases.iter().zip(&t2.cases).map(|(a, b)| case_distance(a, b)).sum()
}

/// Genotypic distance between two suites.
///
/// Cases are compared strictly by index: each pair contributes its length
/// difference plus the number of positions (within the shorter case) where
/// the events differ.
pub fn distance(t1: &TestSuite, t2: &TestSuite) -> Result<u64> {
    if t1.size() != t2.size() {
        return Err(Error::precondition(format!(
            "distance requires equal suite sizes, got {} and {}",
            t1.size(),
            t2.size()
        )));
    }
    Ok(distance_unchecked(t1, t2))
}

pub fn is_duplicate(t1: &TestSuite, t2: &TestSuite) -> Result<bool> {
    if t1.size() != t2.size() {
        return Err(Error::precondition(format!(
            "duplicate check requires equal suite sizes, got {} and {}",
            t1.size(),
            t2.size()
        )));
    }
    // distance 0 means equal lengths and equal events at every index
    Ok(t1 == t2)
}

fn ensure_uniform_size(suites: &[TestSuite]) -> Result<()> {
    if let Some(first) = suites.first() {
        if let Some(bad) = suites.iter().position(|s| s.size() != first.size()) {
            return Err(Error::precondition(format!(
                "suite {bad} has size {}, expected {}",
                suites[bad].size(),
                first.size()
            )));
        }
    }
    Ok(())
}

/// Symmetric matrix of pairwise suite distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<u64>,
}

impl DistanceMatrix {
    pub fn compute(suites: &[TestSuite]) -> Result<Self> {
        ensure_uniform_size(suites)?;
        let n = suites.len();
        let rows: Vec<Vec<u64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| if i == j { 0 } else { distance_unchecked(&suites[i], &suites[j]) }).collect())
            .collect();
        Ok(DistanceMatrix { n, data: rows.concat() })
    }

    /// Builds a matrix from explicit values; `values[i][j]` must equal `values[j][i]`.
    pub fn from_rows(values: &[Vec<u64>]) -> Result<Self> {
        let n = values.len();
        for (i, row) in values.iter().enumerate() {
            if row.len() != n {
                return Err(Error::precondition(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if row[i] != 0 {
                return Err(Error::precondition(format!("diagonal entry {i} is non-zero")));
            }
            for (j, &v) in row.iter().enumerate() {
                if values[j][i] != v {
                    return Err(Error::precondition(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DistanceMatrix { n, data: values.concat() })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.n + j]
    }

    /// Restriction of the matrix to the given indices, in order.
    pub fn subset(&self, idx: &[usize]) -> DistanceMatrix {
        let n = idx.len();
        let mut data = Vec::with_capacity(n * n);
        for &i in idx {
            for &j in idx {
                data.push(self.get(i, j));
            }
        }
        DistanceMatrix { n, data }
    }

    /// Iterates over `(i, j, d)` for all `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| (i, j, self.get(i, j))))
    }
}

/// Draws a random suite: case lengths and event ids are uniform over their ranges.
pub fn random_suite<R: Rng + ?Sized>(rng: &mut R, shape: &SuiteShape, alphabet_size: u32) -> Result<TestSuite> {
    shape.validate()?;
    if alphabet_size == 0 {
        return Err(Error::precondition("alphabet_size must be at least 1"));
    }
    let cases = (0..shape.suite_size)
        .map(|_| {
            let len = rng.gen_range(shape.min_seq_len..=shape.max_seq_len);
            TestCase::new((0..len).map(|_| Event(rng.gen_range(0..alphabet_size))).collect())
        })
        .collect();
    Ok(TestSuite { cases })
}
