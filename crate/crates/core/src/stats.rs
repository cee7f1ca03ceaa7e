//! Two-sample comparison: Mann-Whitney U, Vargha-Delaney A12 and the
//! budget-adjustment arithmetic used when comparing runs.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::engine::RunRecord;
use crate::error::{Error, Result};

/// Values of one concern over repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub label: String,
    pub values: Vec<f64>,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        SampleSet { label: label.into(), values }
    }

    fn ensure_non_empty(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::precondition(format!("sample `{}` is empty", self.label)));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn median(&self) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    }

    /// Sample standard deviation; undefined for a single value.
    pub fn sd(&self) -> Option<f64> {
        let n = self.values.len();
        if n < 2 {
            return None;
        }
        let m = self.mean();
        let ss: f64 = self.values.iter().map(|x| (x - m).powi(2)).sum();
        Some((ss / (n - 1) as f64).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub p_two_sided: f64,
}

/// Mann-Whitney U test, two-sided, normal approximation with tie and
/// continuity corrections.
pub fn mann_whitney_u(a: &SampleSet, b: &SampleSet) -> Result<MannWhitney> {
    a.ensure_non_empty()?;
    b.ensure_non_empty()?;
    let (n1, n2) = (a.values.len(), b.values.len());
    let n = n1 + n2;

    let mut pooled: Vec<(f64, bool)> =
        a.values.iter().map(|&v| (v, true)).chain(b.values.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        // midrank of 1-based ranks i+1 ..= j+1
        let midrank = (i + j + 2) as f64 / 2.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_sum_a += midrank * pooled[i..=j].iter().filter(|p| p.1).count() as f64;
        i = j + 1;
    }

    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let u = rank_sum_a - n1f * (n1f + 1.0) / 2.0;
    let mean = n1f * n2f / 2.0;
    let variance = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    let p = if variance <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / variance.sqrt();
        let normal = Normal::standard();
        (2.0 * (1.0 - normal.cdf(z))).min(1.0)
    };
    Ok(MannWhitney { u, p_two_sided: p })
}

/// Probability that a value drawn from `a` beats one drawn from `b`, ties counting half.
pub fn vargha_delaney_a12(a: &SampleSet, b: &SampleSet, larger_is_better: bool) -> Result<f64> {
    a.ensure_non_empty()?;
    b.ensure_non_empty()?;
    let mut score = 0.0;
    for &x in &a.values {
        for &y in &b.values {
            let wins = if larger_is_better { x > y } else { x < y };
            if wins {
                score += 1.0;
            } else if x == y {
                score += 0.5;
            }
        }
    }
    Ok(score / (a.values.len() * b.values.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectClass {
    Negligible,
    Small,
    Medium,
    Large,
}

impl EffectClass {
    pub fn from_a12(a12: f64) -> Self {
        let magnitude = a12.max(1.0 - a12);
        if magnitude > 0.71 {
            EffectClass::Large
        } else if magnitude > 0.64 {
            EffectClass::Medium
        } else if magnitude > 0.56 {
            EffectClass::Small
        } else {
            EffectClass::Negligible
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EffectClass::Negligible => "negligible",
            EffectClass::Small => "small",
            EffectClass::Medium => "medium",
            EffectClass::Large => "large",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Better,
    Worse,
    Equal,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Better => "better",
            Direction::Worse => "worse",
            Direction::Equal => "equal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub sd: Option<f64>,
}

impl Summary {
    pub fn of(s: &SampleSet) -> Self {
        Summary { mean: s.mean(), median: s.median(), sd: s.sd() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub a: Summary,
    pub b: Summary,
    pub u: f64,
    pub p_value: f64,
    pub a12: f64,
    pub effect_class: EffectClass,
    pub significant: bool,
    /// Whether `a` is better than `b` under the concern's orientation.
    pub direction: Direction,
}

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

pub fn compare(a: &SampleSet, b: &SampleSet, larger_is_better: bool) -> Result<ComparisonRow> {
    let mw = mann_whitney_u(a, b)?;
    let a12 = vargha_delaney_a12(a, b, larger_is_better)?;
    let direction = if a12 > 0.5 {
        Direction::Better
    } else if a12 < 0.5 {
        Direction::Worse
    } else {
        Direction::Equal
    };
    Ok(ComparisonRow {
        a: Summary::of(a),
        b: Summary::of(b),
        u: mw.u,
        p_value: mw.p_two_sided,
        a12,
        effect_class: EffectClass::from_a12(a12),
        significant: mw.p_two_sided < SIGNIFICANCE_LEVEL,
        direction,
    })
}

/// Relative runtime overhead of the second median over the first, in percent.
pub fn overhead_percent(median_base: f64, median_div: f64) -> Result<f64> {
    if !(median_base > 0.0) {
        return Err(Error::Domain(format!("baseline median must be positive, got {median_base}")));
    }
    Ok(100.0 * (median_div - median_base) / median_base)
}

/// Generation budget that gives the slower approach the same wall clock.
/// Rounds half up; negative overhead keeps the full budget.
pub fn adjusted_generations(g_max: u32, overhead_percent: f64) -> u32 {
    if overhead_percent >= 100.0 {
        log::warn!("overhead of {overhead_percent:.2}% leaves no generations");
        return 0;
    }
    let overhead = overhead_percent.max(0.0);
    let scaled = f64::from(g_max) * (1.0 - overhead / 100.0);
    ((scaled + 0.5).floor() as u32).min(g_max)
}

/// Mean over crash signatures of the shortest case that revealed each one
/// by the end of `generation`.
pub fn min_crash_sequence_length_at(record: &RunRecord, generation: u32) -> Option<f64> {
    let minima: Vec<usize> = record.crash_log.iter().filter_map(|e| e.min_length_at(generation)).collect();
    if minima.is_empty() {
        return None;
    }
    Some(minima.iter().sum::<usize>() as f64 / minima.len() as f64)
}

pub fn min_crash_sequence_length(record: &RunRecord) -> Option<f64> {
    if record.crash_log.is_empty() {
        return None;
    }
    let total: usize = record.crash_log.iter().map(|e| e.min_length).sum();
    Some(total as f64 / record.crash_log.len() as f64)
}
