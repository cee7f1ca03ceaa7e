//! NSGA-II building blocks over the (crashes, coverage, length) objective triple.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Objective vector of one suite. Crashes and coverage are maximized, length minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessTriple {
    pub crashes: u32,
    pub coverage: f64,
    pub length: f64,
}

impl FitnessTriple {
    pub fn new(crashes: u32, coverage: f64, length: f64) -> Self {
        FitnessTriple { crashes, coverage, length }
    }

    /// At least as good as `other` on every objective.
    pub fn weakly_dominates(&self, other: &FitnessTriple) -> bool {
        self.crashes >= other.crashes && self.coverage >= other.coverage && self.length <= other.length
    }
}

pub fn dominates(a: &FitnessTriple, b: &FitnessTriple) -> bool {
    a.weakly_dominates(b) && (a.crashes > b.crashes || a.coverage > b.coverage || a.length < b.length)
}

/// Partitions indices into successive non-dominated fronts (Deb's fast sort).
/// Indices within a front are ascending.
pub fn fast_non_dominated_sort(fitnesses: &[FitnessTriple]) -> Result<Vec<Vec<usize>>> {
    if fitnesses.is_empty() {
        return Err(Error::precondition("non-dominated sort needs at least one individual"));
    }
    let n = fitnesses.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&fitnesses[i], &fitnesses[j]) {
                dominated_by[i].push(j);
                domination_count[j] += 1;
            } else if dominates(&fitnesses[j], &fitnesses[i]) {
                dominated_by[j].push(i);
                domination_count[i] += 1;
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    Ok(fronts)
}

fn objective(f: &FitnessTriple, k: usize) -> f64 {
    match k {
        0 => f64::from(f.crashes),
        1 => f.coverage,
        _ => f.length,
    }
}

/// NSGA-II crowding distance of each member of `front`.
///
/// Objectives on which the whole front is constant contribute nothing, not
/// even boundary infinities. Fronts of one or two members are all boundary.
pub fn crowding_distance(front: &[FitnessTriple]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut dist = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..3 {
        order.sort_by(|&a, &b| objective(&front[a], k).total_cmp(&objective(&front[b], k)));
        let lo = objective(&front[order[0]], k);
        let hi = objective(&front[order[n - 1]], k);
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        for w in order.windows(3) {
            let gap = objective(&front[w[2]], k) - objective(&front[w[0]], k);
            dist[w[1]] += gap / span;
        }
    }
    dist
}

/// Rank and crowding distance of every individual in a population.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontAssignment {
    pub rank: Vec<usize>,
    pub crowding: Vec<f64>,
    pub fronts: Vec<Vec<usize>>,
}

impl FrontAssignment {
    pub fn compute(fitnesses: &[FitnessTriple]) -> Result<Self> {
        let fronts = fast_non_dominated_sort(fitnesses)?;
        let mut rank = vec![0; fitnesses.len()];
        let mut crowding = vec![0.0; fitnesses.len()];
        for (r, front) in fronts.iter().enumerate() {
            let members: Vec<FitnessTriple> = front.iter().map(|&i| fitnesses[i]).collect();
            for (&i, d) in front.iter().zip(crowding_distance(&members)) {
                rank[i] = r;
                crowding[i] = d;
            }
        }
        Ok(FrontAssignment { rank, crowding, fronts })
    }

    pub fn first_front(&self) -> &[usize] {
        &self.fronts[0]
    }

    /// All indices in crowded-comparison order.
    pub fn crowded_order(&self) -> Vec<usize> {
        crowded_sort(&self.rank, &self.crowding)
    }
}

/// Orders indices by ascending rank, then descending crowding, then index.
pub fn crowded_sort(rank: &[usize], crowding: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rank.len()).collect();
    idx.sort_by(|&a, &b| {
        rank[a]
            .cmp(&rank[b])
            .then_with(|| crowding[b].partial_cmp(&crowding[a]).unwrap_or(Ordering::Equal))
    });
    idx
}

/// Exact hypervolume of `front` with respect to `reference`.
///
/// Coordinates are shifted into an all-maximize space with the reference at
/// the origin: `(crashes - ref.crashes, coverage - ref.coverage, ref.length - length)`.
/// Points that do not strictly exceed the reference on every axis span no
/// volume and are skipped.
pub fn hypervolume(front: &[FitnessTriple], reference: &FitnessTriple) -> f64 {
    let mut points: Vec<[f64; 3]> = Vec::with_capacity(front.len());
    for f in front {
        let p = [
            f64::from(f.crashes) - f64::from(reference.crashes),
            f.coverage - reference.coverage,
            reference.length - f.length,
        ];
        if p.iter().any(|&c| c < 0.0) {
            log::warn!("hypervolume: point {f:?} is worse than the reference {reference:?}, dropped");
            continue;
        }
        if p.iter().all(|&c| c > 0.0) {
            points.push(p);
        }
    }
    if points.is_empty() {
        return 0.0;
    }
    points.sort_by(|a, b| b[2].total_cmp(&a[2]));

    // sweep z downwards; between two z levels the cross-section is the 2-D
    // union of every point at or above the upper level
    let mut volume = 0.0;
    let mut active: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    let mut i = 0;
    while i < points.len() {
        let z = points[i][2];
        while i < points.len() && points[i][2] == z {
            active.push([points[i][0], points[i][1]]);
            i += 1;
        }
        let next_z = points.get(i).map_or(0.0, |p| p[2]);
        volume += area_2d(&mut active) * (z - next_z);
    }
    volume
}

fn area_2d(points: &mut [[f64; 2]]) -> f64 {
    points.sort_by(|a, b| b[0].total_cmp(&a[0]));
    let mut area = 0.0;
    let mut max_y: f64 = 0.0;
    for k in 0..points.len() {
        max_y = max_y.max(points[k][1]);
        let next_x = points.get(k + 1).map_or(0.0, |p| p[0]);
        area += (points[k][0] - next_x) * max_y;
    }
    area
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ft(c: u32, cov: f64, len: f64) -> FitnessTriple {
        FitnessTriple::new(c, cov, len)
    }

    fn peel(fits: &[FitnessTriple]) -> Vec<Vec<usize>> {
        let mut remaining: Vec<usize> = (0..fits.len()).collect();
        let mut fronts = Vec::new();
        while !remaining.is_empty() {
            let front: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| !remaining.iter().any(|&j| dominates(&fits[j], &fits[i])))
                .collect();
            remaining.retain(|i| !front.contains(i));
            fronts.push(front);
        }
        fronts
    }

    fn triple() -> impl Strategy<Value = FitnessTriple> {
        (0u32..4, 0u32..5, 1u32..6).prop_map(|(c, cov, l)| ft(c, f64::from(cov) / 4.0, f64::from(l * 100)))
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&ft(2, 0.5, 300.0), &ft(1, 0.5, 300.0)));
        assert!(!dominates(&ft(2, 0.5, 300.0), &ft(2, 0.5, 300.0)));
        assert!(!dominates(&ft(2, 0.4, 300.0), &ft(1, 0.5, 300.0)));
        assert!(dominates(&ft(1, 0.5, 200.0), &ft(1, 0.5, 300.0)));
    }

    #[test]
    fn identical_points_share_one_front() {
        let fits = vec![ft(1, 0.5, 100.0); 5];
        assert_eq!(fast_non_dominated_sort(&fits).unwrap(), vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn chain_gives_singleton_fronts() {
        let fits = vec![ft(1, 0.1, 300.0), ft(3, 0.3, 100.0), ft(2, 0.2, 200.0)];
        assert_eq!(fast_non_dominated_sort(&fits).unwrap(), vec![vec![1], vec![2], vec![0]]);
    }

    #[test]
    fn empty_sort_is_error() {
        assert!(fast_non_dominated_sort(&[]).is_err());
    }

    #[test]
    fn crowding_small_fronts() {
        assert_eq!(crowding_distance(&[ft(1, 0.1, 10.0)]), vec![f64::INFINITY]);
        assert_eq!(crowding_distance(&[ft(1, 0.1, 10.0), ft(2, 0.0, 10.0)]), vec![f64::INFINITY; 2]);
    }

    #[test]
    fn crowding_collinear() {
        // handed in shuffled order so boundaries are not positional
        let front = [ft(1, 0.4, 100.0), ft(1, 0.1, 100.0), ft(1, 0.8, 100.0), ft(1, 0.2, 100.0)];
        let d = crowding_distance(&front);
        assert_eq!(d[1], f64::INFINITY);
        assert_eq!(d[2], f64::INFINITY);
        assert!((d[3] - (0.4 - 0.1) / 0.7).abs() < 1e-12);
        assert!((d[0] - (0.8 - 0.2) / 0.7).abs() < 1e-12);
    }

    #[test]
    fn crowded_sort_rules() {
        assert_eq!(crowded_sort(&[2, 0, 1], &[1.0, 1.0, 1.0]), vec![1, 2, 0]);
        assert_eq!(crowded_sort(&[0, 0], &[1.0, f64::INFINITY]), vec![1, 0]);
        assert_eq!(crowded_sort(&[0, 0, 0], &[0.5, 0.5, 0.5]), vec![0, 1, 2]);
    }

    #[test]
    fn hypervolume_hand_values() {
        let reference = ft(0, 0.0, 500.0);
        assert_eq!(hypervolume(&[], &reference), 0.0);
        assert!((hypervolume(&[ft(2, 0.5, 300.0)], &reference) - 200.0).abs() < 1e-12);
        // two boxes 2x0.5x200 and 1x0.8x400 overlapping in 1x0.5x200
        let two = [ft(2, 0.5, 300.0), ft(1, 0.8, 100.0)];
        let expected = 200.0 + 1.0 * 0.8 * 400.0 - 1.0 * 0.5 * 200.0;
        assert!((hypervolume(&two, &reference) - expected).abs() < 1e-12);
    }

    #[test]
    fn hypervolume_drops_points_beyond_reference() {
        let reference = ft(0, 0.0, 500.0);
        assert_eq!(hypervolume(&[ft(3, 0.9, 600.0)], &reference), 0.0);
        assert_eq!(hypervolume(&[ft(0, 0.9, 100.0)], &reference), 0.0);
    }

    proptest! {
        #[test]
        fn sort_matches_peeling(fits in prop::collection::vec(triple(), 1..40)) {
            prop_assert_eq!(fast_non_dominated_sort(&fits).unwrap(), peel(&fits));
        }

        #[test]
        fn dominance_irreflexive_and_asymmetric(a in triple(), b in triple()) {
            prop_assert!(!dominates(&a, &a));
            prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
        }

        #[test]
        fn hypervolume_permutation_invariant(mut fits in prop::collection::vec(triple(), 1..10), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let reference = ft(0, 0.0, 600.0);
            let before = hypervolume(&fits, &reference);
            fits.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert!((hypervolume(&fits, &reference) - before).abs() <= 1e-9 * before.max(1.0));
        }

        #[test]
        fn hypervolume_monotone_under_insertion(fits in prop::collection::vec(triple(), 1..10), extra in triple()) {
            let reference = ft(0, 0.0, 600.0);
            let before = hypervolume(&fits, &reference);
            let mut more = fits.clone();
            more.push(extra);
            let after = hypervolume(&more, &reference);
            prop_assert!(after >= before - 1e-9);
            if fits.iter().any(|f| f.weakly_dominates(&extra)) {
                prop_assert!((after - before).abs() <= 1e-9 * before.max(1.0));
            }
        }
    }
}
