//! Whole-test-suite crossover and mutation.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genotype::{SuiteShape, TestCase, TestSuite};
use crate::rng::{Role, StreamSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationConfig {
    /// Probability that a parent pair is crossed.
    pub crossover_prob: f64,
    /// Probability that an offspring is mutated at all.
    pub mutation_prob: f64,
    /// Probability of each inner mutation step (pairwise case crossover, event shuffle).
    pub inner_prob: f64,
}

impl Default for VariationConfig {
    fn default() -> Self {
        VariationConfig { crossover_prob: 0.7, mutation_prob: 0.3, inner_prob: 0.3 }
    }
}

impl VariationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
            ("inner_prob", self.inner_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

fn check_sizes(t1: &TestSuite, t2: &TestSuite) -> Result<()> {
    if t1.size() != t2.size() {
        return Err(Error::precondition(format!(
            "crossover requires equal suite sizes, got {} and {}",
            t1.size(),
            t2.size()
        )));
    }
    Ok(())
}

/// Crossover with an explicit swap decision per case index.
pub fn crossover_with_mask(t1: &TestSuite, t2: &TestSuite, swap: &[bool]) -> Result<(TestSuite, TestSuite)> {
    check_sizes(t1, t2)?;
    if swap.len() != t1.size() {
        return Err(Error::precondition(format!("swap mask has {} entries, expected {}", swap.len(), t1.size())));
    }
    let (mut c1, mut c2) = (t1.clone(), t2.clone());
    for (i, _) in swap.iter().enumerate().filter(|(_, &s)| s) {
        std::mem::swap(&mut c1.cases[i], &mut c2.cases[i]);
    }
    Ok((c1, c2))
}

/// Uniform set-element crossover: each case index is swapped between the
/// children with probability 0.5.
pub fn uniform_suite_crossover<R: Rng + ?Sized>(
    t1: &TestSuite,
    t2: &TestSuite,
    rng: &mut R,
) -> Result<(TestSuite, TestSuite)> {
    check_sizes(t1, t2)?;
    let mask: Vec<bool> = (0..t1.size()).map(|_| rng.gen_bool(0.5)).collect();
    crossover_with_mask(t1, t2, &mask)
}

/// Exchanges the tails of two cases after `cut`. Returns `false` and leaves
/// both untouched when the cut is invalid or a result would leave `shape`.
pub fn single_point_crossover(a: &mut TestCase, b: &mut TestCase, cut: usize, shape: &SuiteShape) -> bool {
    if cut == 0 || cut >= a.len().min(b.len()) {
        return false;
    }
    let new_a_len = cut + (b.len() - cut);
    let new_b_len = cut + (a.len() - cut);
    if !shape.admits_len(new_a_len) || !shape.admits_len(new_b_len) {
        return false;
    }
    let tail_a = a.events.split_off(cut);
    let tail_b = b.events.split_off(cut);
    a.events.extend(tail_b);
    b.events.extend(tail_a);
    true
}

/// Mutation: shuffle the case order, then with probability `q` cross each
/// adjacent case pair at a single point, then with probability `q` shuffle
/// the events of each case.
pub fn suite_mutation<R: Rng + ?Sized>(t: &TestSuite, q: f64, shape: &SuiteShape, rng: &mut R) -> TestSuite {
    let mut out = t.clone();
    out.cases.shuffle(rng);

    for i in 0..out.cases.len().saturating_sub(1) {
        if !rng.gen_bool(q) {
            continue;
        }
        let shortest = out.cases[i].len().min(out.cases[i + 1].len());
        if shortest < 2 {
            continue;
        }
        let cut = rng.gen_range(1..shortest);
        let (left, right) = out.cases.split_at_mut(i + 1);
        single_point_crossover(&mut left[i], &mut right[0], cut, shape);
    }

    for case in &mut out.cases {
        if rng.gen_bool(q) {
            case.events.shuffle(rng);
        }
    }
    out
}

/// Produces `size_off` offspring from `population`.
///
/// Parents are paired sequentially over a shuffled copy of the population
/// (wrapping around when more pairs are needed). Pair `k` draws all of its
/// randomness from its own stream, so the result does not depend on how
/// pairs are scheduled.
pub fn whole_test_suite_variation(
    population: &[TestSuite],
    cfg: &VariationConfig,
    shape: &SuiteShape,
    size_off: usize,
    streams: &StreamSource,
) -> Result<Vec<TestSuite>> {
    if population.len() < 2 {
        return Err(Error::precondition(format!(
            "variation needs at least 2 parents, got {}",
            population.len()
        )));
    }
    cfg.validate()?;
    let n = population.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut streams.stream(Role::Pairing, 0));

    let mut offspring = Vec::with_capacity(size_off);
    for k in 0..size_off.div_ceil(2) {
        let mut rng = streams.stream(Role::Variation, k as u64);
        let p1 = &population[order[(2 * k) % n]];
        let p2 = &population[order[(2 * k + 1) % n]];
        let (c1, c2) = if rng.gen_bool(cfg.crossover_prob) {
            uniform_suite_crossover(p1, p2, &mut rng)?
        } else {
            (p1.clone(), p2.clone())
        };
        for child in [c1, c2] {
            if offspring.len() == size_off {
                break;
            }
            let child = if rng.gen_bool(cfg.mutation_prob) {
                suite_mutation(&child, cfg.inner_prob, shape, &mut rng)
            } else {
                child
            };
            offspring.push(child);
        }
    }
    Ok(offspring)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genotype::random_suite;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sorted_cases(suites: &[&TestSuite]) -> Vec<TestCase> {
        let mut all: Vec<TestCase> = suites.iter().flat_map(|s| s.cases.iter().cloned()).collect();
        all.sort_by(|a, b| a.events.cmp(&b.events));
        all
    }

    fn small_shape() -> SuiteShape {
        SuiteShape { suite_size: 4, min_seq_len: 2, max_seq_len: 12 }
    }

    #[test]
    fn mask_all_false_keeps_parents() {
        let a = TestSuite::from_ids(&[&[1], &[2]]);
        let b = TestSuite::from_ids(&[&[3], &[4]]);
        let (c1, c2) = crossover_with_mask(&a, &b, &[false, false]).unwrap();
        assert_eq!((c1, c2), (a, b));
    }

    #[test]
    fn mask_all_true_exchanges_parents() {
        let a = TestSuite::from_ids(&[&[1], &[2]]);
        let b = TestSuite::from_ids(&[&[3], &[4]]);
        let (c1, c2) = crossover_with_mask(&a, &b, &[true, true]).unwrap();
        assert_eq!((c1, c2), (b, a));
    }

    #[test]
    fn swap_at_first_index_only() {
        let a = TestSuite::from_ids(&[&[10], &[11]]); // <A, B>
        let b = TestSuite::from_ids(&[&[12], &[13]]); // <C, D>
        let (c1, c2) = crossover_with_mask(&a, &b, &[true, false]).unwrap();
        assert_eq!(c1, TestSuite::from_ids(&[&[12], &[11]]));
        assert_eq!(c2, TestSuite::from_ids(&[&[10], &[13]]));
    }

    #[test]
    fn crossover_rejects_mismatched_sizes() {
        let a = TestSuite::from_ids(&[&[1]]);
        let b = TestSuite::from_ids(&[&[1], &[2]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(uniform_suite_crossover(&a, &b, &mut rng), Err(Error::Precondition(_))));
    }

    #[test]
    fn single_point_crossover_with_fixed_cut() {
        let mut a = TestCase::from_ids(&[1, 2, 3, 4]);
        let mut b = TestCase::from_ids(&[5, 6, 7, 8]);
        assert!(single_point_crossover(&mut a, &mut b, 2, &SuiteShape { suite_size: 2, min_seq_len: 1, max_seq_len: 10 }));
        assert_eq!(a, TestCase::from_ids(&[1, 2, 7, 8]));
        assert_eq!(b, TestCase::from_ids(&[5, 6, 3, 4]));
    }

    #[test]
    fn single_point_crossover_rejects_out_of_bounds() {
        let shape = SuiteShape { suite_size: 2, min_seq_len: 4, max_seq_len: 4 };
        let mut a = TestCase::from_ids(&[1, 2, 3, 4]);
        let mut b = TestCase::from_ids(&[5, 6, 7, 8, 9]);
        assert!(!single_point_crossover(&mut a, &mut b, 2, &shape));
        assert_eq!(a, TestCase::from_ids(&[1, 2, 3, 4]));
        assert!(!single_point_crossover(&mut a, &mut b, 0, &shape));
    }

    #[test]
    fn mutation_without_inner_steps_permutes_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let shape = small_shape();
        let t = random_suite(&mut rng, &shape, 6).unwrap();
        for _ in 0..20 {
            let m = suite_mutation(&t, 0.0, &shape, &mut rng);
            assert_eq!(sorted_cases(&[&m]), sorted_cases(&[&t]));
        }
    }

    #[test]
    fn mutation_identity_shuffle_is_noop() {
        // single case: the order shuffle is necessarily the identity
        let t = TestSuite::from_ids(&[&[4, 1, 3]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(suite_mutation(&t, 0.0, &small_shape(), &mut rng), t);
    }

    #[test]
    fn variation_without_operators_copies_parents() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shape = small_shape();
        let pop: Vec<_> = (0..6).map(|_| random_suite(&mut rng, &shape, 5).unwrap()).collect();
        let cfg = VariationConfig { crossover_prob: 0.0, mutation_prob: 0.0, inner_prob: 0.3 };
        let off = whole_test_suite_variation(&pop, &cfg, &shape, 6, &StreamSource::new(1, 1)).unwrap();
        let mut a = off.clone();
        let mut b = pop.clone();
        a.sort_by(|x, y| x.cases.iter().map(|c| &c.events).cmp(y.cases.iter().map(|c| &c.events)));
        b.sort_by(|x, y| x.cases.iter().map(|c| &c.events).cmp(y.cases.iter().map(|c| &c.events)));
        assert_eq!(a, b);
    }

    #[test]
    fn default_offspring_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shape = SuiteShape::default();
        let pop: Vec<_> = (0..50).map(|_| random_suite(&mut rng, &shape, 5).unwrap()).collect();
        let streams = StreamSource::new(9, 3);
        let off = whole_test_suite_variation(&pop, &VariationConfig::default(), &shape, 50, &streams).unwrap();
        assert_eq!(off.len(), 50);
        assert!(off.iter().all(|s| shape.conforms(s)));
        let again = whole_test_suite_variation(&pop, &VariationConfig::default(), &shape, 50, &streams).unwrap();
        assert_eq!(off, again);
    }

    #[test]
    fn odd_offspring_count_and_empty_population() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shape = small_shape();
        let pop: Vec<_> = (0..3).map(|_| random_suite(&mut rng, &shape, 5).unwrap()).collect();
        let off = whole_test_suite_variation(&pop, &VariationConfig::default(), &shape, 7, &StreamSource::new(0, 0)).unwrap();
        assert_eq!(off.len(), 7);
        assert!(whole_test_suite_variation(&[], &VariationConfig::default(), &shape, 2, &StreamSource::new(0, 0)).is_err());
    }

    #[test]
    fn invalid_probabilities_rejected() {
        let cfg = VariationConfig { crossover_prob: 1.5, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    proptest! {
        #[test]
        fn crossover_preserves_case_multiset(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shape = small_shape();
            let a = random_suite(&mut rng, &shape, 4).unwrap();
            let b = random_suite(&mut rng, &shape, 4).unwrap();
            let (c1, c2) = uniform_suite_crossover(&a, &b, &mut rng).unwrap();
            prop_assert_eq!(sorted_cases(&[&c1, &c2]), sorted_cases(&[&a, &b]));
        }

        #[test]
        fn mutation_preserves_event_multiset_and_shape(seed in any::<u64>(), q in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shape = small_shape();
            let t = random_suite(&mut rng, &shape, 4).unwrap();
            let m = suite_mutation(&t, q, &shape, &mut rng);
            prop_assert!(shape.conforms(&m));
            let mut before: Vec<_> = t.cases.iter().flat_map(|c| c.events.clone()).collect();
            let mut after: Vec<_> = m.cases.iter().flat_map(|c| c.events.clone()).collect();
            before.sort();
            after.sort();
            prop_assert_eq!(before, after);
            prop_assert_eq!(m.total_len(), t.total_len());
        }
    }
}
