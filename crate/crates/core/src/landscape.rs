//! Per-generation fitness landscape metrics: evolvability (ppos, hv),
//! population diversity (diameters) and connectedness of the
//! Pareto-optimal solutions in genotype space.

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genotype::{DistanceMatrix, TestSuite};
use crate::moea::{hypervolume, FitnessTriple, FrontAssignment};

/// Proportion of Pareto-optimal solutions in the population.
pub fn ppos(assignment: &FrontAssignment) -> f64 {
    assignment.first_front().len() as f64 / assignment.rank.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diameters {
    pub max: u64,
    pub avg: f64,
    pub min: u64,
}

/// Max, mean and min pairwise distance. The mean runs over ordered pairs,
/// which for a symmetric metric equals the mean over unordered pairs.
pub fn diameters(matrix: &DistanceMatrix) -> Result<Diameters> {
    let n = matrix.len();
    if n < 2 {
        return Err(Error::precondition(format!("diameters need at least 2 individuals, got {n}")));
    }
    let (mut max, mut min, mut sum) = (0u64, u64::MAX, 0u128);
    for (_, _, d) in matrix.pairs() {
        max = max.max(d);
        min = min.min(d);
        sum += u128::from(d);
    }
    let avg = (2 * sum) as f64 / (n * (n - 1)) as f64;
    Ok(Diameters { max, avg, min })
}

/// Average population diameter of a set of suites.
pub fn avgdiam(population: &[TestSuite]) -> Result<f64> {
    Ok(diameters(&DistanceMatrix::compute(population)?)?.avg)
}

pub fn reldiam(avgdiam: f64, d_max: u64) -> Result<f64> {
    if d_max == 0 {
        return Err(Error::config("largest possible distance must be positive"));
    }
    Ok(avgdiam / d_max as f64)
}

/// Connected components of the graph with an edge wherever `distance < k`.
/// Components are sorted by size (descending), then by smallest member.
pub fn build_clusters(matrix: &DistanceMatrix, k: u64) -> Vec<Vec<usize>> {
    let n = matrix.len();
    let mut uf = UnionFind::<usize>::new(n);
    for (i, j, d) in matrix.pairs() {
        if d < k {
            uf.union(i, j);
        }
    }
    let labels = uf.into_labeling();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for (v, &root) in labels.iter().enumerate() {
        if slot[root] == usize::MAX {
            slot[root] = comps.len();
            comps.push(Vec::new());
        }
        comps[slot[root]].push(v);
    }
    // members are pushed in index order, so comps[..][0] is the smallest
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
}

/// Smallest threshold that makes the strict-edge graph connected: one more
/// than the bottleneck edge of a minimum spanning tree.
pub fn kconnec(matrix: &DistanceMatrix) -> u64 {
    let n = matrix.len();
    if n < 2 {
        return 1;
    }
    let mut edges: Vec<(u64, usize, usize)> = matrix.pairs().map(|(i, j, d)| (d, i, j)).collect();
    edges.sort_unstable();
    let mut uf = UnionFind::<usize>::new(n);
    let mut joined = 0;
    for (d, i, j) in edges {
        if uf.union(i, j) {
            joined += 1;
            if joined == n - 1 {
                return d + 1;
            }
        }
    }
    unreachable!("complete graph is always connected")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connectedness {
    pub pconnec: f64,
    /// Components with at least two members.
    pub nconnec: usize,
    pub nconnec_with_singletons: usize,
    pub kconnec: u64,
    pub lconnec: usize,
    pub hvconnec: f64,
    pub clusters: Vec<Vec<usize>>,
}

/// Connectedness metrics of a front given its distance matrix. `hv` maps a
/// set of front indices to their hypervolume.
pub fn connectedness_metrics<F>(matrix: &DistanceMatrix, k: u64, hv: F) -> Result<Connectedness>
where
    F: Fn(&[usize]) -> f64,
{
    let n = matrix.len();
    if n == 0 {
        return Err(Error::precondition("connectedness needs a non-empty front"));
    }
    let clusters = build_clusters(matrix, k);
    let clustered: usize = clusters.iter().filter(|c| c.len() >= 2).map(Vec::len).sum();
    let largest = &clusters[0];
    let all: Vec<usize> = (0..n).collect();
    let hv_all = hv(&all);
    let hvconnec = if hv_all > 0.0 { (hv(largest) / hv_all).min(1.0) } else { 1.0 };
    Ok(Connectedness {
        pconnec: clustered as f64 / n as f64,
        nconnec: clusters.iter().filter(|c| c.len() >= 2).count(),
        nconnec_with_singletons: clusters.len(),
        kconnec: kconnec(matrix),
        lconnec: largest.len(),
        hvconnec,
        clusters,
    })
}

/// Fixed inputs of the metric computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeParams {
    pub connectedness_k: u64,
    pub max_distance: u64,
    pub hv_reference: FitnessTriple,
}

/// One row of the per-generation metric time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSnapshot {
    pub generation: u32,
    pub ppos: f64,
    pub hv: f64,
    pub maxdiam: u64,
    pub avgdiam: f64,
    pub mindiam: u64,
    pub reldiam: f64,
    pub pconnec: f64,
    pub nconnec: usize,
    pub kconnec: u64,
    pub lconnec: usize,
    pub hvconnec: f64,
    pub nconnec_with_singletons: usize,
    pub front_size: usize,
    /// Diversity the adaptive control compared against its threshold in
    /// this generation (div mode only).
    pub div_pop: Option<f64>,
    pub adaptive_restart: bool,
    /// Selection had to re-admit duplicates because the deduplicated pool was too small.
    pub dedup_shortfall: bool,
    /// Best coverage over every suite evaluated so far.
    pub best_coverage: f64,
    /// Distinct crash signatures found so far.
    pub unique_crashes: usize,
}

/// The eleven landscape metrics, in export order.
pub const METRIC_COLUMNS: [&str; 11] =
    ["ppos", "hv", "maxdiam", "avgdiam", "mindiam", "reldiam", "pconnec", "nconnec", "kconnec", "lconnec", "hvconnec"];

impl LandscapeSnapshot {
    pub fn metric_values(&self) -> [f64; 11] {
        [
            self.ppos,
            self.hv,
            self.maxdiam as f64,
            self.avgdiam,
            self.mindiam as f64,
            self.reldiam,
            self.pconnec,
            self.nconnec as f64,
            self.kconnec as f64,
            self.lconnec as f64,
            self.hvconnec,
        ]
    }

    /// Checks the structural relations between the fields.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let frac = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(format!("{name} = {v} outside [0, 1]"))
            }
        };
        frac("ppos", self.ppos)?;
        frac("reldiam", self.reldiam)?;
        frac("pconnec", self.pconnec)?;
        frac("hvconnec", self.hvconnec)?;
        if !(self.mindiam as f64 <= self.avgdiam + 1e-9 && self.avgdiam <= self.maxdiam as f64 + 1e-9) {
            return Err(format!("diameters out of order: {} {} {}", self.mindiam, self.avgdiam, self.maxdiam));
        }
        if self.lconnec > self.front_size {
            return Err(format!("lconnec {} exceeds front size {}", self.lconnec, self.front_size));
        }
        if self.hv < 0.0 {
            return Err(format!("negative hv {}", self.hv));
        }
        Ok(())
    }
}

/// Metrics of one generation, not counting engine-owned fields
/// (`div_pop`, flags, cumulative coverage and crashes), which are left at defaults.
pub fn snapshot(
    generation: u32,
    population: &[TestSuite],
    fitness: &[FitnessTriple],
    archive: &[FitnessTriple],
    params: &LandscapeParams,
) -> Result<(LandscapeSnapshot, Vec<Vec<usize>>)> {
    if population.len() != fitness.len() {
        return Err(Error::precondition("population and fitness lengths differ"));
    }
    let matrix = DistanceMatrix::compute(population)?;
    let diam = diameters(&matrix)?;
    let assignment = FrontAssignment::compute(fitness)?;
    let front = assignment.first_front();
    let front_matrix = matrix.subset(front);
    let front_fitness: Vec<FitnessTriple> = front.iter().map(|&i| fitness[i]).collect();
    let conn = connectedness_metrics(&front_matrix, params.connectedness_k, |idx| {
        let pts: Vec<FitnessTriple> = idx.iter().map(|&i| front_fitness[i]).collect();
        hypervolume(&pts, &params.hv_reference)
    })?;
    let snap = LandscapeSnapshot {
        generation,
        ppos: ppos(&assignment),
        hv: hypervolume(archive, &params.hv_reference),
        maxdiam: diam.max,
        avgdiam: diam.avg,
        mindiam: diam.min,
        reldiam: reldiam(diam.avg, params.max_distance)?,
        pconnec: conn.pconnec,
        nconnec: conn.nconnec,
        kconnec: conn.kconnec,
        lconnec: conn.lconnec,
        hvconnec: conn.hvconnec,
        nconnec_with_singletons: conn.nconnec_with_singletons,
        front_size: front.len(),
        div_pop: None,
        adaptive_restart: false,
        dedup_shortfall: false,
        best_coverage: 0.0,
        unique_crashes: 0,
    };
    let clusters = conn.clusters.iter().map(|c| c.iter().map(|&i| front[i]).collect()).collect();
    Ok((snap, clusters))
}
