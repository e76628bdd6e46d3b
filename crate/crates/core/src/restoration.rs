//! Stage two: Laplace-protected genotype counts per SNP, and optimal-transport
//! alignment of the perturbed columns to those noisy counts.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Genotype, SnpMatrix};
use crate::error::{Error, Result};
use crate::seed::{self, Domain};

/// L1 sensitivity of one genotype-count query: changing one individual moves
/// one unit out of one bin and into another.
pub const COUNT_SENSITIVITY: f64 = 2.0;

const MARGINAL_TOL: f64 = 1e-9;

/// Counts of genotypes 0, 1 and 2 at one SNP.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CountVector(pub [f64; 3]);

impl CountVector {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn of_column(col: &[Genotype]) -> Self {
        let mut c = [0.0; 3];
        for &g in col {
            c[g as usize] += 1.0;
        }
        CountVector(c)
    }
}

/// Exact genotype counts at column `j`.
pub fn count_query(d: &SnpMatrix, j: usize) -> Result<CountVector> {
    if j >= d.cols() {
        return Err(Error::Index { index: j, len: d.cols() });
    }
    Ok(CountVector::of_column(d.column(j)))
}

/// One draw from Laplace(0, `scale`) by inverse CDF.
pub fn laplace(scale: f64, rng: &mut impl Rng) -> f64 {
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        if u > -0.5 {
            return -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
        }
    }
}

/// Laplace scale for the count query at budget `eps_c`.
pub fn count_noise_scale(eps_c: f64) -> f64 {
    COUNT_SENSITIVITY / eps_c
}

/// Raw, pre-clamp and clamped counts for one SNP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyCount {
    pub raw: CountVector,
    pub unclamped: [f64; 3],
    pub clamped: CountVector,
}

/// Noisy counts with the pre-clamp values kept for auditing.
pub fn noisy_counts_detailed(d: &SnpMatrix, eps_c: f64, seed: u64) -> Result<Vec<NoisyCount>> {
    if !(eps_c > 0.0) {
        return Err(Error::Parameter(format!("eps_c must be positive, got {eps_c}")));
    }
    let scale = count_noise_scale(eps_c);
    Ok((0..d.cols())
        .into_par_iter()
        .map(|j| {
            let raw = CountVector::of_column(d.column(j));
            let mut rng = seed::stream(seed, Domain::Laplace, j as u64);
            let unclamped = raw.0.map(|c| c + laplace(scale, &mut rng));
            NoisyCount { raw, unclamped, clamped: CountVector(unclamped.map(|c| c.max(0.0))) }
        })
        .collect())
}

/// Per-SNP counts plus independent Laplace(`2 / eps_c`) noise, negatives set to 0.
pub fn noisy_counts(d: &SnpMatrix, eps_c: f64, seed: u64) -> Result<Vec<CountVector>> {
    Ok(noisy_counts_detailed(d, eps_c, seed)?.into_iter().map(|c| c.clamped).collect())
}

/// Divides by the total; an all-zero vector becomes uniform.
pub fn normalize(c: &CountVector) -> [f64; 3] {
    let total = c.total();
    if total > 0.0 {
        c.0.map(|x| x / total)
    } else {
        [1.0 / 3.0; 3]
    }
}

/// Joint mass moving genotype `p` (row) to genotype `q` (column).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub t: [[f64; 3]; 3],
    pub source: [f64; 3],
    pub target: [f64; 3],
}

impl TransportPlan {
    /// `sum_pq T_pq |p - q|`.
    pub fn cost(&self) -> f64 {
        plan_cost(&self.t)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..3).all(|p| (0..3).all(|q| p == q || self.t[p][q] == 0.0))
    }
}

pub fn plan_cost(t: &[[f64; 3]; 3]) -> f64 {
    let mut cost = 0.0;
    for (p, row) in t.iter().enumerate() {
        for (q, &mass) in row.iter().enumerate() {
            cost += mass * p.abs_diff(q) as f64;
        }
    }
    cost
}

fn check_distribution(name: &str, v: &[f64; 3]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Distribution(format!("{name} {v:?} has a negative or non-finite entry")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > MARGINAL_TOL {
        return Err(Error::Distribution(format!("{name} {v:?} sums to {total}, not 1")));
    }
    Ok(())
}

/// Optimal plan for cost `|p - q|` on the ordered support `{0, 1, 2}`.
///
/// The monotone (north-west corner) coupling is optimal for a convex cost of
/// `p - q` in one dimension; its cost equals the L1 distance between the two
/// CDFs.
pub fn ot_plan(source: [f64; 3], target: [f64; 3]) -> Result<TransportPlan> {
    check_distribution("source", &source)?;
    check_distribution("target", &target)?;
    let mut t = [[0.0; 3]; 3];
    let (mut a, mut b) = (source, target);
    let (mut p, mut q) = (0, 0);
    while p < 3 && q < 3 {
        let mass = a[p].min(b[q]);
        t[p][q] += mass;
        a[p] -= mass;
        b[q] -= mass;
        if a[p] <= b[q] {
            p += 1;
        } else {
            q += 1;
        }
    }
    Ok(TransportPlan { t, source, target })
}

/// Cells off the diagonal, in the order mass is moved.
const TRANSFER_ORDER: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

/// Guard so that e.g. `0.5 * 10` computed as `4.999...` still floors to 5.
const FLOOR_SLACK: f64 = 1e-9;

/// Moves `floor(T_pq * n)` entries of value `p` to `q` in one column.
///
/// Candidates for each source value are the rows holding it before any move,
/// in a seeded random order; a cell moves at most what is left of its pool.
/// Returns the number of entries moved per cell.
pub fn apply_plan_column(col: &mut [Genotype], plan: &TransportPlan, rng: &mut impl Rng) -> [[usize; 3]; 3] {
    let n = col.len() as f64;
    let mut pools: [Vec<usize>; 3] = Default::default();
    for (i, &g) in col.iter().enumerate() {
        pools[g as usize].push(i);
    }
    for pool in pools.iter_mut() {
        pool.shuffle(rng);
    }
    let mut moved = [[0usize; 3]; 3];
    for (p, q) in TRANSFER_ORDER {
        let want = (plan.t[p][q] * n + FLOOR_SLACK).floor().max(0.0) as usize;
        let take = want.min(pools[p].len());
        let keep = pools[p].len() - take;
        for i in pools[p].drain(keep..) {
            col[i] = q as Genotype;
        }
        moved[p][q] = take;
    }
    moved
}

/// Applies `plan` to column `j` of `d`, shuffling with the column's stream of `seed`.
pub fn apply_plan(d: &mut SnpMatrix, j: usize, plan: &TransportPlan, seed: u64) -> Result<[[usize; 3]; 3]> {
    if j >= d.cols() {
        return Err(Error::Index { index: j, len: d.cols() });
    }
    let mut rng = seed::stream(seed, Domain::Shuffle, j as u64);
    Ok(apply_plan_column(d.column_mut(j), plan, &mut rng))
}

/// Per-SNP record of one restoration step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDiagnostics {
    pub snp: String,
    pub raw_counts: CountVector,
    pub noisy_counts: CountVector,
    pub perturbed_counts: CountVector,
    pub plan: [[f64; 3]; 3],
    pub achieved_counts: CountVector,
}

/// Aligns every column of `d_tilde` with the noisy counts of `d_original`.
pub fn restore(d_tilde: &SnpMatrix, d_original: &SnpMatrix, eps_c: f64, seed: u64) -> Result<SnpMatrix> {
    restore_detailed(d_tilde, d_original, eps_c, seed).map(|(d, _)| d)
}

pub fn restore_detailed(
    d_tilde: &SnpMatrix,
    d_original: &SnpMatrix,
    eps_c: f64,
    seed: u64,
) -> Result<(SnpMatrix, Vec<ColumnDiagnostics>)> {
    d_tilde.check_same_shape(d_original)?;
    let noisy = noisy_counts_detailed(d_original, eps_c, seed)?;
    let mut out = d_tilde.clone();
    let ids = d_tilde.snp_ids();
    let diagnostics = out
        .par_columns_mut()
        .zip(noisy.par_iter())
        .enumerate()
        .map(|(j, (col, noisy))| {
            let perturbed_counts = CountVector::of_column(col);
            let plan = ot_plan(normalize(&perturbed_counts), normalize(&noisy.clamped))?;
            let mut rng = seed::stream(seed, Domain::Shuffle, j as u64);
            apply_plan_column(col, &plan, &mut rng);
            Ok(ColumnDiagnostics {
                snp: ids[j].clone(),
                raw_counts: noisy.raw,
                noisy_counts: noisy.clamped,
                perturbed_counts,
                plan: plan.t,
                achieved_counts: CountVector::of_column(col),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, diagnostics))
}
