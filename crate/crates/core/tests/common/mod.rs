#![allow(clippy::needless_range_loop)]
//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use genoshare::data::SnpMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

/// Bits of one individual's encoded row, computed from the encoding table directly.
pub fn encoded_row(row: &[u8]) -> Vec<u8> {
    row.iter()
        .flat_map(|&g| match g {
            0 => [0, 0],
            1 => [0, 1],
            _ => [1, 1],
        })
        .collect()
}

/// Explicit `2m x 2m` log-linear association matrix from smoothed frequencies.
pub fn dense_theta(reference: &SnpMatrix, alpha: f64) -> Vec<Vec<f64>> {
    let rows: Vec<Vec<u8>> = reference.to_rows().iter().map(|r| encoded_row(r)).collect();
    let p = rows[0].len();
    let mut theta = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in 0..p {
            if a == b {
                let zeros = rows.iter().filter(|r| r[a] == 0).count() as f64;
                let ones = rows.iter().filter(|r| r[a] == 1).count() as f64;
                theta[a][a] = ((zeros + alpha) / (ones + alpha)).ln();
            } else {
                let mut cell = [[0.0f64; 2]; 2];
                for r in &rows {
                    cell[r[a] as usize][r[b] as usize] += 1.0;
                }
                let f = |x: usize, y: usize| cell[x][y] + alpha;
                theta[a][b] = (f(0, 1) * f(1, 0) / (f(1, 1) * f(0, 0))).ln();
            }
        }
    }
    theta
}

pub fn frobenius(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// L2 norm of the eigenvalues of a symmetric matrix.
pub fn eigen_norm(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]);
    mat.symmetric_eigen().eigenvalues.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// North-west corner plan after permuting rows and columns: a vertex of the
/// transportation polytope, feasible for the given marginals.
fn permuted_corner(src: &[f64; 3], tgt: &[f64; 3], rows: &[usize], cols: &[usize]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    let (mut a, mut b) = (*src, *tgt);
    let (mut i, mut j) = (0, 0);
    while i < 3 && j < 3 {
        let (p, q) = (rows[i], cols[j]);
        let mass = a[p].min(b[q]);
        t[p][q] += mass;
        a[p] -= mass;
        b[q] -= mass;
        if a[p] <= b[q] {
            i += 1;
        } else {
            j += 1;
        }
    }
    t
}

/// Random feasible plan: a random convex combination of permuted corner plans.
pub fn random_feasible_plan(src: &[f64; 3], tgt: &[f64; 3], rng: &mut impl Rng) -> [[f64; 3]; 3] {
    let k = rng.random_range(1..=4);
    let weights: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-12).ln()).collect();
    let total: f64 = weights.iter().sum();
    let mut out = [[0.0; 3]; 3];
    for w in weights {
        let mut rows = [0, 1, 2];
        let mut cols = [0, 1, 2];
        rows.shuffle(rng);
        cols.shuffle(rng);
        let v = permuted_corner(src, tgt, &rows, &cols);
        for p in 0..3 {
            for q in 0..3 {
                out[p][q] += w / total * v[p][q];
            }
        }
    }
    out
}

pub fn transport_cost(t: &[[f64; 3]; 3]) -> f64 {
    let mut c = 0.0;
    for p in 0..3 {
        for q in 0..3 {
            c += t[p][q] * (p as f64 - q as f64).abs();
        }
    }
    c
}

pub fn cdf_distance(src: &[f64; 3], tgt: &[f64; 3]) -> f64 {
    (src[0] - tgt[0]).abs() + (src[0] + src[1] - tgt[0] - tgt[1]).abs()
}

pub fn random_distribution(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        // Occasionally zero out a bin so sparse supports are covered.
        let mut v: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        if rng.random_bool(0.2) {
            v[rng.random_range(0..3)] = 0.0;
        }
        let s: f64 = v.iter().sum();
        if s > 1e-6 {
            return v.map(|x| x / s);
        }
    }
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> SnpMatrix {
    let data: Vec<u8> = (0..rows * cols).map(|_| rng.random_range(0..3)).collect();
    SnpMatrix::from_columns(rows, data, (0..cols).map(|j| format!("rs{j}")).collect()).unwrap()
}
