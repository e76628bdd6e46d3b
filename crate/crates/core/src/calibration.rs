//! Correlation-aware calibration of per-bit flip probabilities.
//!
//! A log-linear association matrix over the `2m` bit columns of a public
//! reference dataset is summarised row by row (the full matrix is never
//! stored), rescaled so that `s_f * ||lambda(Theta)||_2 = eps_x`, and turned
//! into one marginal flip probability per bit column.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::BitMatrix;
use crate::error::{Error, Result};

/// Additive smoothing applied to every frequency cell before taking logs.
pub const DEFAULT_SMOOTHING: f64 = 0.5;

/// Sensitivity of the binary encoding: one individual changes at most all
/// `2m` of their bits.
pub fn sensitivity(snps: usize) -> f64 {
    2.0 * snps as f64
}

/// Which expression to use for the per-bit exponent `kappa_u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaVariant {
    /// `2 * rowsum(Theta_u) - Theta_uu`.
    TheoremLiteral,
    /// `Theta_uu + 2 * sum_{v != u} max(Theta_uv, 0)`, the maximiser of the
    /// marginal bound.
    #[default]
    ProofPositivePart,
}

impl fmt::Display for KappaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KappaVariant::TheoremLiteral => "theorem-literal",
            KappaVariant::ProofPositivePart => "proof-positive-part",
        })
    }
}

impl FromStr for KappaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem-literal" | "theorem" => Ok(KappaVariant::TheoremLiteral),
            "proof-positive-part" | "proof" => Ok(KappaVariant::ProofPositivePart),
            other => Err(Error::Parameter(format!("unknown kappa variant {other:?}"))),
        }
    }
}

/// Row-wise summary of a symmetric association matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaRowStats {
    pub diag: Vec<f64>,
    /// Sum of the whole row, diagonal included.
    pub row_sum: Vec<f64>,
    /// Sum of the positive off-diagonal entries of the row.
    pub pos_offdiag_sum: Vec<f64>,
    /// Squared Frobenius norm of the whole matrix.
    pub frobenius_sq: f64,
}

impl ThetaRowStats {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq.sqrt()
    }

    /// Summarises an explicit square matrix.
    pub fn from_dense(theta: &[Vec<f64>]) -> Result<Self> {
        let p = theta.len();
        let mut stats = ThetaRowStats {
            diag: Vec::with_capacity(p),
            row_sum: Vec::with_capacity(p),
            pos_offdiag_sum: Vec::with_capacity(p),
            frobenius_sq: 0.0,
        };
        for (u, row) in theta.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Dimension(format!("row {u} of a {p}x{p} matrix has {}", row.len())));
            }
            stats.diag.push(row[u]);
            stats.row_sum.push(row.iter().sum());
            stats.pos_offdiag_sum.push(
                row.iter().enumerate().filter(|&(v, _)| v != u).map(|(_, &x)| x.max(0.0)).sum(),
            );
            stats.frobenius_sq += row.iter().map(|x| x * x).sum::<f64>();
        }
        Ok(stats)
    }

    /// The summary of `factor * Theta`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |v: &[f64]| v.iter().map(|x| x * factor).collect();
        ThetaRowStats {
            diag: scale(&self.diag),
            row_sum: scale(&self.row_sum),
            pos_offdiag_sum: scale(&self.pos_offdiag_sum),
            frobenius_sq: self.frobenius_sq * factor * factor,
        }
    }

    pub fn kappa(&self, variant: KappaVariant) -> Vec<f64> {
        (0..self.dim())
            .map(|u| match variant {
                KappaVariant::TheoremLiteral => 2.0 * self.row_sum[u] - self.diag[u],
                KappaVariant::ProofPositivePart => self.diag[u] + 2.0 * self.pos_offdiag_sum[u],
            })
            .collect()
    }
}

/// Log-linear association statistics of a binarised reference dataset.
///
/// Diagonal: `log(Pr(M_p = 0) / Pr(M_p = 1))`. Off-diagonal: the log of
/// `Pr(01) Pr(10) / (Pr(11) Pr(00))` over the joint values of columns `p, q`.
/// Every count gets `smoothing` added before the log. Rows are processed in
/// parallel; each row is reduced sequentially so the result does not depend
/// on the thread count.
pub fn theta_tilde_stats(reference: &BitMatrix, smoothing: f64) -> Result<ThetaRowStats> {
    let n = reference.rows();
    let p = reference.cols();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "reference dataset needs at least 2 individuals, got {n}"
        )));
    }
    if p == 0 {
        return Err(Error::InsufficientData("reference dataset has no columns".into()));
    }
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(Error::Parameter(format!("smoothing must be positive, got {smoothing}")));
    }

    // ln(k + alpha) for every possible cell count k.
    let log_count: Vec<f64> = (0..=n).map(|k| (k as f64 + smoothing).ln()).collect();
    let ones: Vec<usize> = (0..p).map(|u| reference.column_count(u) as usize).collect();

    let rows: Vec<(f64, f64, f64, f64)> = (0..p)
        .into_par_iter()
        .map(|u| {
            let a = reference.column_words(u);
            let n1u = ones[u];
            let diag = log_count[n - n1u] - log_count[n1u];
            let mut row_sum = diag;
            let mut pos = 0.0;
            let mut sq = diag * diag;
            for v in 0..p {
                if v == u {
                    continue;
                }
                let n11: usize = a
                    .iter()
                    .zip(reference.column_words(v))
                    .map(|(x, y)| (x & y).count_ones() as usize)
                    .sum();
                let n1v = ones[v];
                let n10 = n1u - n11;
                let n01 = n1v - n11;
                let n00 = n + n11 - n1u - n1v;
                let theta =
                    log_count[n01] + log_count[n10] - log_count[n11] - log_count[n00];
                row_sum += theta;
                if theta > 0.0 {
                    pos += theta;
                }
                sq += theta * theta;
            }
            (diag, row_sum, pos, sq)
        })
        .collect();

    let mut stats = ThetaRowStats {
        diag: Vec::with_capacity(p),
        row_sum: Vec::with_capacity(p),
        pos_offdiag_sum: Vec::with_capacity(p),
        frobenius_sq: 0.0,
    };
    for (diag, row_sum, pos, sq) in rows {
        stats.diag.push(diag);
        stats.row_sum.push(row_sum);
        stats.pos_offdiag_sum.push(pos);
        stats.frobenius_sq += sq;
    }
    Ok(stats)
}

/// Marginal flip probability of one bit: `1/2` when `kappa > lambda_norm`,
/// otherwise `1 / (1 + exp(kappa))`.
pub fn flip_probability(kappa: f64, lambda_norm: f64) -> f64 {
    if kappa > lambda_norm {
        0.5
    } else {
        1.0 / (1.0 + kappa.exp())
    }
}

/// Per-bit flip probabilities plus everything needed to audit them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub flip_prob: Vec<f64>,
    pub kappa: Vec<f64>,
    /// `||lambda(Theta)||_2`, equal to the Frobenius norm of the symmetric `Theta`.
    pub lambda_norm: f64,
    pub s_f: f64,
    pub eps_x: f64,
    pub kappa_variant: KappaVariant,
    /// Number of bits whose `kappa` exceeds `lambda_norm` (flip probability 1/2).
    pub half_branch_bits: usize,
}

impl NoiseProfile {
    pub fn bits(&self) -> usize {
        self.flip_prob.len()
    }

    pub fn on_half_branch(&self, u: usize) -> bool {
        self.kappa[u] > self.lambda_norm
    }

    /// A profile with the given flip probabilities and no calibration metadata.
    pub fn from_flip_probabilities(flip_prob: Vec<f64>) -> Result<Self> {
        if !flip_prob.len().is_multiple_of(2) {
            return Err(Error::Dimension(format!("{} flip probabilities is odd", flip_prob.len())));
        }
        if let Some(p) = flip_prob.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Parameter(format!("flip probability {p} outside [0, 1]")));
        }
        Ok(NoiseProfile {
            kappa: vec![0.0; flip_prob.len()],
            s_f: flip_prob.len() as f64,
            flip_prob,
            lambda_norm: 0.0,
            eps_x: 0.0,
            kappa_variant: KappaVariant::default(),
            half_branch_bits: 0,
        })
    }
}

/// Scales the association statistics to `eps_x` and derives flip probabilities.
///
/// `Theta = eps_x / (s_f ||Theta~||_F) * Theta~`; because `Theta~` is
/// symmetric its eigenvalue norm equals its Frobenius norm, so
/// `||lambda(Theta)||_2 = eps_x / s_f`.
pub fn calibrate(
    stats: &ThetaRowStats,
    eps_x: f64,
    snps: usize,
    variant: KappaVariant,
) -> Result<NoiseProfile> {
    if !(eps_x > 0.0 && eps_x.is_finite()) {
        return Err(Error::Parameter(format!("eps_x must be positive, got {eps_x}")));
    }
    if stats.dim() != 2 * snps {
        return Err(Error::Dimension(format!(
            "statistics cover {} bits, expected {} for {snps} SNPs",
            stats.dim(),
            2 * snps
        )));
    }
    let frob = stats.frobenius();
    if !(frob > 0.0) || !frob.is_finite() {
        return Err(Error::DegenerateCalibration(format!(
            "association matrix has Frobenius norm {frob}"
        )));
    }
    let s_f = sensitivity(snps);
    let theta = stats.scaled(eps_x / (s_f * frob));
    let lambda_norm = theta.frobenius();
    let kappa = theta.kappa(variant);
    let flip_prob: Vec<f64> = kappa.iter().map(|&k| flip_probability(k, lambda_norm)).collect();
    let half_branch_bits = kappa.iter().filter(|&&k| k > lambda_norm).count();
    Ok(NoiseProfile {
        flip_prob,
        kappa,
        lambda_norm,
        s_f,
        eps_x,
        kappa_variant: variant,
        half_branch_bits,
    })
}
