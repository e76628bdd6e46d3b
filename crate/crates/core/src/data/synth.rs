use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{default_ids, SnpMatrix};
use crate::error::{Error, Result};
use crate::seed::{self, Domain};

/// Shape of a synthetic case/control study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n_case: usize,
    pub n_control: usize,
    pub snps: usize,
    /// The first `n_assoc` SNPs carry a planted association.
    pub n_assoc: usize,
    /// Added to the case-group MAF of each planted SNP.
    pub maf_shift: f64,
}

const MAF_LOW: f64 = 0.05;
const MAF_HIGH: f64 = 0.45;

/// Draws case and control genotype matrices, SNP by SNP, as Binomial(2, MAF).
///
/// Control MAFs are uniform on `[0.05, 0.45]`; planted SNPs add `maf_shift`
/// to the case-group MAF. Each SNP uses its own seeded stream.
pub fn generate_synthetic(params: &SyntheticParams, seed: u64) -> Result<(SnpMatrix, SnpMatrix)> {
    let SyntheticParams { n_case, n_control, snps, n_assoc, maf_shift } = *params;
    if n_case == 0 || n_control == 0 || snps == 0 {
        return Err(Error::Parameter("group sizes and SNP count must be positive".into()));
    }
    if n_assoc > snps {
        return Err(Error::Parameter(format!("n_assoc {n_assoc} exceeds SNP count {snps}")));
    }
    if !(0.0..=0.5).contains(&maf_shift) {
        return Err(Error::Parameter(format!("maf_shift {maf_shift} outside [0, 0.5]")));
    }

    let mut case = Vec::with_capacity(n_case * snps);
    let mut control = Vec::with_capacity(n_control * snps);
    for j in 0..snps {
        let mut rng = seed::stream(seed, Domain::Synthetic, j as u64);
        let maf = rng.random_range(MAF_LOW..MAF_HIGH);
        let case_maf = if j < n_assoc { maf + maf_shift } else { maf };
        case.extend((0..n_case).map(|_| binomial2(&mut rng, case_maf)));
        control.extend((0..n_control).map(|_| binomial2(&mut rng, maf)));
    }
    let ids = default_ids(snps);
    Ok((
        SnpMatrix::from_columns(n_case, case, ids.clone())?,
        SnpMatrix::from_columns(n_control, control, ids)?,
    ))
}

fn binomial2(rng: &mut impl Rng, p: f64) -> u8 {
    (rng.random::<f64>() < p) as u8 + (rng.random::<f64>() < p) as u8
}
