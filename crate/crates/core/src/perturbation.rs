//! Stage one: XOR the encoded dataset with independently sampled noise bits.

use rand::Rng;
use rayon::prelude::*;

use crate::calibration::NoiseProfile;
use crate::data::{bits::decode_with_ids, encode, BitMatrix, SnpMatrix};
use crate::error::{Error, Result};
use crate::seed::{self, Domain};

/// Samples an `n x 2m` noise matrix, bit `(i, u)` ~ Bernoulli(`flip_prob[u]`).
///
/// Column `u` draws from its own stream derived from `seed`, so the result
/// is identical for any thread count.
pub fn sample_noise(profile: &NoiseProfile, rows: usize, seed: u64) -> BitMatrix {
    let mut noise = BitMatrix::zeros(rows, profile.bits());
    if rows == 0 {
        return noise;
    }
    noise
        .par_columns_words_mut()
        .zip(profile.flip_prob.par_iter())
        .enumerate()
        .for_each(|(u, (words, &p))| {
            let mut rng = seed::stream(seed, Domain::Noise, u as u64);
            for i in 0..rows {
                if rng.random::<f64>() < p {
                    words[i / 64] |= 1u64 << (i % 64);
                }
            }
        });
    noise
}

/// Encoded dataset XOR noise, before decoding.
pub fn perturb_bits(d: &SnpMatrix, profile: &NoiseProfile, seed: u64) -> Result<(BitMatrix, BitMatrix)> {
    if profile.bits() != 2 * d.cols() {
        return Err(Error::Dimension(format!(
            "noise profile covers {} bits, dataset has {} SNPs",
            profile.bits(),
            d.cols()
        )));
    }
    let noise = sample_noise(profile, d.rows(), seed);
    let mut bits = encode(d);
    bits.xor_assign(&noise)?;
    Ok((bits, noise))
}

/// `decode(encode(d) XOR B)`, keeping the SNP ids of `d`.
pub fn perturb(d: &SnpMatrix, profile: &NoiseProfile, seed: u64) -> Result<SnpMatrix> {
    let (bits, _) = perturb_bits(d, profile, seed)?;
    decode_with_ids(&bits, Some(d.snp_ids()))
}
