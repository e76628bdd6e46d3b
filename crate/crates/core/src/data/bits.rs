use rayon::prelude::*;

use super::matrix::{default_ids, SnpMatrix};
use crate::error::{Error, Result};

/// Binary matrix with each column packed into 64-bit words.
///
/// Used both for the encoded dataset and for the noise matrix. Padding bits
/// past `rows` in the last word of a column are always zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_col: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_col = rows.div_ceil(64);
        BitMatrix { rows, cols, words_per_col, data: vec![0; words_per_col * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        let w = self.data[col * self.words_per_col + row / 64];
        (w >> (row % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, bit: bool) {
        let w = &mut self.data[col * self.words_per_col + row / 64];
        let mask = 1u64 << (row % 64);
        if bit {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    /// Packed words of one column.
    pub fn column_words(&self, col: usize) -> &[u64] {
        &self.data[col * self.words_per_col..(col + 1) * self.words_per_col]
    }

    pub(crate) fn par_columns_words_mut(&mut self) -> rayon::slice::ChunksExactMut<'_, u64> {
        self.data.par_chunks_exact_mut(self.words_per_col.max(1))
    }

    /// Number of ones in a column.
    pub fn column_count(&self, col: usize) -> u32 {
        self.column_words(col).iter().map(|w| w.count_ones()).sum()
    }

    /// In-place XOR with a matrix of the same shape.
    pub fn xor_assign(&mut self, other: &BitMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "cannot XOR {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a ^= *b;
        }
        Ok(())
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut out = BitMatrix::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension(format!("ragged bit row {i}")));
            }
            for (u, &b) in row.iter().enumerate() {
                out.set(i, u, b);
            }
        }
        Ok(out)
    }

    pub fn row(&self, row: usize) -> Vec<bool> {
        (0..self.cols).map(|u| self.get(row, u)).collect()
    }
}

/// Two bits per SNP: `0 -> 00`, `1 -> 01`, `2 -> 11`.
///
/// SNP `j` occupies bit columns `2j` (set only for genotype 2) and `2j + 1`
/// (set for genotype 1 or 2).
pub fn encode(d: &SnpMatrix) -> BitMatrix {
    let mut out = BitMatrix::zeros(d.rows(), 2 * d.cols());
    for (j, col) in d.columns().enumerate() {
        for (i, &g) in col.iter().enumerate() {
            if g == 2 {
                out.set(i, 2 * j, true);
            }
            if g >= 1 {
                out.set(i, 2 * j + 1, true);
            }
        }
    }
    out
}

/// Decodes bit pairs by popcount, so the `10` pattern (only reachable after
/// XOR noise) becomes genotype 1.
pub fn decode(b: &BitMatrix) -> Result<SnpMatrix> {
    decode_with_ids(b, None)
}

pub(crate) fn decode_with_ids(b: &BitMatrix, ids: Option<&[String]>) -> Result<SnpMatrix> {
    if !b.cols().is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "bit matrix has odd column count {}",
            b.cols()
        )));
    }
    let m = b.cols() / 2;
    let ids = match ids {
        Some(ids) if ids.len() == m => ids.to_vec(),
        Some(ids) => {
            return Err(Error::Dimension(format!("{} ids for {m} SNPs", ids.len())));
        }
        None => default_ids(m),
    };
    let n = b.rows();
    let mut data = Vec::with_capacity(n * m);
    for j in 0..m {
        for i in 0..n {
            data.push(b.get(i, 2 * j) as u8 + b.get(i, 2 * j + 1) as u8);
        }
    }
    SnpMatrix::from_columns(n, data, ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encoding_table() {
        let d = SnpMatrix::from_rows_default_ids(&[vec![0, 1, 2]]).unwrap();
        let b = encode(&d);
        assert_eq!(b.row(0), vec![false, false, false, true, true, true]);
    }

    #[test]
    fn ten_pattern_decodes_to_one() {
        let b = BitMatrix::from_rows(&[vec![true, false], vec![true, true]]).unwrap();
        let d = decode(&b).unwrap();
        assert_eq!(d.column(0), &[1, 2]);
    }

    #[test]
    fn odd_width_is_rejected() {
        let b = BitMatrix::zeros(3, 5);
        assert!(matches!(decode(&b), Err(Error::Dimension(_))));
    }

    #[test]
    fn xor_is_an_involution() {
        let d = SnpMatrix::from_rows_default_ids(&[vec![0, 1], vec![2, 0]]).unwrap();
        let orig = encode(&d);
        let noise = BitMatrix::from_rows(&[
            vec![true, false, true, true],
            vec![false, false, true, false],
        ])
        .unwrap();
        let mut b = orig.clone();
        b.xor_assign(&noise).unwrap();
        assert_ne!(b, orig);
        b.xor_assign(&noise).unwrap();
        assert_eq!(b, orig);
    }

    fn snp_matrix() -> impl Strategy<Value = SnpMatrix> {
        (1usize..20, 1usize..20).prop_flat_map(|(n, m)| {
            proptest::collection::vec(0u8..3, n * m)
                .prop_map(move |v| SnpMatrix::from_columns(n, v, default_ids(m)).unwrap())
        })
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(d in snp_matrix()) {
            let back = decode_with_ids(&encode(&d), Some(d.snp_ids())).unwrap();
            prop_assert_eq!(back, d);
        }

        #[test]
        fn decode_is_total(n in 1usize..10, m in 1usize..10, seed in any::<u64>()) {
            let mut b = BitMatrix::zeros(n, 2 * m);
            let mut s = seed;
            for i in 0..n {
                for u in 0..2 * m {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    b.set(i, u, (s >> 33) & 1 == 1);
                }
            }
            let d = decode(&b).unwrap();
            prop_assert!(d.values().iter().all(|&g| g <= 2));
            prop_assert_eq!((d.rows(), d.cols()), (n, m));
        }
    }
}
