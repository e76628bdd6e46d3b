use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Minor-allele count at one SNP.
pub type Genotype = u8;

/// `n x m` genotype matrix over `{0, 1, 2}` with one identifier per SNP column.
///
/// Values are stored column-major: almost every consumer (count queries,
/// contingency tables, plan application) walks one SNP at a time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnpMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Genotype>,
    snp_ids: Vec<String>,
}

impl SnpMatrix {
    /// Builds a matrix from column-major values.
    pub fn from_columns(rows: usize, data: Vec<Genotype>, snp_ids: Vec<String>) -> Result<Self> {
        let cols = snp_ids.len();
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "genotype matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} values for {rows}x{cols}, got {}",
                rows * cols,
                data.len()
            )));
        }
        for (k, &g) in data.iter().enumerate() {
            if g > 2 {
                return Err(Error::Genotype {
                    row: k % rows,
                    col: k / rows,
                    value: g.to_string(),
                });
            }
        }
        check_unique(&snp_ids)?;
        Ok(SnpMatrix { rows, cols, data, snp_ids })
    }

    /// Builds a matrix from per-individual rows.
    pub fn from_rows(rows: &[Vec<Genotype>], snp_ids: Vec<String>) -> Result<Self> {
        let cols = snp_ids.len();
        let mut data = vec![0; rows.len() * cols];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} values, expected {cols}",
                    row.len()
                )));
            }
            for (j, &g) in row.iter().enumerate() {
                data[j * rows.len() + i] = g;
            }
        }
        Self::from_columns(rows.len(), data, snp_ids)
    }

    /// Like [`SnpMatrix::from_rows`] with generated ids `snp0, snp1, ...`.
    pub fn from_rows_default_ids(rows: &[Vec<Genotype>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        Self::from_rows(rows, default_ids(cols))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn snp_ids(&self) -> &[String] {
        &self.snp_ids
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Genotype {
        self.data[col * self.rows + row]
    }

    pub fn column(&self, col: usize) -> &[Genotype] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Genotype]> {
        self.data.chunks_exact(self.rows)
    }

    pub(crate) fn par_columns_mut(&mut self) -> rayon::slice::ChunksExactMut<'_, Genotype> {
        self.data.par_chunks_exact_mut(self.rows)
    }

    pub(crate) fn column_mut(&mut self, col: usize) -> &mut [Genotype] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn row(&self, row: usize) -> Vec<Genotype> {
        (0..self.cols).map(|j| self.get(row, j)).collect()
    }

    /// Row-major copy of the values, one `Vec` per individual.
    pub fn to_rows(&self) -> Vec<Vec<Genotype>> {
        let mut out = vec![Vec::with_capacity(self.cols); self.rows];
        for col in self.columns() {
            for (row, &g) in out.iter_mut().zip(col) {
                row.push(g);
            }
        }
        out
    }

    pub fn values(&self) -> &[Genotype] {
        &self.data
    }

    /// Checks that `other` describes the same SNP columns.
    pub fn check_same_snps(&self, other: &SnpMatrix) -> Result<()> {
        if self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "SNP count differs: {} vs {}",
                self.cols, other.cols
            )));
        }
        Ok(())
    }

    pub fn check_same_shape(&self, other: &SnpMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "shape differs: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

pub(crate) fn default_ids(cols: usize) -> Vec<String> {
    (0..cols).map(|j| format!("snp{j}")).collect()
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::Parameter(format!("duplicate SNP id {id:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_columns_agree() {
        let m = SnpMatrix::from_rows_default_ids(&[vec![0, 1, 2], vec![2, 2, 0]]).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 3);
        assert_eq!(m.column(2), &[2, 0]);
        assert_eq!(m.row(1), vec![2, 2, 0]);
        assert_eq!(m.to_rows(), vec![vec![0, 1, 2], vec![2, 2, 0]]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            SnpMatrix::from_rows_default_ids(&[vec![0, 3]]),
            Err(Error::Genotype { row: 0, col: 1, .. })
        ));
        assert!(SnpMatrix::from_rows_default_ids(&[]).is_err());
        assert!(SnpMatrix::from_rows(&[vec![0, 1]], vec!["a".into(), "a".into()]).is_err());
        assert!(SnpMatrix::from_rows(&[vec![0, 1], vec![0]], default_ids(2)).is_err());
    }
}
