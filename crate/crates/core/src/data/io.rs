//! CSV dataset files: a header row of SNP ids, then one row per individual.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::matrix::{Genotype, SnpMatrix};
use crate::error::{Error, Result};

pub fn read_dataset(path: impl AsRef<Path>) -> Result<SnpMatrix> {
    let path = path.as_ref();
    let format_err = |reason: String| Error::Format { path: path.to_path_buf(), reason };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
            other => format_err(format!("{other:?}")),
        })?;

    let ids: Vec<String> = reader
        .headers()
        .map_err(|e| format_err(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if ids.is_empty() || ids.iter().any(String::is_empty) {
        return Err(format_err("header must list a non-empty id per column".into()));
    }

    let mut columns: Vec<Vec<Genotype>> = vec![Vec::new(); ids.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format_err(e.to_string()))?;
        if record.len() != ids.len() {
            return Err(format_err(format!(
                "row {row} has {} cells, header has {}",
                record.len(),
                ids.len()
            )));
        }
        for (col, cell) in record.iter().enumerate() {
            let g = match cell {
                "0" => 0,
                "1" => 1,
                "2" => 2,
                other => {
                    return Err(Error::Genotype { row, col, value: other.to_owned() });
                }
            };
            columns[col].push(g);
        }
    }
    let rows = columns[0].len();
    if rows == 0 {
        return Err(format_err("no individuals".into()));
    }
    SnpMatrix::from_columns(rows, columns.concat(), ids)
}

pub fn write_dataset(d: &SnpMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    let mut line = d.snp_ids().join(",");
    line.push('\n');
    out.write_all(line.as_bytes()).map_err(io_err)?;
    let mut buf = Vec::with_capacity(2 * d.cols());
    for i in 0..d.rows() {
        buf.clear();
        for j in 0..d.cols() {
            if j > 0 {
                buf.push(b',');
            }
            buf.push(b'0' + d.get(i, j));
        }
        buf.push(b'\n');
        out.write_all(&buf).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_small_file() {
        let f = write_tmp("s1,s2\n0,1\n2,0\n");
        let d = read_dataset(f.path()).unwrap();
        assert_eq!(d.to_rows(), vec![vec![0, 1], vec![2, 0]]);
        assert_eq!(d.snp_ids(), &["s1".to_string(), "s2".to_string()]);
    }

    #[test]
    fn out_of_domain_cell_reports_position() {
        let f = write_tmp("s1,s2\n0,1\n2,3\n");
        match read_dataset(f.path()) {
            Err(Error::Genotype { row, col, value }) => {
                assert_eq!((row, col, value.as_str()), (1, 1, "3"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_and_ragged_cells_are_rejected() {
        let f = write_tmp("s1,s2\n0,\n");
        assert!(matches!(read_dataset(f.path()), Err(Error::Genotype { .. })));
        let f = write_tmp("s1,s2\n0,1\n1\n");
        assert!(matches!(read_dataset(f.path()), Err(Error::Format { .. })));
        let f = write_tmp("s1,s2\n");
        assert!(matches!(read_dataset(f.path()), Err(Error::Format { .. })));
    }

    #[test]
    fn roundtrip_preserves_values_and_column_order() {
        let d = SnpMatrix::from_rows(
            &[vec![0, 1, 2], vec![2, 2, 1]],
            vec!["rs9".into(), "rs1".into(), "rs5".into()],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        write_dataset(&d, &p).unwrap();
        assert_eq!(read_dataset(&p).unwrap(), d);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(read_dataset("/nonexistent/x.csv"), Err(Error::Io { .. })));
    }
}
