//! Comma-separated tables with one sample per row.
//!
//! On disk each row is a sample and each column a feature; in memory the
//! loader transposes into a column-per-sample [`SampleMatrix`]. Lines starting
//! with `#` are skipped, and a first row that does not parse as numbers is
//! taken as a header.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matcore::SampleMatrix;

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}")),
        ),
    }
}

/// Reads a numeric table as rows of values, dropping an optional header.
pub fn load_rows(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, record) in reader(path)?.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, &str>> = record
            .iter()
            .map(|cell| cell.parse::<f64>().map_err(|_| cell))
            .collect();
        if rows.is_empty() && width.is_none() && parsed.iter().any(|c| c.is_err()) {
            // header row
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRows {
                path: path.to_path_buf(),
                line,
                expected,
                found: record.len(),
            });
        }
        let mut row = Vec::with_capacity(expected);
        for (col, cell) in parsed.into_iter().enumerate() {
            match cell {
                Ok(v) if v.is_finite() => row.push(v),
                Ok(v) => {
                    return Err(Error::NonNumericCell {
                        path: path.to_path_buf(),
                        row: line,
                        col: col + 1,
                        value: v.to_string(),
                    })
                }
                Err(raw) => {
                    return Err(Error::NonNumericCell {
                        path: path.to_path_buf(),
                        row: line,
                        col: col + 1,
                        value: raw.to_string(),
                    })
                }
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Ok(rows)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<SampleMatrix> {
    let rows = load_rows(path)?;
    let d = rows[0].len();
    let n = rows.len();
    SampleMatrix::from_matrix(DMatrix::from_fn(d, n, |i, j| rows[j][i]))
}

/// Writes rows of values, each formatted as the shortest decimal that parses
/// back to the same `f64`.
pub fn save_rows<R: AsRef<[f64]>>(
    path: impl AsRef<Path>,
    header: Option<&[&str]>,
    rows: &[R],
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Writes a column-per-sample matrix as one row per column.
pub fn save_matrix_rows(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let rows: Vec<Vec<f64>> = m.column_iter().map(|c| c.iter().copied().collect()).collect();
    save_rows(path, None, &rows)
}

pub fn save_csv(path: impl AsRef<Path>, x: &SampleMatrix) -> Result<()> {
    save_matrix_rows(path, x.as_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn rows_become_columns() {
        let dir = tempfile::tempdir().unwrap();
        let x = load_csv(write(&dir, "a.csv", "1,2\n3,4\n")).unwrap();
        assert_eq!(x.dim(), 2);
        assert_eq!(x.column(0), &[1.0, 2.0]);
        assert_eq!(x.column(1), &[3.0, 4.0]);
    }

    #[test]
    fn header_and_comments_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let x = load_csv(write(&dir, "a.csv", "# made by hand\na,b\n1,2\n")).unwrap();
        assert_eq!((x.dim(), x.n_samples()), (2, 1));
        assert_eq!(x.column(0), &[1.0, 2.0]);
    }

    #[test]
    fn ragged_rows_report_line() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_csv(write(&dir, "a.csv", "1,2\n3,4,5\n")).unwrap_err();
        match err {
            Error::RaggedRows {
                line,
                expected,
                found,
                ..
            } => assert_eq!((line, expected, found), (2, 2, 3)),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_csv(write(&dir, "a.csv", "1,2\n3,x\n")).unwrap_err();
        match err {
            Error::NonNumericCell { row, col, value, .. } => {
                assert_eq!((row, col, value.as_str()), (2, 2, "x"))
            }
            e => panic!("{e}"),
        }
        assert!(matches!(
            load_csv(write(&dir, "b.csv", "1,2\nnan,4\n")),
            Err(Error::NonNumericCell { .. })
        ));
    }

    #[test]
    fn empty_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        for body in ["", "# nothing\n", "a,b\n"] {
            assert!(matches!(
                load_csv(write(&dir, "e.csv", body)),
                Err(Error::EmptyFile { .. })
            ));
        }
        assert!(matches!(
            load_csv(dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let vals = [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, -0.0];
        let x = SampleMatrix::new(3, 2, vals.to_vec()).unwrap();
        let p = dir.path().join("x.csv");
        save_csv(&p, &x).unwrap();
        let y = load_csv(&p).unwrap();
        for (a, b) in x.as_slice().iter().zip(y.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
