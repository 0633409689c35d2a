//! Reading embedding dumps and fingerprinting input files.
//!
//! Two text layouts are accepted, sniffed from the first non-empty line:
//!
//! * CSV: a `dim=<d>` header line, then `d` comma-separated floats per row;
//! * JSON lines: one JSON array of floats per row.
//!
//! Both parse into the same [`EmbeddingMatrix`]. Files referenced by a
//! report are fingerprinted with SHA-256 so the report pins its inputs.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::discretize::EmbeddingMatrix;
use crate::error::{Error, Result};

fn format_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::FileFormat {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Parse an embedding dump in either accepted layout.
pub fn read_embedding_file(path: &Path) -> Result<EmbeddingMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let Some((first_no, first)) = lines.next() else {
        return Err(format_error(path, 1, "empty file"));
    };

    let mut rows: Vec<f64> = Vec::new();
    let dim;
    let mut n_rows = 0;

    if let Some(spec) = first.strip_prefix("dim=") {
        dim = spec.parse::<usize>().map_err(|_| {
            format_error(path, first_no, format!("bad dimension header `{first}`"))
        })?;
        if dim == 0 {
            return Err(format_error(path, first_no, "dimension must be at least 1"));
        }
        for (line_no, line) in lines {
            let mut count = 0;
            for field in line.split(',') {
                let v = field.trim().parse::<f64>().map_err(|_| {
                    format_error(path, line_no, format!("bad float `{}`", field.trim()))
                })?;
                rows.push(v);
                count += 1;
            }
            if count != dim {
                return Err(format_error(
                    path,
                    line_no,
                    format!("expected {dim} columns, found {count}"),
                ));
            }
            n_rows += 1;
        }
    } else if first.starts_with('[') {
        let parse_row = |line_no: usize, line: &str| -> Result<Vec<f64>> {
            serde_json::from_str::<Vec<f64>>(line)
                .map_err(|e| format_error(path, line_no, format!("bad JSON array: {e}")))
        };
        let first_row = parse_row(first_no, first)?;
        dim = first_row.len();
        if dim == 0 {
            return Err(format_error(path, first_no, "empty JSON array row"));
        }
        rows.extend(first_row);
        n_rows = 1;
        for (line_no, line) in lines {
            let row = parse_row(line_no, line)?;
            if row.len() != dim {
                return Err(format_error(
                    path,
                    line_no,
                    format!("expected {dim} values, found {}", row.len()),
                ));
            }
            rows.extend(row);
            n_rows += 1;
        }
    } else {
        return Err(format_error(
            path,
            first_no,
            "expected a `dim=<d>` header or a JSON array",
        ));
    }

    let data = Array2::from_shape_vec((n_rows, dim), rows)
        .expect("row count and dimension were tracked during parsing");
    EmbeddingMatrix::new(data)
}

/// Write a matrix in the CSV layout `read_embedding_file` accepts.
pub fn write_embedding_csv(path: &Path, matrix: &EmbeddingMatrix) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "dim={}", matrix.dim()).expect("string writes are infallible");
    for i in 0..matrix.rows() {
        let fields: Vec<String> = matrix.row(i).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", fields.join(",")).expect("string writes are infallible");
    }
    write_text(path, &out)
}

/// Write text atomically enough for reports: create, write, flush.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(content.as_bytes()).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        write!(hex, "{b:02x}").expect("string writes are infallible");
    }
    Ok(hex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn temp_file(name: &str, content: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("pidfit-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        fs::write(&path, content).unwrap();
        path
    }

    #[test]
    fn csv_roundtrip_preserves_values() {
        let data = ndarray::arr2(&[[1.5, -2.25], [0.1, 1e-30]]);
        let m = EmbeddingMatrix::new(data).unwrap();
        let path = temp_file("roundtrip.csv", "");
        write_embedding_csv(&path, &m).unwrap();
        let back = read_embedding_file(&path).unwrap();
        assert_eq!(back.rows(), 2);
        assert_eq!(back.dim(), 2);
        for (a, b) in back.data().iter().zip(m.data().iter()) {
            assert_relative_eq!(a, b);
        }
    }

    #[test]
    fn jsonl_rows_parse() {
        let path = temp_file("rows.jsonl", "[1.0, 2.0]\n[3.5, -4.0]\n");
        let m = read_embedding_file(&path).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.dim(), 2);
        assert_relative_eq!(m.data()[[1, 0]], 3.5);
    }

    #[test]
    fn blank_lines_are_skipped_in_both_layouts() {
        let path = temp_file("gaps.csv", "\ndim=1\n\n2.0\n\n3.0\n");
        let m = read_embedding_file(&path).unwrap();
        assert_eq!(m.rows(), 2);

        let path = temp_file("gaps.jsonl", "\n[1.0]\n\n[2.0]\n");
        let m = read_embedding_file(&path).unwrap();
        assert_eq!(m.rows(), 2);
    }

    #[test]
    fn unrecognized_header_names_the_line() {
        let path = temp_file("bad.txt", "x1,x2\n1,2\n");
        match read_embedding_file(&path).unwrap_err() {
            Error::FileFormat { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ragged_csv_row_names_its_line() {
        let path = temp_file("ragged.csv", "dim=2\n1.0,2.0\n3.0\n");
        match read_embedding_file(&path).unwrap_err() {
            Error::FileFormat { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 2 columns"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_float_and_bad_json_name_their_lines() {
        let path = temp_file("badfloat.csv", "dim=1\noops\n");
        match read_embedding_file(&path).unwrap_err() {
            Error::FileFormat { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }

        let path = temp_file("badjson.jsonl", "[1.0]\n[1.0,\n");
        match read_embedding_file(&path).unwrap_err() {
            Error::FileFormat { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_a_format_error() {
        let path = temp_file("empty.csv", "");
        assert!(matches!(
            read_embedding_file(&path).unwrap_err(),
            Error::FileFormat { .. }
        ));
    }

    #[test]
    fn non_finite_values_are_rejected_with_position() {
        let path = temp_file("nan.csv", "dim=2\n1.0,NaN\n");
        assert!(matches!(
            read_embedding_file(&path).unwrap_err(),
            Error::NonFiniteInput { row: 0, col: 1 }
        ));
    }

    #[test]
    fn sha256_matches_the_known_test_vector() {
        let path = temp_file("abc.bin", "abc");
        assert_eq!(
            sha256_hex(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn missing_file_maps_to_an_io_error() {
        let err = read_embedding_file(Path::new("/nonexistent/nowhere.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
