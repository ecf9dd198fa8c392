//! Matrix Market coordinate files (`%%MatrixMarket matrix coordinate real general|symmetric`).
//!
//! Indices are 1-based. Values are written in shortest round-trip form so that a
//! save/load cycle reproduces every `f64` bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{KmsError, Result};
use crate::fsutil::write_atomic;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

pub fn format_matrix_market(m: &CsrMatrix, symmetry: Symmetry) -> String {
    let entries: Vec<(usize, usize, f64)> = match symmetry {
        Symmetry::General => m.triplets().collect(),
        Symmetry::Symmetric => m.triplets().filter(|&(i, j, _)| i >= j).collect(),
    };
    let kind = match symmetry {
        Symmetry::General => "general",
        Symmetry::Symmetric => "symmetric",
    };
    let mut s = String::with_capacity(32 * entries.len() + 64);
    let _ = writeln!(s, "%%MatrixMarket matrix coordinate real {kind}");
    let _ = writeln!(s, "{} {} {}", m.nrows(), m.ncols(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
    }
    s
}

pub fn write_matrix_market(path: &Path, m: &CsrMatrix, symmetry: Symmetry) -> Result<()> {
    write_atomic(path, format_matrix_market(m, symmetry).as_bytes())
}

/// Writes a dense matrix, storing only its nonzero entries.
pub fn write_dense(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_matrix_market(path, &CsrMatrix::from_dense(m), Symmetry::General)
}

pub fn parse_matrix_market(text: &str, origin: &str) -> Result<CsrMatrix> {
    let err = |line: usize, msg: &str| KmsError::Parse {
        path: origin.to_string(),
        line,
        msg: msg.to_string(),
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let words: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if words.len() < 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(err(1, "missing %%MatrixMarket matrix header"));
    }
    let array = match words[2].as_str() {
        "coordinate" => false,
        "array" => true,
        other => return Err(err(1, &format!("unsupported format '{other}'"))),
    };
    if !matches!(words[3].as_str(), "real" | "double" | "integer") {
        return Err(err(1, &format!("unsupported field '{}'", words[3])));
    }
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(err(1, &format!("unsupported symmetry '{other}'"))),
    };
    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data.next().ok_or_else(|| err(2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|w| w.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err(size_line + 1, "malformed size line"))?;
    let mut triplets = Vec::new();
    if array {
        if dims.len() != 2 {
            return Err(err(size_line + 1, "array size line needs rows and columns"));
        }
        let (nr, nc) = (dims[0], dims[1]);
        // column-major; symmetric arrays list the lower triangle only
        let slots: Vec<(usize, usize)> = match symmetry {
            Symmetry::General => (0..nc).flat_map(|j| (0..nr).map(move |i| (i, j))).collect(),
            Symmetry::Symmetric => {
                if nr != nc {
                    return Err(err(size_line + 1, "symmetric array must be square"));
                }
                (0..nc).flat_map(|j| (j..nr).map(move |i| (i, j))).collect()
            }
        };
        let mut count = 0;
        for (k, (ln, l)) in data.enumerate() {
            let v: f64 = l.trim().parse().map_err(|_| err(ln + 1, "malformed value"))?;
            let &(i, j) = slots.get(k).ok_or_else(|| err(ln + 1, "too many values"))?;
            triplets.push((i, j, v));
            if i != j && symmetry == Symmetry::Symmetric {
                triplets.push((j, i, v));
            }
            count = k + 1;
        }
        if count != slots.len() {
            return Err(err(
                size_line + 1,
                &format!("expected {} values, found {count}", slots.len()),
            ));
        }
        return Ok(CsrMatrix::from_triplets(nr, nc, triplets));
    }
    if dims.len() != 3 {
        return Err(err(size_line + 1, "coordinate size line needs rows, columns, entries"));
    }
    let (nr, nc, nnz) = (dims[0], dims[1], dims[2]);
    let mut count = 0;
    for (ln, l) in data {
        let mut w = l.split_whitespace();
        let (Some(i), Some(j), Some(v)) = (w.next(), w.next(), w.next()) else {
            return Err(err(ln + 1, "expected 'row col value'"));
        };
        let i: usize = i.parse().map_err(|_| err(ln + 1, "malformed row index"))?;
        let j: usize = j.parse().map_err(|_| err(ln + 1, "malformed column index"))?;
        let v: f64 = v.parse().map_err(|_| err(ln + 1, "malformed value"))?;
        if i == 0 || j == 0 || i > nr || j > nc {
            return Err(err(ln + 1, "index out of range"));
        }
        triplets.push((i - 1, j - 1, v));
        if symmetry == Symmetry::Symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
        count += 1;
    }
    if count != nnz {
        return Err(err(
            size_line + 1,
            &format!("header announces {nnz} entries, found {count}"),
        ));
    }
    Ok(CsrMatrix::from_triplets(nr, nc, triplets))
}

pub fn read_matrix_market(path: &Path) -> Result<CsrMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| KmsError::io(path, e))?;
    parse_matrix_market(&text, &path.display().to_string())
}

pub fn read_dense(path: &Path) -> Result<DMatrix<f64>> {
    Ok(read_matrix_market(path)?.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn array_storage() {
        let g = parse_matrix_market("%%MatrixMarket matrix array real general\n2 3\n1\n2\n3\n4\n5\n6\n", "g").unwrap();
        assert_eq!(
            g.to_dense(),
            DMatrix::from_row_slice(2, 3, &[1.0, 3.0, 5.0, 2.0, 4.0, 6.0])
        );
        let s = parse_matrix_market("%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n", "s").unwrap();
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]));
        let short = parse_matrix_market("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n", "short");
        assert!(short.unwrap_err().to_string().contains("expected 4 values"));
        assert!(parse_matrix_market("%%MatrixMarket matrix array real general\n1 1\n1\n2\n", "long").is_err());
    }

    #[test]
    fn symmetric_storage_expands_lower_triangle() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 2.0\n2 1 -1\n3 3 4e0\n";
        let m = parse_matrix_market(text, "t").unwrap();
        assert_eq!(m.get(0, 1), -1.0);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.get(2, 2), 4.0);
    }

    #[test]
    fn array_format_is_column_major() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        let m = parse_matrix_market(text, "t").unwrap();
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(0, 1), 3.0);
    }

    #[test]
    fn malformed_input_reports_line() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n3 1 1.0\n";
        match parse_matrix_market(text, "bad.mtx") {
            Err(KmsError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n";
        assert!(parse_matrix_market(short, "t").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            vals in proptest::collection::vec((0usize..6, 0usize..5, any::<f64>().prop_filter("finite", |v| v.is_finite())), 0..30)
        ) {
            let m = CsrMatrix::from_triplets(6, 5, vals);
            let back = parse_matrix_market(&format_matrix_market(&m, Symmetry::General), "t").unwrap();
            prop_assert_eq!(m.nrows(), back.nrows());
            for (i, j, v) in m.triplets() {
                prop_assert_eq!(v.to_bits(), back.get(i, j).to_bits());
            }
        }
    }
}
