//! Complex-matrix CSV files.
//!
//! One matrix row per line, each complex entry written as two adjacent cells
//! `re,im`, so a row of `n` entries has `2n` comma-separated numbers. Lines
//! starting with `#` are comments; the writer emits one header comment with
//! the format version and shape. Values are written with Rust's shortest
//! round-trip float formatting, so a write/read cycle is lossless.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

pub const MATRIX_FORMAT_VERSION: &str = "icefill-cmatrix/1";

pub fn format_matrix(m: &CMat) -> String {
    let mut out = format!(
        "# {MATRIX_FORMAT_VERSION} rows={} cols={}\n",
        m.nrows(),
        m.ncols()
    );
    for r in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols())
            .map(|c| format!("{},{}", m[(r, c)].re, m[(r, c)].im))
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str, origin: &str) -> Result<CMat> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        msg: format!("line {line}: {msg}"),
    };
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| parse_err(no + 1, e.to_string()))?;
        if nums.len() % 2 != 0 {
            return Err(parse_err(no + 1, "odd number of cells; expected re,im pairs".into()));
        }
        let row: Vec<C64> = nums.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(no + 1, "ragged row".into()));
            }
        }
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    Ok(CMat::from_fn(nrows, ncols, |r, c| rows[r][c]))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &CMat) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(format_matrix(m).as_bytes())?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<CMat> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_matrix(&text, &path.display().to_string())
}

/// Stacks vectors as rows (one realization per row).
pub fn rows_to_matrix(rows: &[CVec]) -> CMat {
    let ncols = rows.first().map_or(0, |r| r.len());
    CMat::from_fn(rows.len(), ncols, |r, c| rows[r][c])
}

pub fn matrix_to_rows(m: &CMat) -> Vec<CVec> {
    m.row_iter().map(|r| r.transpose().into_owned()).collect()
}

/// Reads a real spectrum: numbers separated by commas, whitespace or
/// newlines, `#` comments allowed.
pub fn parse_spectrum(text: &str, origin: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            let v = tok.parse::<f64>().map_err(|e| Error::Parse {
                path: origin.to_string(),
                msg: format!("{tok:?}: {e}"),
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    msg: format!("spectrum entries must be finite and nonnegative, got {v}"),
                });
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Error::Parse { path: origin.to_string(), msg: "empty spectrum".into() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_re_im_pairs() {
        let m = CMat::from_row_slice(1, 2, &[C64::new(1.5, -2.0), C64::new(0.0, 3.0)]);
        let text = format_matrix(&m);
        assert_eq!(text.lines().nth(1).unwrap(), "1.5,-2,0,3");
    }

    #[test]
    fn rejects_odd_cells() {
        assert!(parse_matrix("1,2,3\n", "mem").is_err());
        assert!(parse_matrix("1,2\n1,2,3,4\n", "mem").is_err());
    }

    #[test]
    fn spectrum_parsing() {
        assert_eq!(parse_spectrum("2, 1\n# c\n0.5", "mem").unwrap(), vec![2.0, 1.0, 0.5]);
        assert!(parse_spectrum("2, x", "mem").is_err());
        assert!(parse_spectrum("", "mem").is_err());
    }

    proptest! {
        #[test]
        fn matrix_text_round_trip(
            rows in 1usize..5,
            cols in 1usize..5,
            seed in proptest::collection::vec(-1e6f64..1e6, 50),
        ) {
            let m = CMat::from_fn(rows, cols, |r, c| {
                C64::new(seed[(r * 5 + c) % 50], seed[(r * 7 + c * 3 + 11) % 50] * 1e-7)
            });
            let back = parse_matrix(&format_matrix(&m), "mem").unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
