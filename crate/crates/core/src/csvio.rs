//! Headerless comma-separated matrices, one row per line.
//!
//! Numbers are written with 17 significant digits so every `f64`
//! round-trips exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Formats like C's `%.17g`.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_matrix<W: Write>(mut w: W, m: &Matrix) -> Result<()> {
    let mut line = String::new();
    for i in 0..m.rows() {
        line.clear();
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&fmt_num(*v));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn matrix_to_string(m: &Matrix) -> String {
    let mut buf = Vec::new();
    write_matrix(&mut buf, m).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Reads a matrix; blank lines are ignored, ragged rows are an error.
pub fn read_matrix<R: Read>(r: R) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let row = line
            .split(',')
            .map(|field| {
                let field = field.trim();
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Csv {
                        line: lineno,
                        msg: format!("cannot parse {field:?} as a finite number"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Csv {
                    line: lineno,
                    msg: format!("{} fields, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Csv {
            line: 0,
            msg: "no data rows".into(),
        });
    }
    Matrix::from_rows(&rows)
}

pub fn read_matrix_file(path: &Path) -> Result<Matrix> {
    read_matrix(File::open(path)?)
}

pub fn write_matrix_file(path: &Path, m: &Matrix) -> Result<()> {
    write_matrix(BufWriter::new(File::create(path)?), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats_like_printf_g17() {
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(0.1), "0.10000000000000001");
        assert_eq!(fmt_num(1e-7), "9.9999999999999995e-08");
        assert_eq!(fmt_num(1e20), "1e+20");
        assert_eq!(fmt_num(123456.0), "123456");
    }

    #[test]
    fn rejects_malformed_input() {
        let err = read_matrix("1,2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 2, .. }));
        let err = read_matrix("1,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 1, .. }));
        assert!(read_matrix("".as_bytes()).is_err());
        assert!(read_matrix("nan,1\n".as_bytes()).is_err());
    }

    #[test]
    fn tolerates_blank_lines_and_spaces() {
        let m = read_matrix("1, 2\n\n3,4\n\n".as_bytes()).unwrap();
        assert_eq!(m, Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
    }

    proptest! {
        #[test]
        fn csv_round_trips_bitwise(vals in proptest::collection::vec(-1e300f64..1e300, 1..24), cols in 1usize..5) {
            let rows = vals.len() / cols;
            prop_assume!(rows > 0);
            let m = Matrix::new(rows, cols, vals[..rows * cols].to_vec()).unwrap();
            let back = read_matrix(matrix_to_string(&m).as_bytes()).unwrap();
            prop_assert_eq!(back, m);
        }

        #[test]
        fn fmt_num_round_trips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            prop_assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }
}
