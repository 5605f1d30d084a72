//! Byte-stable CSV and JSON output.
//!
//! Floats are written with 17 significant digits in scientific notation
//! (`6.5312345678901234e-4`), `.` as decimal separator and `\n` line endings.

use std::io::Write;

use serde::{Serialize, Serializer};

use crate::cube::GraphParams;
use crate::error::{Error, Result};
use crate::mc::{Backend, Estimate};

/// 17 significant digits; non-finite values are spelled `nan`/`inf`/`-inf`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Serialises an `f64` as a JSON number with 17 significant digits
/// (`null` when not finite).
pub fn float17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    let number: serde_json::Number = fmt_float(*x)
        .parse()
        .map_err(|e| serde::ser::Error::custom(format!("float formatting: {e}")))?;
    number.serialize(s)
}

pub fn float17_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => float17(v, s),
        None => s.serialize_none(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Unsupported(format!("json serialisation failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub const ESTIMATE_COLUMNS: [&str; 11] = [
    "n", "k", "r", "backend", "p", "trials", "successes", "point", "ci_low", "ci_high", "seed",
];

/// One CSV row of the estimate table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRow {
    pub params: GraphParams,
    pub backend: Backend,
    pub seed: u64,
    pub estimate: Estimate,
}

impl EstimateRow {
    pub fn fields(&self) -> [String; 11] {
        let e = &self.estimate;
        [
            self.params.n.to_string(),
            self.params.k.to_string(),
            self.params.r.to_string(),
            self.backend.as_str().to_string(),
            fmt_float(e.p),
            e.trials.to_string(),
            e.successes.to_string(),
            fmt_float(e.point),
            fmt_float(e.ci_low),
            fmt_float(e.ci_high),
            self.seed.to_string(),
        ]
    }
}

/// Writes a header line and one line per row.
pub fn write_csv<W: Write, R: AsRef<[String]>>(out: W, header: &[&str], rows: &[R]) -> Result<()> {
    let io_err = |e: csv::Error| Error::Unsupported(format!("csv write failed: {e}"));
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(header).map_err(io_err)?;
    for row in rows {
        writer.write_record(row.as_ref()).map_err(io_err)?;
    }
    writer
        .flush()
        .map_err(|e| Error::Unsupported(format!("csv flush failed: {e}")))?;
    Ok(())
}

pub fn estimates_csv(rows: &[EstimateRow]) -> Result<String> {
    let lines: Vec<[String; 11]> = rows.iter().map(EstimateRow::fields).collect();
    let mut buf = Vec::new();
    write_csv(&mut buf, &ESTIMATE_COLUMNS, &lines)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_fixed() {
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
        assert_eq!(fmt_float(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
    }

    #[test]
    fn empty_table_is_header_only() {
        let text = estimates_csv(&[]).unwrap();
        assert_eq!(text, "n,k,r,backend,p,trials,successes,point,ci_low,ci_high,seed\n");
    }

    #[test]
    fn estimate_row_has_eleven_columns() {
        let row = EstimateRow {
            params: GraphParams::new(12, 2, 2).unwrap(),
            backend: Backend::Oracle,
            seed: 7,
            estimate: Estimate::from_counts(0.25, 10, 4),
        };
        let text = estimates_csv(&[row, row]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 11);
        assert!(lines[1].starts_with("12,2,2,oracle,2.5000000000000000e-1,10,4,4.0000000000000002e-1,"));
        assert_eq!(lines[1], lines[2]);
    }

    #[test]
    fn json_floats_use_fixed_digits() {
        let e = Estimate::from_counts(0.125, 8, 8);
        let text = to_json(&e).unwrap();
        assert!(text.contains("\"p\": 1.2500000000000000e-1"), "{text}");
        assert!(text.contains("\"point\": 1.0000000000000000e+0"), "{text}");
        assert!(text.ends_with("}\n"));
    }
}
