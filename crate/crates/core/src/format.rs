//! Number formatting and small CSV helpers shared by every report.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a
//! value back yields the identical bit pattern and re-emitting a parsed
//! file reproduces it byte for byte.

use crate::{Error, Result};

/// Shortest decimal string that parses back to exactly `x`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("{what}: cannot parse {field:?} as a number ({e})")))
}

/// Splits CSV text into a header and data rows, checking the header.
pub fn split_csv<'a>(text: &'a str, expected_header: &str) -> Result<Vec<Vec<&'a str>>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV input".into()))?;
    if header.trim() != expected_header {
        return Err(Error::Parse(format!(
            "unexpected CSV header {header:?}, expected {expected_header:?}"
        )));
    }
    let ncols = expected_header.split(',').count();
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != ncols {
                return Err(Error::Parse(format!(
                    "row {}: expected {ncols} fields, got {}",
                    i + 1,
                    fields.len()
                )));
            }
            Ok(fields)
        })
        .collect()
}
