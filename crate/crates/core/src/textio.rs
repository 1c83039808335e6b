//! Small helpers for the CSV and key-value text outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a value in fixed decimal notation with at least nine significant
/// digits.
pub fn fmt_fixed(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let decimals = if x == 0.0 {
        9
    } else {
        let mag = x.abs().log10().floor() as i32;
        (9 - mag).clamp(9, 24) as usize
    };
    format!("{x:.decimals$}")
}

/// Renders a CSV table with a header line and fixed-notation cells.
pub fn csv_table<'a>(header: &str, rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut out = String::with_capacity(256);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&fmt_fixed(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses a CSV table whose header must equal `header`.
pub fn parse_csv(text: &str, header: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))?;
    if first.trim() != header {
        return Err(Error::Format(format!(
            "unexpected CSV header `{}`, expected `{header}`",
            first.trim()
        )));
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", n + 2)))?;
        if row.len() != width {
            return Err(Error::Format(format!(
                "line {}: {} columns, expected {width}",
                n + 2,
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Flat `key=value` text with keys in the given order.
pub fn key_values(entries: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_notation_keeps_nine_significant_digits() {
        assert_eq!(fmt_fixed(1.0), "1.000000000");
        assert_eq!(fmt_fixed(-0.00123456789), "-0.001234567890");
        assert_eq!(fmt_fixed(12345.678), "12345.678000000");
        assert!(!fmt_fixed(1e-7).contains('e'));
        for v in [1.23456789012, 1.0e-5 / 3.0, 98765.4321] {
            let back: f64 = fmt_fixed(v).parse().unwrap();
            assert!(((back - v) / v).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_header_is_checked() {
        let t = csv_table("a,b", [[1.0, 2.0].as_slice()]);
        assert_eq!(parse_csv(&t, "a,b").unwrap(), vec![vec![1.0, 2.0]]);
        assert!(parse_csv(&t, "a,c").is_err());
    }
}
