//! Matrix input in JSON and CSV form.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::minors::RationalMatrix;
use crate::rational::{format_rational, parse_rational, Rational};

fn cell(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) => parse_rational(&n.to_string()),
        other => Err(Error::Parse(format!(
            "matrix entry must be a string or number, got {other}"
        ))),
    }
}

/// Accepts `[[..], ..]` or `{"rows": [[..], ..]}` with entries given as
/// `"p/q"` strings or JSON numbers.
pub fn parse_matrix_json(s: &str) -> Result<RationalMatrix> {
    let v: Value = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    let rows = match &v {
        Value::Array(_) => &v,
        Value::Object(o) => o
            .get("rows")
            .ok_or_else(|| Error::Parse("matrix object needs a \"rows\" field".into()))?,
        _ => return Err(Error::Parse("matrix JSON must be an array of rows".into())),
    };
    let rows = rows
        .as_array()
        .ok_or_else(|| Error::Parse("\"rows\" must be an array".into()))?
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Error::Parse("each row must be an array".into()))?
                .iter()
                .map(cell)
                .collect()
        })
        .collect::<Result<Vec<Vec<Rational>>>>()?;
    RationalMatrix::from_rows(rows)
}

/// Comma-separated decimals, one row per line; blank lines and `#` comments
/// are skipped.
pub fn parse_matrix_csv(s: &str) -> Result<RationalMatrix> {
    let rows = s
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split(',').map(parse_rational).collect())
        .collect::<Result<Vec<Vec<Rational>>>>()?;
    RationalMatrix::from_rows(rows)
}

pub fn read_matrix(path: &Path) -> Result<RationalMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv || !text.trim_start().starts_with(['[', '{']) {
        parse_matrix_csv(&text)
    } else {
        parse_matrix_json(&text)
    }
}

pub fn matrix_to_json(a: &RationalMatrix) -> Value {
    Value::Array(
        a.rows()
            .iter()
            .map(|r| {
                Value::Array(
                    r.iter()
                        .map(|x| Value::String(format_rational(x)))
                        .collect(),
                )
            })
            .collect(),
    )
}
