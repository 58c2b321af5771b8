//! Measure files.
//!
//! CSV: a header line `dim=<d>,n=<n>` followed by one row per point,
//! `x_1,...,x_d,weight`. Blank lines and lines starting with `#` are skipped.
//! JSON: `{"dim": d, "n": n, "points": [[...], ...], "weights": [...]}`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::WeightedPointMeasure;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct MeasureJson {
    dim: usize,
    n: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line_no: usize, line: &str) -> Result<(usize, usize)> {
    let mut dim = None;
    let mut n = None;
    for field in line.split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, format!("expected `key=value` in header, got `{field}`")))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("invalid integer `{}`", value.trim())))?;
        match key.trim() {
            "dim" | "d" => dim = Some(value),
            "n" => n = Some(value),
            other => return Err(parse_err(line_no, format!("unknown header key `{other}`"))),
        }
    }
    match (dim, n) {
        (Some(d), Some(n)) => Ok((d, n)),
        _ => Err(parse_err(line_no, "header must define both `dim` and `n`")),
    }
}

/// Parses the CSV measure format.
pub fn parse_csv(text: &str) -> Result<WeightedPointMeasure> {
    let mut header = None;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (dim, _) = match header {
            None => {
                header = Some(parse_header(line_no, line)?);
                continue;
            }
            Some(h) => h,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(parse_err(
                line_no,
                format!("expected {} fields, found {}", dim + 1, fields.len()),
            ));
        }
        for f in &fields[..dim] {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(line_no, format!("invalid number `{f}`")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite coordinate `{f}`")));
            }
            coords.push(v);
        }
        let w: f64 = fields[dim]
            .parse()
            .map_err(|_| parse_err(line_no, format!("invalid weight `{}`", fields[dim])))?;
        if !w.is_finite() || w <= 0.0 {
            return Err(parse_err(line_no, format!("weight must be positive and finite, got `{}`", fields[dim])));
        }
        weights.push(w);
    }
    let (dim, n) = header.ok_or(Error::EmptyMeasure)?;
    if weights.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    WeightedPointMeasure::from_flat(dim, n, coords, weights)
}

/// Parses the JSON measure format.
pub fn parse_json(text: &str) -> Result<WeightedPointMeasure> {
    let m: MeasureJson = serde_json::from_str(text)?;
    if m.points.len() != m.weights.len() {
        return Err(Error::InvalidParameter(format!(
            "{} points but {} weights",
            m.points.len(),
            m.weights.len()
        )));
    }
    if m.points.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    for (i, (p, w)) in m.points.iter().zip(&m.weights).enumerate() {
        // report the position inside the points array as a 1-based entry number
        if p.iter().any(|c| !c.is_finite()) {
            return Err(parse_err(i + 1, "non-finite coordinate"));
        }
        if !w.is_finite() || *w <= 0.0 {
            return Err(parse_err(i + 1, format!("weight must be positive and finite, got {w}")));
        }
    }
    WeightedPointMeasure::new(m.dim, m.n, &m.points, m.weights)
}

/// Loads a measure, choosing the format from the file extension (`.json` or CSV).
pub fn load(path: &Path) -> Result<WeightedPointMeasure> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        parse_json(&text)
    } else {
        parse_csv(&text)
    }
}

/// CSV text with 17 significant digits, so that reloading is exact.
pub fn to_csv(m: &WeightedPointMeasure) -> String {
    let mut s = format!("dim={},n={}\n", m.dim(), m.n());
    for (i, p) in m.points().enumerate() {
        for c in p {
            write!(s, "{c:.16e},").unwrap();
        }
        writeln!(s, "{:.16e}", m.weight(i)).unwrap();
    }
    s
}

pub fn to_json(m: &WeightedPointMeasure) -> Result<String> {
    let j = MeasureJson {
        dim: m.dim(),
        n: m.n(),
        points: m.points().map(<[f64]>::to_vec).collect(),
        weights: m.weights().to_vec(),
    };
    Ok(serde_json::to_string_pretty(&j)?)
}

pub fn save(m: &WeightedPointMeasure, path: &Path) -> Result<()> {
    let text = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        to_json(m)?
    } else {
        to_csv(m)
    };
    fs::write(path, text)?;
    Ok(())
}
