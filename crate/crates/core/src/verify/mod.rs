//! Numerical checks of the operator inequalities, the capacity lower bound,
//! and the JSON report and regression baseline they are written to.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::measure::WeightedPointMeasure;

pub mod capacity;
pub mod checks;
pub mod geometry;

pub use capacity::{capacity_lower_bound, CapacityBound};
pub use checks::{
    cotlar_check, main_lemma_check, pointwise_domination_check, suppressed_bound_check, suppression_lemma_check,
    t1_ball_check,
};
pub use geometry::{tree_geometry_audit, TreeGeometryAudit};

pub const SCHEMA_VERSION: u32 = 1;

/// One measured inequality `lhs ≤ C·rhs`; `ratio` is the empirical constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub samples: usize,
    /// Everything needed to rerun the check.
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CheckRecord {
    pub fn new(name: &str, lhs: f64, rhs: f64, samples: usize) -> Self {
        CheckRecord {
            name: name.to_string(),
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            samples,
            params: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn with_param<V: Into<Value>>(mut self, key: &str, value: V) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

/// `lhs/rhs`, with `0/0 = 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDescriptor {
    pub source: String,
    pub dim: usize,
    pub n: usize,
    pub points: usize,
    pub total_mass: f64,
    pub r_min: f64,
    pub diameter: f64,
}

impl InputDescriptor {
    pub fn of(source: &str, mu: &WeightedPointMeasure) -> Self {
        InputDescriptor {
            source: source.to_string(),
            dim: mu.dim(),
            n: mu.n(),
            points: mu.len(),
            total_mass: mu.total_mass(),
            r_min: mu.r_min(),
            diameter: mu.diameter(),
        }
    }
}

/// Result of comparing one check against its baseline value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub name: String,
    pub expected: f64,
    pub actual: Option<f64>,
    pub rel_tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub command: String,
    pub input: InputDescriptor,
    pub config: BTreeMap<String, Value>,
    pub records: Vec<CheckRecord>,
    /// Structural output of the pipeline stages (lattice, corona, capacity).
    pub sections: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<Vec<BaselineRow>>,
}

impl AnalysisReport {
    pub fn new(command: &str, input: InputDescriptor) -> Self {
        AnalysisReport {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            input,
            config: BTreeMap::new(),
            records: Vec::new(),
            sections: BTreeMap::new(),
            baseline: None,
        }
    }

    pub fn record(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Compares every baseline entry against the record of the same name and
    /// stores the outcome. Returns whether all entries pass.
    pub fn compare(&mut self, baseline: &Baseline) -> bool {
        let rows: Vec<BaselineRow> = baseline
            .checks
            .iter()
            .map(|b| {
                let actual = self.record(&b.name).map(|r| r.ratio);
                let pass = actual.is_some_and(|a| (a - b.ratio).abs() <= b.rel_tol * b.ratio.abs() + 1e-300);
                BaselineRow {
                    name: b.name.clone(),
                    expected: b.ratio,
                    actual,
                    rel_tol: b.rel_tol,
                    pass,
                }
            })
            .collect();
        let ok = rows.iter().all(|r| r.pass);
        self.baseline = Some(rows);
        ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCheck {
    pub name: String,
    pub ratio: f64,
    pub rel_tol: f64,
}

/// Stored regression values of the check ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub schema_version: u32,
    pub checks: Vec<BaselineCheck>,
}

impl Baseline {
    /// Freezes the ratios of a report with one relative tolerance.
    pub fn from_report(report: &AnalysisReport, rel_tol: f64) -> Self {
        Baseline {
            schema_version: SCHEMA_VERSION,
            checks: report
                .records
                .iter()
                .map(|r| BaselineCheck {
                    name: r.name.clone(),
                    ratio: r.ratio,
                    rel_tol,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `k` distinct indices below `len` (all of them when `k >= len`), ascending.
pub fn sample_indices(len: usize, k: usize, seed: u64) -> Vec<usize> {
    if k >= len {
        return (0..len).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = sample(&mut rng, len, k).into_vec();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_round_trip_and_compare() {
        let mu = crate::generate::segment(5).unwrap();
        let mut report = AnalysisReport::new("verify", InputDescriptor::of("segment", &mu));
        report.records.push(CheckRecord::new("a", 1.0, 2.0, 3).with_param("eps", vec![0.1, 0.2]));
        let base = Baseline::from_report(&report, 0.1);
        let back = Baseline::from_json(&base.to_json().unwrap()).unwrap();
        assert_eq!(base, back);
        assert!(report.compare(&back));
        report.records[0].ratio = 0.6;
        assert!(!report.compare(&back));
        let missing = Baseline {
            schema_version: SCHEMA_VERSION,
            checks: vec![BaselineCheck {
                name: "b".into(),
                ratio: 1.0,
                rel_tol: 1.0,
            }],
        };
        assert!(!report.compare(&missing));
        let text = report.to_json().unwrap();
        assert_eq!(AnalysisReport::from_json(&text).unwrap(), report);
    }

    #[test]
    fn sampling_is_seeded() {
        assert_eq!(sample_indices(100, 10, 7), sample_indices(100, 10, 7));
        assert_eq!(sample_indices(5, 10, 7), vec![0, 1, 2, 3, 4]);
        let s = sample_indices(1000, 50, 1);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}
