//! Plain value-plus-verdict reports, rendered by the CLI without any
//! scenario-specific logic.

use num_complex::Complex64;
use serde::Serialize;

use crate::engine::ProbabilityLedger;
use crate::optics::{CouplingMode, CALIBRATION_ID};
use crate::trace::TraceReport;

/// A reported number or flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Quantity {
    Real(f64),
    Complex { re: f64, im: f64 },
    Flag(bool),
    Label(String),
}

impl From<f64> for Quantity {
    fn from(x: f64) -> Self {
        Quantity::Real(x)
    }
}

impl From<Complex64> for Quantity {
    fn from(z: Complex64) -> Self {
        Quantity::Complex { re: z.re, im: z.im }
    }
}

impl From<bool> for Quantity {
    fn from(b: bool) -> Self {
        Quantity::Flag(b)
    }
}

impl From<&str> for Quantity {
    fn from(s: &str) -> Self {
        Quantity::Label(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// |value − expected| ≤ tolerance.
    Equal,
    /// value ≤ expected + tolerance.
    AtMost,
    /// value ≥ expected − tolerance.
    AtLeast,
}

/// One pinned assertion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Quantity,
    pub expected: Quantity,
    pub comparison: Comparison,
    pub tolerance: f64,
    /// `dimensionless`, `epsilon` (coefficients in units of ε) or `flag`.
    pub units: String,
    pub passed: bool,
}

impl Check {
    fn numeric(name: &str, value: f64, expected: f64, comparison: Comparison, tolerance: f64, units: &str) -> Self {
        let passed = match comparison {
            Comparison::Equal => (value - expected).abs() <= tolerance,
            Comparison::AtMost => value <= expected + tolerance,
            Comparison::AtLeast => value >= expected - tolerance,
        };
        Check {
            name: name.to_string(),
            value: value.into(),
            expected: expected.into(),
            comparison,
            tolerance,
            units: units.to_string(),
            passed,
        }
    }

    pub fn real(name: &str, value: f64, expected: f64, tolerance: f64, units: &str) -> Self {
        Self::numeric(name, value, expected, Comparison::Equal, tolerance, units)
    }

    pub fn at_most(name: &str, value: f64, bound: f64, units: &str) -> Self {
        Self::numeric(name, value, bound, Comparison::AtMost, 0.0, units)
    }

    pub fn at_least(name: &str, value: f64, bound: f64, units: &str) -> Self {
        Self::numeric(name, value, bound, Comparison::AtLeast, 0.0, units)
    }

    pub fn complex(name: &str, value: Complex64, expected: Complex64, tolerance: f64, units: &str) -> Self {
        Check {
            name: name.to_string(),
            value: value.into(),
            expected: expected.into(),
            comparison: Comparison::Equal,
            tolerance,
            units: units.to_string(),
            passed: (value - expected).norm() <= tolerance,
        }
    }

    pub fn flag(name: &str, value: bool, expected: bool) -> Self {
        Check {
            name: name.to_string(),
            value: value.into(),
            expected: expected.into(),
            comparison: Comparison::Equal,
            tolerance: 0.0,
            units: "flag".into(),
            passed: value == expected,
        }
    }

    pub fn label(name: &str, value: &str, expected: &str) -> Self {
        Check {
            name: name.to_string(),
            value: value.into(),
            expected: expected.into(),
            comparison: Comparison::Equal,
            tolerance: 0.0,
            units: "label".into(),
            passed: value == expected,
        }
    }

    /// A check that could not be evaluated because the computation failed.
    pub fn failed(name: &str, reason: &str) -> Self {
        Check {
            name: name.to_string(),
            value: Quantity::Label(format!("error: {reason}")),
            expected: Quantity::Label("a value".into()),
            comparison: Comparison::Equal,
            tolerance: 0.0,
            units: "label".into(),
            passed: false,
        }
    }
}

/// A weak value labeled by time point, projector and postselection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakValueRecord {
    pub time: String,
    pub projector: String,
    pub postselection: String,
    pub value: Quantity,
}

impl WeakValueRecord {
    pub fn new(time: &str, projector: &str, postselection: &str, value: Complex64) -> Self {
        WeakValueRecord {
            time: time.to_string(),
            projector: projector.to_string(),
            postselection: postselection.to_string(),
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityRecord {
    pub outcome: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRecord {
    pub postselection: String,
    pub ledger: ProbabilityLedger,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub title: String,
    pub scenario: String,
    pub calibration: String,
    pub epsilon: f64,
    pub mode: CouplingMode,
    pub checks: Vec<Check>,
    pub weak_values: Vec<WeakValueRecord>,
    pub probabilities: Vec<ProbabilityRecord>,
    pub traces: Vec<TraceReport>,
    pub ledgers: Vec<LedgerRecord>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(scenario: &str, title: &str, epsilon: f64, mode: CouplingMode) -> Self {
        Report {
            title: title.to_string(),
            scenario: scenario.to_string(),
            calibration: CALIBRATION_ID.to_string(),
            epsilon,
            mode,
            checks: Vec::new(),
            weak_values: Vec::new(),
            probabilities: Vec::new(),
            traces: Vec::new(),
            ledgers: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub(crate) fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub(crate) fn probability(&mut self, outcome: &str, probability: f64) {
        self.probabilities.push(ProbabilityRecord { outcome: outcome.to_string(), probability });
    }

    pub(crate) fn ledger(&mut self, postselection: &str, ledger: ProbabilityLedger) {
        self.ledgers.push(LedgerRecord { postselection: postselection.to_string(), ledger });
    }
}
