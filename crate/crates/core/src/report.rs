//! Sampled verdicts shared by the Jordan and preserver harnesses.

use serde::Serialize;

use crate::matalg::CMatrix;

/// Witnesses kept per verdict.
pub const MAX_WITNESSES: usize = 3;

/// A concrete input on which a property failed.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub label: String,
    pub inputs: Vec<CMatrix>,
    pub outputs: Vec<CMatrix>,
    pub discrepancy: f64,
}

/// Outcome of a sampled property check.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub checked: usize,
    pub failures: usize,
    /// Whether the tolerance bounds values from above or from below.
    pub bound: Bound,
    /// Extreme value seen in the failing direction (finite values only).
    pub worst: Option<f64>,
    pub tolerance: f64,
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// Values must not exceed the tolerance.
    Upper,
    /// Values must exceed the tolerance.
    Lower,
}

/// One evaluated check before it is folded into a [`Verdict`].
#[derive(Clone, Debug)]
pub struct Check {
    pub discrepancy: f64,
    pub failed: bool,
    pub witness: Option<Witness>,
}

impl Check {
    /// Fails when `discrepancy > tol` (or is not a number). The witness
    /// closure only runs on failure.
    pub fn above(discrepancy: f64, tol: f64, witness: impl FnOnce() -> Witness) -> Self {
        let failed = discrepancy.is_nan() || discrepancy > tol;
        Check { discrepancy, failed, witness: failed.then(|| Witness { discrepancy, ..witness() }) }
    }

    /// Fails when `value <= tol`: used for separation checks where small
    /// values are bad.
    pub fn below(value: f64, tol: f64, witness: impl FnOnce() -> Witness) -> Self {
        let failed = value.is_nan() || value <= tol;
        Check { discrepancy: value, failed, witness: failed.then(|| Witness { discrepancy: value, ..witness() }) }
    }
}

impl Verdict {
    /// Verdict for discrepancies that must stay at or below `tolerance`.
    pub fn new(tolerance: f64) -> Self {
        Verdict { passed: true, checked: 0, failures: 0, bound: Bound::Upper, worst: None, tolerance, witnesses: Vec::new() }
    }

    /// Verdict for separations that must stay above `tolerance`.
    pub fn lower(tolerance: f64) -> Self {
        Verdict { bound: Bound::Lower, ..Verdict::new(tolerance) }
    }

    pub fn record(&mut self, check: Check) {
        self.checked += 1;
        let v = check.discrepancy;
        if v.is_finite() {
            self.worst = Some(match (self.worst, self.bound) {
                (None, _) => v,
                (Some(w), Bound::Upper) => w.max(v),
                (Some(w), Bound::Lower) => w.min(v),
            });
        }
        if check.failed {
            self.failures += 1;
            self.passed = false;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.extend(check.witness);
            }
        }
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        for c in checks {
            self.record(c);
        }
    }
}

pub fn witness(label: &str, inputs: Vec<CMatrix>, outputs: Vec<CMatrix>) -> Witness {
    Witness { label: label.to_string(), inputs, outputs, discrepancy: f64::NAN }
}

/// `‖a − b‖_F / max(1, scale)`.
pub fn relative_gap(a: &CMatrix, b: &CMatrix, scale: f64) -> f64 {
    (a - b).frobenius_norm() / scale.max(1.0)
}
