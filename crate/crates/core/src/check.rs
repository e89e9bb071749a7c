//! Pass/fail bookkeeping shared by the inequality checkers.

use std::fmt;

/// Outcome of a batch of inequality checks. Each check contributes a margin
/// that should be non-negative; it is a violation below `-slack`.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub slack: f64,
    pub checks: usize,
    pub violations: usize,
    pub worst_margin: f64,
    /// Description of the case achieving the worst margin.
    pub witness: String,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, slack: f64) -> Self {
        CheckReport {
            name: name.into(),
            slack,
            checks: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            witness: String::new(),
        }
    }

    pub fn record(&mut self, margin: f64, witness: impl FnOnce() -> String) {
        self.checks += 1;
        if margin.is_nan() || margin < -self.slack {
            self.violations += 1;
        }
        if margin.is_nan() || margin < self.worst_margin {
            self.worst_margin = margin;
            self.witness = witness();
        }
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.checks += other.checks;
        self.violations += other.violations;
        if other.worst_margin < self.worst_margin || other.worst_margin.is_nan() {
            self.worst_margin = other.worst_margin;
            self.witness = other.witness;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} checks, {} violations, worst margin {:.3e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checks,
            self.violations,
            self.worst_margin
        )?;
        if !self.witness.is_empty() {
            write!(f, " at {}", self.witness)?;
        }
        Ok(())
    }
}
