//! Pass/fail reports with signed margins, shared by the certification and
//! monitoring paths.
//!
//! Margins are normalized so that positive means satisfied. Conditions over
//! an empty interval are reported as vacuous rather than silently passing;
//! the distinction matters once the moving window `[A(t), 1]` clips away an
//! interval entirely.

use serde::{Deserialize, Serialize};

/// How a single condition line compares its two sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    /// Strict inequality; margin must be > 0.
    Strict,
    /// Non-strict inequality; margin must be >= 0 (within slack).
    NonStrict,
    /// Equality up to round-off; |margin| must be tiny.
    Equality,
}

/// One checked condition at one time slice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionRecord {
    /// Short identifier, e.g. "omega_below_upper_barrier".
    pub id: String,
    /// Interval of positions the condition was checked on, if any.
    pub interval: Option<(f64, f64)>,
    /// Worst node (the one realizing the margin), if any.
    pub witness_x: Option<f64>,
    /// Signed margin, positive = satisfied.
    pub margin: f64,
    pub sense: Sense,
    pub pass: bool,
    /// True when the interval contained no node to check.
    pub vacuous: bool,
}

impl ConditionRecord {
    pub fn vacuous(id: &str, interval: (f64, f64)) -> Self {
        Self {
            id: id.to_string(),
            interval: Some(interval),
            witness_x: None,
            margin: f64::INFINITY,
            sense: Sense::NonStrict,
            pass: true,
            vacuous: true,
        }
    }

    /// A condition with an explicit margin; `slack` loosens the pass
    /// threshold (used by runtime monitors, zero at certification time).
    pub fn checked(id: &str, sense: Sense, margin: f64, slack: f64) -> Self {
        let pass = match sense {
            Sense::Strict => margin > -slack,
            Sense::NonStrict => margin >= -slack,
            Sense::Equality => margin.abs() <= slack.max(1e-12),
        };
        Self {
            id: id.to_string(),
            interval: None,
            witness_x: None,
            margin,
            sense,
            pass,
            vacuous: false,
        }
    }

    pub fn with_interval(mut self, interval: (f64, f64)) -> Self {
        self.interval = Some(interval);
        self
    }

    pub fn with_witness(mut self, x: f64) -> Self {
        self.witness_x = Some(x);
        self
    }
}

/// Bundle of condition records at one time slice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlReport {
    pub t: f64,
    pub records: Vec<ConditionRecord>,
    pub pass: bool,
}

impl ControlReport {
    pub fn new(t: f64, records: Vec<ConditionRecord>) -> Self {
        let pass = records.iter().all(|r| r.pass);
        Self { t, records, pass }
    }

    /// Smallest margin over non-vacuous records (infinite if all vacuous).
    pub fn worst_margin(&self) -> f64 {
        self.records
            .iter()
            .filter(|r| !r.vacuous)
            .map(|r| r.margin)
            .fold(f64::INFINITY, f64::min)
    }

    /// Record with the given id, if present.
    pub fn record(&self, id: &str) -> Option<&ConditionRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionRecord> {
        self.records.iter().filter(|r| !r.pass)
    }
}

/// Scan `nodes` (position, value, bound) for the worst margin of
/// `value < bound` (upper barrier) in relative terms.
pub(crate) fn worst_upper(it: impl Iterator<Item = (f64, f64, f64)>) -> Option<(f64, f64)> {
    let mut worst: Option<(f64, f64)> = None;
    for (x, value, bound) in it {
        let margin = (bound - value) / bound.abs().max(f64::MIN_POSITIVE);
        if worst.is_none_or(|(_, m)| margin < m) {
            worst = Some((x, margin));
        }
    }
    worst
}

/// Scan `nodes` (position, value, bound) for the worst margin of
/// `value > bound` (lower barrier) in relative terms.
pub(crate) fn worst_lower(it: impl Iterator<Item = (f64, f64, f64)>) -> Option<(f64, f64)> {
    let mut worst: Option<(f64, f64)> = None;
    for (x, value, bound) in it {
        let margin = (value - bound) / bound.abs().max(f64::MIN_POSITIVE);
        if worst.is_none_or(|(_, m)| margin < m) {
            worst = Some((x, margin));
        }
    }
    worst
}
