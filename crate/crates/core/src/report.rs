//! Margin bookkeeping shared by every verification campaign.

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Relative slack granted to an inequality before it counts as violated.
pub const ROUNDING_SLACK: f64 = 1e-12;

/// Violations stored verbatim per report; the rest are only counted.
pub const MAX_STORED_VIOLATIONS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub location: Value,
    pub margin: f64,
}

/// Outcome of one grid campaign over a single inequality family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma_id: String,
    pub grid_spec: Value,
    /// Smallest `rhs - lhs` seen; `+inf` serialises as `null` when nothing was checked.
    pub worst_margin: Option<f64>,
    pub argmin_location: Value,
    pub checks: u64,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Combines sub-reports under a new id; worst margin and violations are pooled.
    pub fn combine(lemma_id: &str, grid_spec: Value, parts: Vec<LemmaReport>) -> LemmaReport {
        let mut acc = MarginAccumulator::default();
        let mut notes = Vec::new();
        for part in parts {
            notes.extend(part.notes.iter().map(|n| format!("{}: {n}", part.lemma_id)));
            let tagged = |loc: &Value| serde_json::json!({ "check": part.lemma_id, "at": loc });
            let sub = MarginAccumulator {
                checks: part.checks,
                worst: part.worst_margin.unwrap_or(f64::INFINITY),
                argmin: if part.worst_margin.is_some() { tagged(&part.argmin_location) } else { Value::Null },
                violation_count: part.violation_count,
                violations: part
                    .violations
                    .iter()
                    .map(|v| Violation { location: tagged(&v.location), margin: v.margin })
                    .collect(),
            };
            acc.merge(sub);
        }
        let mut report = acc.into_report(lemma_id, grid_spec);
        report.notes = notes;
        report
    }
}

/// Running minimum of margins plus the list of violations, mergeable in shard order.
#[derive(Clone, Debug)]
pub struct MarginAccumulator {
    pub checks: u64,
    pub worst: f64,
    pub argmin: Value,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
}

impl Default for MarginAccumulator {
    fn default() -> Self {
        Self { checks: 0, worst: f64::INFINITY, argmin: Value::Null, violation_count: 0, violations: Vec::new() }
    }
}

/// Whether `margin = rhs - lhs` is negative beyond rounding.
pub fn is_violation(margin: f64, lhs: f64, rhs: f64) -> bool {
    margin.is_nan() || margin < -ROUNDING_SLACK * 1f64.max(lhs.abs()).max(rhs.abs())
}

impl MarginAccumulator {
    /// Records `lhs <= rhs`.
    pub fn bound(&mut self, lhs: f64, rhs: f64, location: impl FnOnce() -> Value) {
        let margin = rhs - lhs;
        self.margin(margin, is_violation(margin, lhs, rhs), location);
    }

    /// Records a precomputed margin with an explicit violation verdict.
    pub fn margin(&mut self, margin: f64, violated: bool, location: impl FnOnce() -> Value) {
        self.checks += 1;
        let new_worst = margin < self.worst || (margin.is_nan() && !self.worst.is_nan());
        if !(new_worst || violated) {
            return;
        }
        let loc = location();
        if violated {
            self.violation_count += 1;
            if self.violations.len() < MAX_STORED_VIOLATIONS {
                self.violations.push(Violation { location: loc.clone(), margin });
            }
        }
        if new_worst {
            self.worst = margin;
            self.argmin = loc;
        }
    }

    /// Folds a later shard into this one; ties keep the earlier location.
    pub fn merge(&mut self, other: MarginAccumulator) {
        self.checks += other.checks;
        if other.worst < self.worst || (other.worst.is_nan() && !self.worst.is_nan()) {
            self.worst = other.worst;
            self.argmin = other.argmin;
        }
        self.violation_count += other.violation_count;
        let room = MAX_STORED_VIOLATIONS.saturating_sub(self.violations.len());
        self.violations.extend(other.violations.into_iter().take(room));
    }

    pub fn merged(shards: impl IntoIterator<Item = MarginAccumulator>) -> MarginAccumulator {
        let mut acc = MarginAccumulator::default();
        for s in shards {
            acc.merge(s);
        }
        acc
    }

    pub fn into_report(self, lemma_id: &str, grid_spec: Value) -> LemmaReport {
        LemmaReport {
            lemma_id: lemma_id.to_string(),
            grid_spec,
            worst_margin: if self.checks == 0 { None } else { Some(self.worst) },
            argmin_location: self.argmin,
            checks: self.checks,
            violation_count: self.violation_count,
            violations: self.violations,
            notes: Vec::new(),
            wall_time_ms: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounding_sized_deficits_are_tolerated() {
        assert!(!is_violation(-1e-13, 1.0, 1.0));
        assert!(is_violation(-1e-10, 1.0, 1.0));
        assert!(!is_violation(-1e-4, 1e9, 1e9));
        assert!(is_violation(f64::NAN, 0.0, 0.0));
    }

    #[test]
    fn merge_is_order_stable() {
        let mut a = MarginAccumulator::default();
        a.bound(1.0, 2.0, || json!(0));
        let mut b = MarginAccumulator::default();
        b.bound(1.0, 2.0, || json!(1));
        b.bound(3.0, 2.0, || json!(2));
        let merged = MarginAccumulator::merged([a, b]);
        assert_eq!(merged.checks, 3);
        assert_eq!(merged.worst, -1.0);
        assert_eq!(merged.argmin, json!(2));
        assert_eq!(merged.violation_count, 1);
        let report = merged.into_report("x", json!({}));
        assert!(!report.passed());
    }

    #[test]
    fn ties_keep_first_location() {
        let mut a = MarginAccumulator::default();
        a.bound(0.0, 1.0, || json!("first"));
        a.bound(0.0, 1.0, || json!("second"));
        assert_eq!(a.argmin, json!("first"));
    }
}
