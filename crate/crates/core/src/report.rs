//! Check records shared by every suite.

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Paper,
    Trivial,
    Derived,
}

/// How `computed` is compared with `expected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|computed − expected| ≤ tolerance`
    Approx,
    /// `computed ≤ expected + tolerance`
    AtMost,
    /// `computed ≥ expected − tolerance`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub paper_ref: String,
    pub computed: f64,
    pub expected: Option<f64>,
    pub tolerance: f64,
    pub relation: Relation,
    pub status: Status,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl CheckReport {
    pub fn approx(id: &str, paper_ref: &str, computed: f64, expected: f64, tolerance: f64, provenance: Provenance) -> Self {
        Self::compare(id, paper_ref, computed, expected, tolerance, Relation::Approx, provenance)
    }

    pub fn at_most(id: &str, paper_ref: &str, computed: f64, bound: f64, tolerance: f64, provenance: Provenance) -> Self {
        Self::compare(id, paper_ref, computed, bound, tolerance, Relation::AtMost, provenance)
    }

    pub fn at_least(id: &str, paper_ref: &str, computed: f64, bound: f64, tolerance: f64, provenance: Provenance) -> Self {
        Self::compare(id, paper_ref, computed, bound, tolerance, Relation::AtLeast, provenance)
    }

    pub fn compare(
        id: &str,
        paper_ref: &str,
        computed: f64,
        expected: f64,
        tolerance: f64,
        relation: Relation,
        provenance: Provenance,
    ) -> Self {
        let mut r = Self {
            check_id: id.to_string(),
            paper_ref: paper_ref.to_string(),
            computed,
            expected: Some(expected),
            tolerance,
            relation,
            status: Status::Fail,
            provenance,
            note: String::new(),
        };
        r.regrade();
        r
    }

    /// Non-gating record of a computed quantity.
    pub fn info(id: &str, paper_ref: &str, computed: f64, provenance: Provenance) -> Self {
        Self {
            check_id: id.to_string(),
            paper_ref: paper_ref.to_string(),
            computed,
            expected: None,
            tolerance: 0.0,
            relation: Relation::Approx,
            status: Status::Info,
            provenance,
            note: String::new(),
        }
    }

    /// A check that could not be evaluated.
    pub fn failed(id: &str, paper_ref: &str, reason: impl Into<String>, provenance: Provenance) -> Self {
        Self {
            check_id: id.to_string(),
            paper_ref: paper_ref.to_string(),
            computed: f64::NAN,
            expected: None,
            tolerance: 0.0,
            relation: Relation::Approx,
            status: Status::Fail,
            provenance,
            note: reason.into(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.regrade();
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn is_gating(&self) -> bool {
        self.status != Status::Info
    }

    fn regrade(&mut self) {
        let Some(e) = self.expected else {
            return;
        };
        let c = self.computed;
        let ok = match self.relation {
            Relation::Approx => (c - e).abs() <= self.tolerance,
            Relation::AtMost => c <= e + self.tolerance,
            Relation::AtLeast => c >= e - self.tolerance,
        };
        self.status = if ok { Status::Pass } else { Status::Fail };
    }
}

pub fn all_passed(reports: &[CheckReport]) -> bool {
    reports.iter().all(CheckReport::passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grading() {
        assert!(CheckReport::approx("x", "", 1.0, 1.0 + 1e-9, 1e-8, Provenance::Trivial).passed());
        assert!(!CheckReport::approx("x", "", 1.0, 1.1, 1e-8, Provenance::Trivial).passed());
        assert!(CheckReport::at_most("x", "", 1.0, 2.0, 0.0, Provenance::Trivial).passed());
        assert!(!CheckReport::at_least("x", "", 1.0, 2.0, 0.0, Provenance::Trivial).passed());
        assert!(!CheckReport::approx("x", "", f64::NAN, 0.0, 1.0, Provenance::Trivial).passed());
        assert!(CheckReport::info("x", "", 3.0, Provenance::Derived).passed());
    }

    #[test]
    fn tolerance_override_regrades() {
        let r = CheckReport::approx("x", "", 1.0, 1.1, 1e-8, Provenance::Derived).with_tolerance(0.2);
        assert_eq!(r.status, Status::Pass);
    }

    #[test]
    fn json_shape() {
        let r = CheckReport::info("x", "ref", 2.0, Provenance::Paper);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["status"], "info");
        assert_eq!(v["provenance"], "paper");
        assert!(v.get("note").is_none());
    }
}
