//! Machine-readable outcomes of individual checks.

use serde::Serialize;

use crate::scalar::serde_q;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    /// Only a finite sample was checked; certification did not complete.
    #[serde(rename = "SAMPLED-ONLY")]
    SampledOnly,
}

impl Status {
    pub fn is_pass(self) -> bool {
        self == Status::Pass
    }

    /// Worst of two statuses: `Fail` over `SampledOnly` over `Pass`.
    pub fn and(self, other: Status) -> Status {
        match (self, other) {
            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
            (Status::SampledOnly, _) | (_, Status::SampledOnly) => Status::SampledOnly,
            _ => Status::Pass,
        }
    }
}

/// Concrete evidence attached to a failed check.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `v^T M v < 0` for block `block`.
    Vector {
        block: usize,
        #[serde(with = "serde_q::vec")]
        vector: Vec<Rational>,
        #[serde(with = "serde_q")]
        value: Rational,
    },
    Asymmetry {
        block: usize,
        row: usize,
        col: usize,
    },
    /// A point and the offending value there.
    Point {
        #[serde(with = "serde_q::vec")]
        point: Vec<Rational>,
        #[serde(with = "serde_q")]
        value: Rational,
    },
    Coefficient {
        monomial: String,
        #[serde(with = "serde_q")]
        expected: Rational,
        #[serde(with = "serde_q")]
        found: Rational,
    },
    Region {
        #[serde(with = "serde_q::vec")]
        lo: Vec<Rational>,
        #[serde(with = "serde_q::vec")]
        hi: Vec<Rational>,
    },
    /// Two distinct solutions of a system that should determine its unknowns.
    Ambiguity {
        #[serde(with = "serde_q::vec")]
        solution: Vec<Rational>,
        #[serde(with = "serde_q::vec")]
        direction: Vec<Rational>,
    },
    Message {
        text: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub status: Status,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn pass(check: &str, detail: impl Into<String>) -> Self {
        Verdict { check: check.into(), status: Status::Pass, detail: detail.into(), witness: None }
    }

    pub fn fail(check: &str, detail: impl Into<String>, witness: Option<Witness>) -> Self {
        Verdict { check: check.into(), status: Status::Fail, detail: detail.into(), witness }
    }

    pub fn passed(&self) -> bool {
        self.status.is_pass()
    }
}
