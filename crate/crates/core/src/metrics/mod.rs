//! Group-fairness ratios and their delta-method intervals.
//!
//! Each metric is a ratio of two conditional rates, written as
//! P(A₀)P(B₁) / (P(A₁)P(B₀)) for events A_s ⊆ B_s restricted to group s:
//!
//! | metric  | A_s                    | B_s            | ratio        |
//! |---------|------------------------|----------------|--------------|
//! | DIA     | g = 1, S = s           | S = s          | positive-rate|
//! | DI_true | Y = 1, S = s           | S = s          | base-rate    |
//! | CA1     | g = 1, Y = 1, S = s    | Y = 1, S = s   | TPR          |
//! | CA0     | g = 0, Y = 0, S = s    | Y = 0, S = s   | TNR          |
//! | CU1     | g = 1, Y = 1, S = s    | g = 1, S = s   | PPV          |
//! | CU0     | g = 0, Y = 0, S = s    | g = 0, S = s   | NPV          |
//!
//! Group S = 0 is the protected group and sits in the numerator.

mod cells;
pub mod closed_form;
mod estimate;
mod pairwise;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cells::{count_cells, CellCounts};
pub use estimate::{
    estimate, estimate_ca, estimate_cu, estimate_di, estimate_di_true, statistical_parity_gap,
    test_disparate_impact, MetricEstimate, DEFAULT_ALPHA, DEFAULT_BETA, SMALL_CELL,
    SMALL_CELL_THRESHOLD,
};
pub use pairwise::{pairwise_audits, MultiGroupRecord};

/// Protected-attribute coding. `Protected` is S = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    Protected = 0,
    Favored = 1,
}

impl Group {
    pub const BOTH: [Group; 2] = [Group::Protected, Group::Favored];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(s: usize) -> Group {
        if s == 0 {
            Group::Protected
        } else {
            Group::Favored
        }
    }

    pub fn other(self) -> Group {
        match self {
            Group::Protected => Group::Favored,
            Group::Favored => Group::Protected,
        }
    }
}

/// One audited individual: the classifier output g(X), the observed label Y
/// (if known) and the protected group S.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub prediction: bool,
    pub label: Option<bool>,
    pub group: Group,
}

impl AuditRecord {
    pub fn new(prediction: bool, label: Option<bool>, group: Group) -> Self {
        AuditRecord {
            prediction,
            label,
            group,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "DIA")]
    Dia,
    #[serde(rename = "DI_true")]
    DiTrue,
    #[serde(rename = "CA1")]
    Ca1,
    #[serde(rename = "CA0")]
    Ca0,
    #[serde(rename = "CU1")]
    Cu1,
    #[serde(rename = "CU0")]
    Cu0,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Dia,
        Metric::DiTrue,
        Metric::Ca1,
        Metric::Ca0,
        Metric::Cu1,
        Metric::Cu0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Dia => "DIA",
            Metric::DiTrue => "DI_true",
            Metric::Ca1 => "CA1",
            Metric::Ca0 => "CA0",
            Metric::Cu1 => "CU1",
            Metric::Cu0 => "CU0",
        }
    }

    pub fn needs_labels(self) -> bool {
        !matches!(self, Metric::Dia)
    }

    /// CA and CU metrics, whose covariance is the nested-indicator form.
    pub fn is_conditional(self) -> bool {
        matches!(self, Metric::Ca1 | Metric::Ca0 | Metric::Cu1 | Metric::Cu0)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "di" | "dia" => Ok(Metric::Dia),
            "di-true" => Ok(Metric::DiTrue),
            "ca1" => Ok(Metric::Ca1),
            "ca0" => Ok(Metric::Ca0),
            "cu1" => Ok(Metric::Cu1),
            "cu0" => Ok(Metric::Cu0),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}
