use serde::{Deserialize, Serialize};

use super::{AuditRecord, Group, Metric};
use crate::error::{Error, Result};

/// Joint counts over (g(X), Y, S).
///
/// `joint[g][y][s]` is present only when the table carries labels;
/// `prediction_group[g][s]` is always present. Label-free metrics read only the
/// latter and label-only metrics read only the label marginal of `joint`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellCounts {
    n: u64,
    prediction_group: [[u64; 2]; 2],
    joint: Option<[[[u64; 2]; 2]; 2]>,
}

impl CellCounts {
    pub fn from_joint(joint: [[[u64; 2]; 2]; 2]) -> Result<Self> {
        let mut prediction_group = [[0u64; 2]; 2];
        for (g, by_y) in joint.iter().enumerate() {
            for by_s in by_y {
                for (s, &c) in by_s.iter().enumerate() {
                    prediction_group[g][s] += c;
                }
            }
        }
        let n = prediction_group.iter().flatten().sum();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(CellCounts {
            n,
            prediction_group,
            joint: Some(joint),
        })
    }

    pub fn from_prediction_group(prediction_group: [[u64; 2]; 2]) -> Result<Self> {
        let n = prediction_group.iter().flatten().sum();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(CellCounts {
            n,
            prediction_group,
            joint: None,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn has_labels(&self) -> bool {
        self.joint.is_some()
    }

    /// `[g][s]` counts.
    pub fn prediction_by_group(&self) -> [[u64; 2]; 2] {
        self.prediction_group
    }

    /// `[y][s]` counts; requires labels.
    pub fn label_by_group(&self) -> Result<[[u64; 2]; 2]> {
        let joint = self.joint.ok_or(Error::LabelsMissing(Metric::DiTrue.name()))?;
        let mut out = [[0u64; 2]; 2];
        for by_y in joint.iter() {
            for (y, by_s) in by_y.iter().enumerate() {
                for (s, &c) in by_s.iter().enumerate() {
                    out[y][s] += c;
                }
            }
        }
        Ok(out)
    }

    /// `[g][y][s]` counts; requires labels.
    pub fn joint(&self) -> Option<&[[[u64; 2]; 2]; 2]> {
        self.joint.as_ref()
    }

    pub fn cell(&self, prediction: bool, label: bool, group: Group) -> Option<u64> {
        self.joint
            .map(|j| j[prediction as usize][label as usize][group.index()])
    }

    /// Counts of the four indicator coordinates (A₀, A₁, B₀, B₁) of `metric`.
    pub fn coordinate_counts(&self, metric: Metric) -> Result<[u64; 4]> {
        let [p, f] = [0usize, 1usize];
        match metric {
            Metric::Dia => {
                let m = self.prediction_group;
                Ok([m[1][p], m[1][f], m[0][p] + m[1][p], m[0][f] + m[1][f]])
            }
            Metric::DiTrue => {
                let m = self
                    .label_by_group()
                    .map_err(|_| Error::LabelsMissing(metric.name()))?;
                Ok([m[1][p], m[1][f], m[0][p] + m[1][p], m[0][f] + m[1][f]])
            }
            _ => {
                let j = self.joint.ok_or(Error::LabelsMissing(metric.name()))?;
                let out = match metric {
                    Metric::Ca1 => [
                        j[1][1][p],
                        j[1][1][f],
                        j[0][1][p] + j[1][1][p],
                        j[0][1][f] + j[1][1][f],
                    ],
                    Metric::Ca0 => [
                        j[0][0][p],
                        j[0][0][f],
                        j[0][0][p] + j[1][0][p],
                        j[0][0][f] + j[1][0][f],
                    ],
                    Metric::Cu1 => [
                        j[1][1][p],
                        j[1][1][f],
                        j[1][0][p] + j[1][1][p],
                        j[1][0][f] + j[1][1][f],
                    ],
                    Metric::Cu0 => [
                        j[0][0][p],
                        j[0][0][f],
                        j[0][0][p] + j[0][1][p],
                        j[0][0][f] + j[0][1][f],
                    ],
                    Metric::Dia | Metric::DiTrue => unreachable!(),
                };
                Ok(out)
            }
        }
    }

    /// Same table with the group coding exchanged (S ↦ 1 − S).
    pub fn group_swapped(&self) -> CellCounts {
        let mut out = self.clone();
        for row in out.prediction_group.iter_mut() {
            row.swap(0, 1);
        }
        if let Some(j) = out.joint.as_mut() {
            for by_y in j.iter_mut() {
                for by_s in by_y.iter_mut() {
                    by_s.swap(0, 1);
                }
            }
        }
        out
    }

    /// Same table with both predictions and labels negated.
    pub fn outcome_flipped(&self) -> CellCounts {
        let mut out = self.clone();
        out.prediction_group.swap(0, 1);
        if let Some(j) = out.joint.as_mut() {
            j.swap(0, 1);
            for by_y in j.iter_mut() {
                by_y.swap(0, 1);
            }
        }
        out
    }
}

/// Tabulates records into cell counts.
pub fn count_cells(records: &[AuditRecord]) -> Result<CellCounts> {
    let first = records.first().ok_or(Error::EmptyInput)?;
    let labelled = first.label.is_some();
    if labelled {
        let mut joint = [[[0u64; 2]; 2]; 2];
        for r in records {
            let y = r.label.ok_or(Error::MixedLabelPresence)?;
            joint[r.prediction as usize][y as usize][r.group.index()] += 1;
        }
        CellCounts::from_joint(joint)
    } else {
        let mut m = [[0u64; 2]; 2];
        for r in records {
            if r.label.is_some() {
                return Err(Error::MixedLabelPresence);
            }
            m[r.prediction as usize][r.group.index()] += 1;
        }
        CellCounts::from_prediction_group(m)
    }
}
