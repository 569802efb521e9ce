use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{AuditRecord, CellCounts, Group, Metric};

use super::oracle::exact_moments;

/// Probability distribution over the (g, y, s) cells, or over the (g, s) cells
/// when labels are not modelled.
///
/// JSON form: `{"joint": [[[p_gys]]]}` indexed `[g][y][s]`, or
/// `{"prediction_group": [[p_gs]]}` indexed `[g][s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum CellDistribution {
    Joint([[[f64; 2]; 2]; 2]),
    PredictionGroup([[f64; 2]; 2]),
}

fn check_probs<'a>(probs: impl Iterator<Item = &'a f64>) -> Result<()> {
    let mut total = 0.0;
    for &p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!("cell probability {p} is invalid")));
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!("cell probabilities sum to {total}")));
    }
    Ok(())
}

impl CellDistribution {
    pub fn with_labels(p: [[[f64; 2]; 2]; 2]) -> Result<Self> {
        check_probs(p.iter().flatten().flatten())?;
        Ok(CellDistribution::Joint(p))
    }

    pub fn without_labels(p: [[f64; 2]; 2]) -> Result<Self> {
        check_probs(p.iter().flatten())?;
        Ok(CellDistribution::PredictionGroup(p))
    }

    /// Re-checks a value that came from deserialization.
    pub fn validated(self) -> Result<Self> {
        match self {
            CellDistribution::Joint(p) => Self::with_labels(p),
            CellDistribution::PredictionGroup(p) => Self::without_labels(p),
        }
    }

    /// Builds a joint distribution from group shares, base rates and the
    /// classifier's true/false positive rates per group.
    pub fn from_rates(
        protected_share: f64,
        base_rate: [f64; 2],
        tpr: [f64; 2],
        fpr: [f64; 2],
    ) -> Result<Self> {
        let mut p = [[[0.0; 2]; 2]; 2];
        for s in 0..2 {
            let share = if s == 0 { protected_share } else { 1.0 - protected_share };
            let pos = share * base_rate[s];
            let neg = share - pos;
            p[1][1][s] = pos * tpr[s];
            p[0][1][s] = pos - p[1][1][s];
            p[1][0][s] = neg * fpr[s];
            p[0][0][s] = neg - p[1][0][s];
        }
        Self::with_labels(p)
    }

    /// Scenario used by the coverage checks: 40% protected, equal base rates
    /// of 0.4, TPR 0.6 vs 0.75 and FPR 0.2 vs 0.1. DIA = DI_true = 1,
    /// CA1 = CU1 = 0.8.
    pub fn reference_scenario() -> Self {
        Self::from_rates(0.4, [0.4, 0.4], [0.6, 0.75], [0.2, 0.1])
            .expect("reference scenario is a valid distribution")
    }

    /// Label-free distribution with equal group sizes whose disparate impact is
    /// exactly `di`: positive rate 0.5·di in the protected group, 0.5 in the
    /// favored group. Requires 0 < di ≤ 2.
    pub fn with_disparate_impact(di: f64) -> Result<Self> {
        if !(di > 0.0 && di <= 2.0) {
            return Err(Error::InvalidArgument(format!("disparate impact {di} not in (0, 2]")));
        }
        let r0 = 0.5 * di;
        Self::without_labels([[0.5 * (1.0 - r0), 0.25], [0.5 * r0, 0.25]])
    }

    pub fn has_labels(&self) -> bool {
        matches!(self, CellDistribution::Joint(_))
    }

    /// Atoms with their probabilities.
    pub fn atoms(&self) -> Vec<(AuditRecord, f64)> {
        let mut out = Vec::with_capacity(8);
        match self {
            CellDistribution::Joint(p) => {
                for g in 0..2 {
                    for y in 0..2 {
                        for s in 0..2 {
                            out.push((
                                AuditRecord::new(g == 1, Some(y == 1), Group::from_index(s)),
                                p[g][y][s],
                            ));
                        }
                    }
                }
            }
            CellDistribution::PredictionGroup(p) => {
                for g in 0..2 {
                    for s in 0..2 {
                        out.push((AuditRecord::new(g == 1, None, Group::from_index(s)), p[g][s]));
                    }
                }
            }
        }
        out
    }

    /// Population value of `metric`.
    pub fn true_value(&self, metric: Metric) -> Result<f64> {
        let (mean, _) = exact_moments(self, metric)?;
        let [a0, a1, b0, b1] = mean.as_array();
        if a1 == 0.0 || b0 == 0.0 {
            return Err(Error::DegenerateDistribution(format!(
                "{metric} has a zero denominator under this distribution"
            )));
        }
        Ok(a0 * b1 / (a1 * b0))
    }

    /// An i.i.d. sample of `n` records.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<AuditRecord> {
        let sampler = self.sampler();
        (0..n).map(|_| sampler.record(rng)).collect()
    }

    pub(crate) fn sampler(&self) -> Sampler {
        let atoms = self.atoms();
        let index = WeightedIndex::new(atoms.iter().map(|(_, p)| *p))
            .expect("validated distribution has positive total weight");
        Sampler {
            records: atoms.into_iter().map(|(r, _)| r).collect(),
            index,
            labels: self.has_labels(),
        }
    }
}

pub(crate) struct Sampler {
    records: Vec<AuditRecord>,
    index: WeightedIndex<f64>,
    labels: bool,
}

impl Sampler {
    pub(crate) fn record<R: Rng>(&self, rng: &mut R) -> AuditRecord {
        self.records[self.index.sample(rng)]
    }

    /// Cell counts of an i.i.d. sample of size `n`.
    pub(crate) fn counts<R: Rng>(&self, n: u64, rng: &mut R) -> CellCounts {
        let mut tally = [0u64; 8];
        for _ in 0..n {
            tally[self.index.sample(rng)] += 1;
        }
        if self.labels {
            let mut j = [[[0u64; 2]; 2]; 2];
            for (k, c) in tally.iter().enumerate() {
                let r = self.records[k];
                j[r.prediction as usize][r.label.unwrap() as usize][r.group.index()] += c;
            }
            CellCounts::from_joint(j).expect("n > 0")
        } else {
            let mut m = [[0u64; 2]; 2];
            for (k, c) in tally.iter().take(4).enumerate() {
                let r = self.records[k];
                m[r.prediction as usize][r.group.index()] += c;
            }
            CellCounts::from_prediction_group(m).expect("n > 0")
        }
    }
}
