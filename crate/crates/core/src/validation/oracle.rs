use rand::Rng;
use serde::{Deserialize, Serialize};

use super::distribution::CellDistribution;
use super::simulate::substream;
use crate::delta::{CovarianceMatrix, MomentVector};
use crate::error::{Error, Result};
use crate::metrics::closed_form::{nested_indicator_covariance, printed_conditional_covariance};
use crate::metrics::{AuditRecord, Group, Metric};

/// Entry-wise agreement required between a closed form and the oracle.
const MATRIX_TOLERANCE: f64 = 1e-12;

/// The indicator vector Z of `metric` for one record, written out directly
/// from the event definitions.
fn indicators(metric: Metric, r: &AuditRecord) -> Result<[bool; 4]> {
    let s0 = r.group == Group::Protected;
    let s1 = !s0;
    let g = r.prediction;
    let label = || r.label.ok_or(Error::LabelsMissing(metric.name()));
    Ok(match metric {
        Metric::Dia => [g && s0, g && s1, s0, s1],
        Metric::DiTrue => {
            let y = label()?;
            [y && s0, y && s1, s0, s1]
        }
        Metric::Ca1 => {
            let y = label()?;
            [g && y && s0, g && y && s1, y && s0, y && s1]
        }
        Metric::Ca0 => {
            let y = label()?;
            [!g && !y && s0, !g && !y && s1, !y && s0, !y && s1]
        }
        Metric::Cu1 => {
            let y = label()?;
            [g && y && s0, g && y && s1, g && s0, g && s1]
        }
        Metric::Cu0 => {
            let y = label()?;
            [!g && !y && s0, !g && !y && s1, !g && s0, !g && s1]
        }
    })
}

fn to_f64(z: [bool; 4]) -> [f64; 4] {
    z.map(|b| if b { 1.0 } else { 0.0 })
}

/// Exact E[Z] and Cov(Z) by summing over the atoms of `dist`.
pub fn exact_moments(
    dist: &CellDistribution,
    metric: Metric,
) -> Result<(MomentVector, CovarianceMatrix)> {
    if metric.needs_labels() && !dist.has_labels() {
        return Err(Error::LabelsMissing(metric.name()));
    }
    let mut mean = [0.0; 4];
    let mut second = [[0.0; 4]; 4];
    for (atom, p) in dist.atoms() {
        let z = to_f64(indicators(metric, &atom)?);
        for j in 0..4 {
            mean[j] += p * z[j];
            for k in 0..4 {
                second[j][k] += p * z[j] * z[k];
            }
        }
    }
    let mut cov = [[0.0; 4]; 4];
    for j in 0..4 {
        for k in 0..4 {
            cov[j][k] = second[j][k] - mean[j] * mean[k];
        }
    }
    let mean = mean.map(|m: f64| m.clamp(0.0, 1.0));
    Ok((MomentVector::new(mean)?, CovarianceMatrix::new(cov)?))
}

/// Sample mean and 1/n-normalised sample covariance of the indicator vectors
/// of `records`.
pub fn empirical_indicator_covariance(
    records: &[AuditRecord],
    metric: Metric,
) -> Result<(MomentVector, CovarianceMatrix)> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let zs = records
        .iter()
        .map(|r| indicators(metric, r).map(to_f64))
        .collect::<Result<Vec<_>>>()?;
    let n = zs.len() as f64;
    let mut mean = [0.0; 4];
    for z in &zs {
        for j in 0..4 {
            mean[j] += z[j];
        }
    }
    let mean = mean.map(|m| m / n);
    let mut cov = [[0.0; 4]; 4];
    for z in &zs {
        for j in 0..4 {
            for k in 0..4 {
                cov[j][k] += (z[j] - mean[j]) * (z[k] - mean[k]);
            }
        }
    }
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    Ok((MomentVector::new(mean)?, CovarianceMatrix::new(cov)?))
}

/// Comparison of the printed and corrected conditional covariance forms
/// against [`exact_moments`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjudicationReport {
    pub metric: Metric,
    pub trials: usize,
    pub seed: u64,
    pub corrected_max_deviation: f64,
    pub printed_max_deviation: f64,
    /// Lower-triangle entries (1-based row, column) where the corrected form
    /// exceeded the tolerance in some trial. Expected to be empty.
    pub corrected_deviating_entries: Vec<[usize; 2]>,
    /// Lower-triangle entries (1-based) where the printed form exceeded the
    /// tolerance in some trial.
    pub printed_deviating_entries: Vec<[usize; 2]>,
}

impl AdjudicationReport {
    pub fn corrected_form_agrees(&self) -> bool {
        self.corrected_max_deviation <= MATRIX_TOLERANCE
    }
}

fn deviating_entries(a: &CovarianceMatrix, b: &CovarianceMatrix, out: &mut Vec<[usize; 2]>) {
    for i in 0..4 {
        for j in 0..=i {
            if (a.get(i, j) - b.get(i, j)).abs() > MATRIX_TOLERANCE && !out.contains(&[i + 1, j + 1]) {
                out.push([i + 1, j + 1]);
            }
        }
    }
}

/// Random strictly positive 8-cell distribution. Cells are bounded away from
/// zero so that every printed-form discrepancy is visible.
fn random_distribution<R: Rng>(rng: &mut R) -> CellDistribution {
    let mut w = [[[0.0; 2]; 2]; 2];
    let mut total = 0.0;
    for v in w.iter_mut().flatten().flatten() {
        *v = 0.02 + rng.random::<f64>();
        total += *v;
    }
    for v in w.iter_mut().flatten().flatten() {
        *v /= total;
    }
    // Renormalisation leaves the sum within a few ulps of 1.
    CellDistribution::with_labels(w).expect("normalised weights")
}

/// Compares, for `trials` random distributions, the printed conditional
/// covariance form and the corrected nested-indicator form against the
/// enumeration oracle.
pub fn adjudicate_matrix(metric: Metric, trials: usize, seed: u64) -> Result<AdjudicationReport> {
    if !metric.is_conditional() {
        return Err(Error::InvalidArgument(format!(
            "matrix adjudication applies to CA/CU metrics, not {metric}"
        )));
    }
    let mut report = AdjudicationReport {
        metric,
        trials,
        seed,
        corrected_max_deviation: 0.0,
        printed_max_deviation: 0.0,
        corrected_deviating_entries: Vec::new(),
        printed_deviating_entries: Vec::new(),
    };
    for t in 0..trials {
        let mut rng = substream(seed, t as u64);
        let dist = random_distribution(&mut rng);
        compare_forms(&dist, metric, &mut report)?;
    }
    report.corrected_deviating_entries.sort();
    report.printed_deviating_entries.sort();
    Ok(report)
}

/// Adds one distribution's comparison to `report`.
pub(crate) fn compare_forms(
    dist: &CellDistribution,
    metric: Metric,
    report: &mut AdjudicationReport,
) -> Result<()> {
    let (mean, exact) = exact_moments(dist, metric)?;
    let corrected = nested_indicator_covariance(&mean);
    let printed = printed_conditional_covariance(&mean);
    report.corrected_max_deviation = report.corrected_max_deviation.max(corrected.max_abs_diff(&exact));
    report.printed_max_deviation = report.printed_max_deviation.max(printed.max_abs_diff(&exact));
    deviating_entries(&corrected, &exact, &mut report.corrected_deviating_entries);
    deviating_entries(&printed, &exact, &mut report.printed_deviating_entries);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_four_cell_moments() {
        let d = CellDistribution::without_labels([[0.25; 2]; 2]).unwrap();
        let (m, c) = exact_moments(&d, Metric::Dia).unwrap();
        assert_eq!(m.as_array(), [0.25, 0.25, 0.5, 0.5]);
        let diag: Vec<f64> = (0..4).map(|i| c.get(i, i)).collect();
        assert_eq!(diag, [0.1875, 0.1875, 0.25, 0.25]);
        // disjoint positive cells, nested group indicators
        assert_eq!(c.get(1, 0), -0.0625);
        assert_eq!(c.get(2, 0), 0.25 - 0.125);
        assert_eq!(c.get(3, 2), -0.25);
    }

    #[test]
    fn point_mass_has_zero_covariance() {
        let mut p = [[[0.0; 2]; 2]; 2];
        p[1][1][0] = 1.0;
        let d = CellDistribution::with_labels(p).unwrap();
        for m in Metric::ALL {
            let (_, c) = exact_moments(&d, m).unwrap();
            assert_eq!(c, CovarianceMatrix::zeros(), "{m}");
        }
    }

    #[test]
    fn oracle_covariance_is_psd() {
        let mut rng = substream(11, 0);
        for _ in 0..50 {
            let d = random_distribution(&mut rng);
            for m in Metric::ALL {
                let (_, c) = exact_moments(&d, m).unwrap();
                c.check_indicator_covariance(1e-12).unwrap();
            }
        }
    }

    #[test]
    fn labels_required() {
        let d = CellDistribution::without_labels([[0.25; 2]; 2]).unwrap();
        assert!(matches!(exact_moments(&d, Metric::Ca1), Err(Error::LabelsMissing(_))));
    }

    #[test]
    fn zero_protected_cell_collapses_printed_discrepancy() {
        // p0 = P(g=1, Y=1, S=0) = 0 makes -p0*p1 and -p0*r1 both vanish.
        let mut p = [[[0.1; 2]; 2]; 2];
        p[1][1][0] = 0.0;
        p[0][0][0] = 0.4;
        let d = CellDistribution::with_labels(p).unwrap();
        let mut report = AdjudicationReport {
            metric: Metric::Ca1,
            trials: 1,
            seed: 0,
            corrected_max_deviation: 0.0,
            printed_max_deviation: 0.0,
            corrected_deviating_entries: vec![],
            printed_deviating_entries: vec![],
        };
        compare_forms(&d, Metric::Ca1, &mut report).unwrap();
        assert!(report.printed_deviating_entries.is_empty());
        assert!(report.corrected_max_deviation <= MATRIX_TOLERANCE);
    }

    #[test]
    fn adjudication_rejects_ratio_of_group_rates() {
        assert!(adjudicate_matrix(Metric::Dia, 3, 1).is_err());
    }
}
