use serde::{Deserialize, Serialize};

use super::closed_form::{disparate_impact_covariance, nested_indicator_covariance};
use super::{CellCounts, Metric};
use crate::delta::{
    clt_interval, one_sided_test, ratio_gradient, ratio_phi, sandwich_variance, MomentVector,
    RatioCI, TestResult,
};
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;
/// The four-fifths rule.
pub const DEFAULT_BETA: f64 = 0.8;

/// Warning code attached when a count entering the estimate is below
/// [`SMALL_CELL_THRESHOLD`].
pub const SMALL_CELL: &str = "SMALL_CELL";
pub const SMALL_CELL_THRESHOLD: u64 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricEstimate {
    pub metric: Metric,
    pub point: f64,
    pub sigma: f64,
    pub n: u64,
    pub ci: RatioCI,
    /// Plug-in moments (P̂(A₀), P̂(A₁), P̂(B₀), P̂(B₁)).
    pub moments: MomentVector,
    /// Counts behind `moments`.
    pub coordinate_counts: [u64; 4],
    pub warnings: Vec<String>,
}

fn degenerate(metric: Metric, counts: [u64; 4]) -> Option<String> {
    let [_, a1, b0, b1] = counts;
    let what = match metric {
        Metric::Dia => ["protected group is empty", "favored group has no positive predictions"],
        Metric::DiTrue => ["protected group is empty", "favored group has no positive labels"],
        Metric::Ca1 => [
            "protected group has no positive labels",
            "favored group has no true positives",
        ],
        Metric::Ca0 => [
            "protected group has no negative labels",
            "favored group has no true negatives",
        ],
        Metric::Cu1 => [
            "protected group has no positive predictions",
            "favored group has no true positives",
        ],
        Metric::Cu0 => [
            "protected group has no negative predictions",
            "favored group has no true negatives",
        ],
    };
    if b0 == 0 {
        Some(format!("{metric}: {}", what[0]))
    } else if a1 == 0 || b1 == 0 {
        Some(format!("{metric}: {}", what[1]))
    } else {
        None
    }
}

/// Point estimate, plug-in σ and interval for any supported metric.
pub fn estimate(cells: &CellCounts, metric: Metric, alpha: f64) -> Result<MetricEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let counts = cells.coordinate_counts(metric)?;
    if let Some(msg) = degenerate(metric, counts) {
        return Err(Error::DegenerateDenominator(msg));
    }
    let n = cells.n();
    let moments = MomentVector::from_counts(counts, n)?;
    let point = ratio_phi(&moments)?;
    let cov = if metric.is_conditional() {
        nested_indicator_covariance(&moments)
    } else {
        disparate_impact_covariance(&moments)
    };
    let sigma = sandwich_variance(&ratio_gradient(&moments)?, &cov)?.sqrt();
    let ci = clt_interval(point, sigma, n, alpha)?;
    let mut warnings = Vec::new();
    if counts.iter().any(|&c| c < SMALL_CELL_THRESHOLD) {
        warnings.push(SMALL_CELL.to_string());
    }
    Ok(MetricEstimate {
        metric,
        point,
        sigma,
        n,
        ci,
        moments,
        coordinate_counts: counts,
        warnings,
    })
}

/// Disparate impact of the predictions, P(g=1|S=0) / P(g=1|S=1).
pub fn estimate_di(cells: &CellCounts, alpha: f64) -> Result<MetricEstimate> {
    estimate(cells, Metric::Dia, alpha)
}

/// Disparate impact of the observed labels, P(Y=1|S=0) / P(Y=1|S=1).
pub fn estimate_di_true(cells: &CellCounts, alpha: f64) -> Result<MetricEstimate> {
    estimate(cells, Metric::DiTrue, alpha)
}

/// Ratio of true-positive rates (`outcome = true`) or true-negative rates
/// (`outcome = false`) between the protected and favored groups.
pub fn estimate_ca(cells: &CellCounts, outcome: bool, alpha: f64) -> Result<MetricEstimate> {
    estimate(cells, if outcome { Metric::Ca1 } else { Metric::Ca0 }, alpha)
}

/// Ratio of positive (`outcome = true`) or negative (`outcome = false`)
/// predictive values between the protected and favored groups.
pub fn estimate_cu(cells: &CellCounts, outcome: bool, alpha: f64) -> Result<MetricEstimate> {
    estimate(cells, if outcome { Metric::Cu1 } else { Metric::Cu0 }, alpha)
}

/// One-sided test of H₀: ratio ≤ β. Rejecting means the ratio is shown to
/// exceed β at level α.
pub fn test_disparate_impact(est: &MetricEstimate, beta: f64, alpha: f64) -> Result<TestResult> {
    one_sided_test(est.point, est.sigma, est.n, beta, alpha)
}

/// P̂(g=1|S=0) − P̂(g=1|S=1).
pub fn statistical_parity_gap(cells: &CellCounts) -> Result<f64> {
    let m = cells.prediction_by_group();
    let size = |s: usize| m[0][s] + m[1][s];
    if size(0) == 0 || size(1) == 0 {
        return Err(Error::DegenerateDenominator(
            "statistical parity needs both groups to be nonempty".into(),
        ));
    }
    Ok(m[1][0] as f64 / size(0) as f64 - m[1][1] as f64 / size(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Unlabelled table with `pos[s]` positives out of `size[s]` in group s.
    fn di_table(pos: [u64; 2], size: [u64; 2]) -> CellCounts {
        CellCounts::from_prediction_group([
            [size[0] - pos[0], size[1] - pos[1]],
            [pos[0], pos[1]],
        ])
        .unwrap()
    }

    fn joint(f: impl Fn(usize, usize, usize) -> u64) -> CellCounts {
        let mut j = [[[0u64; 2]; 2]; 2];
        for g in 0..2 {
            for y in 0..2 {
                for s in 0..2 {
                    j[g][y][s] = f(g, y, s);
                }
            }
        }
        CellCounts::from_joint(j).unwrap()
    }

    #[test]
    fn di_examples() {
        let e = estimate_di(&di_table([2, 5], [10, 10]), 0.05).unwrap();
        assert_relative_eq!(e.point, 0.4, max_relative = 1e-15);
        assert_eq!(e.warnings, vec![SMALL_CELL.to_string()]);

        let e = estimate_di(&di_table([3, 3], [10, 10]), 0.05).unwrap();
        assert_relative_eq!(e.point, 1.0, max_relative = 1e-15);
        assert!(e.ci.lower <= e.point && e.point <= e.ci.upper);
    }

    #[test]
    fn di_degenerate_tables() {
        for t in [di_table([0, 0], [0, 10]), di_table([3, 0], [10, 10])] {
            assert!(matches!(estimate_di(&t, 0.05), Err(Error::DegenerateDenominator(_))));
        }
        // No positives in the protected group is a valid (zero) estimate.
        let e = estimate_di(&di_table([0, 5], [10, 10]), 0.05).unwrap();
        assert_eq!((e.point, e.sigma), (0.0, 0.0));
    }

    #[test]
    fn no_warning_for_large_cells() {
        let e = estimate_di(&di_table([300, 500], [1000, 1000]), 0.05).unwrap();
        assert!(e.warnings.is_empty());
        assert_relative_eq!(e.point, 0.6, max_relative = 1e-15);
    }

    #[test]
    fn di_true_equals_di_when_labels_equal_predictions() {
        let t = joint(|g, y, s| if g == y { [[7, 19], [11, 23]][y][s] } else { 0 });
        let a = estimate_di(&t, 0.05).unwrap();
        let b = estimate_di_true(&t, 0.05).unwrap();
        assert_eq!(a.point, b.point);
        assert_eq!(a.sigma, b.sigma);
        assert_eq!(a.ci, b.ci);
    }

    #[test]
    fn ca_equal_rates_is_one() {
        // Same base rate and same TPR/TNR in both groups, different group sizes.
        let t = joint(|g, y, s| {
            let scale = if s == 0 { 1 } else { 3 };
            scale * [[40, 10], [20, 30]][y][g]
        });
        for outcome in [true, false] {
            let e = estimate_ca(&t, outcome, 0.05).unwrap();
            assert_relative_eq!(e.point, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn ca_is_tpr_ratio() {
        // group 0: TP=8, FN=12; group 1: TP=30, FN=10 -> (8/20)/(30/40)
        let t = joint(|g, y, s| match (g, y, s) {
            (1, 1, 0) => 8,
            (0, 1, 0) => 12,
            (1, 1, 1) => 30,
            (0, 1, 1) => 10,
            (1, 0, 0) => 5,
            (0, 0, 0) => 15,
            (1, 0, 1) => 4,
            (0, 0, 1) => 36,
            _ => unreachable!(),
        });
        assert_relative_eq!(estimate_ca(&t, true, 0.05).unwrap().point, 0.4 / 0.75, max_relative = 1e-14);
        assert_relative_eq!(estimate_ca(&t, false, 0.05).unwrap().point, 0.75 / 0.9, max_relative = 1e-14);
        assert_relative_eq!(estimate_cu(&t, true, 0.05).unwrap().point, (8.0 / 13.0) / (30.0 / 34.0), max_relative = 1e-14);
        assert_relative_eq!(estimate_cu(&t, false, 0.05).unwrap().point, (15.0 / 27.0) / (36.0 / 46.0), max_relative = 1e-14);
    }

    #[test]
    fn cu_examples() {
        let cu = |tp0, pp0, tp1, pp1| {
            joint(|g, y, s| match (g, y, s) {
                (1, 1, 0) => tp0,
                (1, 0, 0) => pp0 - tp0,
                (1, 1, 1) => tp1,
                (1, 0, 1) => pp1 - tp1,
                _ => 5,
            })
        };
        assert_relative_eq!(estimate_cu(&cu(3, 6, 4, 8), true, 0.05).unwrap().point, 1.0, max_relative = 1e-14);
        assert_relative_eq!(estimate_cu(&cu(2, 8, 6, 8), true, 0.05).unwrap().point, 1.0 / 3.0, max_relative = 1e-14);

        // perfect classifier
        let t = joint(|g, y, s| if g == y { [[9, 14], [6, 21]][y][s] } else { 0 });
        assert_eq!(estimate_cu(&t, true, 0.05).unwrap().point, 1.0);
        assert_eq!(estimate_cu(&t, false, 0.05).unwrap().point, 1.0);
    }

    #[test]
    fn label_metrics_on_unlabelled_table() {
        let t = di_table([3, 3], [10, 10]);
        assert!(matches!(estimate_ca(&t, true, 0.05), Err(Error::LabelsMissing("CA1"))));
        assert!(matches!(estimate_cu(&t, false, 0.05), Err(Error::LabelsMissing("CU0"))));
        assert!(matches!(estimate_di_true(&t, 0.05), Err(Error::LabelsMissing("DI_true"))));
    }

    #[test]
    fn tests_delegate() {
        let e = estimate_di(&di_table([400, 500], [1000, 1000]), 0.05).unwrap();
        let t = test_disparate_impact(&e, e.point, 0.05).unwrap();
        assert_eq!(t.p_value, 0.5);
        assert!(!t.reject_h0);
        let zero = estimate_di(&di_table([0, 5], [10, 10]), 0.05).unwrap();
        assert!(matches!(test_disparate_impact(&zero, 0.8, 0.05), Err(Error::ZeroSigma)));
    }

    #[test]
    fn parity_gap() {
        assert_eq!(statistical_parity_gap(&di_table([3, 3], [10, 10])).unwrap(), 0.0);
        assert_relative_eq!(statistical_parity_gap(&di_table([2, 5], [10, 10])).unwrap(), -0.3, max_relative = 1e-12);
        assert!(matches!(
            statistical_parity_gap(&di_table([0, 5], [0, 10])),
            Err(Error::DegenerateDenominator(_))
        ));
    }
}
