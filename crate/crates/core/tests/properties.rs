use fairci::metrics::{estimate, CellCounts, Metric};
use fairci::validation::{
    bootstrap_sigma, exact_moments, ks_distance_to_normal, standardized_statistics, substream,
    CellDistribution,
};
use fairci::{
    clt_interval, normal, one_sided_test, ratio_gradient, ratio_phi, sandwich_variance,
    MomentVector,
};
use proptest::prelude::*;

fn joint_counts(max: u64) -> impl Strategy<Value = CellCounts> {
    prop::array::uniform8(1..max).prop_map(|c| {
        let mut j = [[[0u64; 2]; 2]; 2];
        for (k, v) in c.iter().enumerate() {
            j[k / 4][(k / 2) % 2][k % 2] = *v;
        }
        CellCounts::from_joint(j).unwrap()
    })
}

fn moments() -> impl Strategy<Value = MomentVector> {
    (0.0..1.0f64, 0.01..1.0f64, 0.01..1.0f64, 0.0..1.0f64)
        .prop_map(|(a, b, c, d)| MomentVector::new([a, b, c, d]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// φ is homogeneous of degree zero in (m1, m3) and in (m2, m4), so its
    /// gradient is orthogonal to m (Euler).
    #[test]
    fn ratio_is_scale_free(m in moments(), c in 0.1..1.0f64) {
        let [a, b, d3, d4] = m.as_array();
        let scaled = MomentVector::new([a * c, b, d3 * c, d4]).unwrap();
        let (p, q) = (ratio_phi(&m).unwrap(), ratio_phi(&scaled).unwrap());
        prop_assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0));
        let g = ratio_gradient(&m).unwrap().0;
        let euler: f64 = g.iter().zip(m.as_array()).map(|(g, m)| g * m).sum();
        let scale: f64 = g.iter().zip(m.as_array()).map(|(g, m)| (g * m).abs()).sum();
        prop_assert!(euler.abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn intervals_nest_in_alpha(cells in joint_counts(500), a1 in 0.001..0.5f64, a2 in 0.001..0.5f64) {
        let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        for m in Metric::ALL {
            let wide = estimate(&cells, m, lo).unwrap().ci;
            let narrow = estimate(&cells, m, hi).unwrap().ci;
            prop_assert!(wide.lower <= narrow.lower && narrow.upper <= wide.upper);
            prop_assert!(narrow.lower <= narrow.point && narrow.point <= narrow.upper);
        }
    }

    /// Rejecting H0: θ ≤ β at level α is the same as β lying below the
    /// lower end of the two-sided 1 − 2α interval.
    #[test]
    fn test_agrees_with_interval(cells in joint_counts(500), beta in 0.2..2.0f64, alpha in 0.005..0.25f64) {
        for m in Metric::ALL {
            let e = estimate(&cells, m, 2.0 * alpha).unwrap();
            prop_assume!(e.sigma > 0.0);
            let t = one_sided_test(e.point, e.sigma, e.n, beta, alpha).unwrap();
            let margin = (e.ci.lower - beta).abs();
            prop_assume!(margin > 1e-12);
            prop_assert_eq!(t.reject_h0, e.ci.lower > beta);
            prop_assert!((0.0..=1.0).contains(&t.p_value));
            prop_assert_eq!(t.reject_h0, t.p_value <= alpha + 1e-15);
        }
    }

    /// Exchanging the groups inverts the ratio; the delta method then scales
    /// σ by 1/θ².
    #[test]
    fn group_swap_is_reciprocal(cells in joint_counts(500)) {
        let swapped = cells.group_swapped();
        for m in Metric::ALL {
            let a = estimate(&cells, m, 0.05).unwrap();
            let b = estimate(&swapped, m, 0.05).unwrap();
            prop_assert!((a.point * b.point - 1.0).abs() < 1e-12);
            prop_assert!((b.sigma - a.sigma / (a.point * a.point)).abs() <= 1e-9 * b.sigma.max(1.0));
        }
    }

    /// Negating predictions and labels exchanges the "1" and "0" versions of
    /// the conditional metrics.
    #[test]
    fn outcome_flip_duality(cells in joint_counts(500)) {
        let flipped = cells.outcome_flipped();
        for (x, y) in [(Metric::Ca1, Metric::Ca0), (Metric::Cu1, Metric::Cu0)] {
            let a = estimate(&cells, x, 0.05).unwrap();
            let b = estimate(&flipped, y, 0.05).unwrap();
            prop_assert_eq!(a.point, b.point);
            prop_assert!((a.sigma - b.sigma).abs() <= 1e-12 * a.sigma.max(1.0));
        }
        prop_assert_eq!(flipped.outcome_flipped(), cells);
    }

    #[test]
    fn exact_covariance_is_psd_and_quadratic_form_nonnegative(w in prop::array::uniform8(0.0..1.0f64)) {
        let total: f64 = w.iter().sum();
        prop_assume!(total > 0.1);
        let mut p = [[[0.0; 2]; 2]; 2];
        for (k, v) in w.iter().enumerate() {
            p[k / 4][(k / 2) % 2][k % 2] = v / total;
        }
        let Ok(d) = CellDistribution::with_labels(p) else { return Ok(()) };
        for m in Metric::ALL {
            let (mean, cov) = exact_moments(&d, m).unwrap();
            prop_assert!(cov.eigenvalues().iter().all(|&l| l >= -1e-12));
            if let Ok(g) = ratio_gradient(&mean) {
                prop_assert!(sandwich_variance(&g, &cov).unwrap() >= 0.0);
            }
        }
    }

    /// Above x ≈ 5, Φ(x) is within 1e-7 of 1 and the round trip is limited by
    /// the spacing of doubles near 1, so the range stops there.
    #[test]
    fn quantile_inverts_cdf(x in -8.0..5.0f64) {
        let q = normal::quantile(normal::cdf(x));
        prop_assert!((q - x).abs() < 1e-8 * x.abs().max(1.0));
    }

    #[test]
    fn interval_is_symmetric(point in 0.01..5.0f64, sigma in 0.0..10.0f64, n in 1u64..1_000_000, alpha in 0.001..0.999f64) {
        let ci = clt_interval(point, sigma, n, alpha).unwrap();
        prop_assert!(((ci.upper - point) - (point - ci.lower)).abs() <= 1e-12 * point.max(1.0));
        prop_assert!(ci.lower <= point && point <= ci.upper);
    }
}

/// Tₙ → θ: the estimate on a large sample sits within a few standard errors
/// of the population value, and the error shrinks with n.
#[test]
fn estimator_is_consistent() {
    let d = CellDistribution::reference_scenario();
    for m in Metric::ALL {
        let truth = d.true_value(m).unwrap();
        let mut errors = Vec::new();
        for (i, n) in [2_000usize, 200_000].into_iter().enumerate() {
            let recs = d.sample(n, &mut substream(17, i as u64));
            let cells = fairci::metrics::count_cells(&recs).unwrap();
            let e = estimate(&cells, m, 0.05).unwrap();
            let se = e.sigma / (n as f64).sqrt();
            assert!((e.point - truth).abs() < 4.0 * se, "{m} at n={n}");
            errors.push((e.point - truth).abs());
        }
        assert!(errors[1] < 0.02, "{m}: {errors:?}");
    }
}

/// The standardized statistic is close to N(0, 1) at n = 5000.
#[test]
fn standardized_statistic_is_approximately_normal() {
    let d = CellDistribution::reference_scenario();
    for m in [Metric::Dia, Metric::Ca1] {
        let z = standardized_statistics(&d, m, 5000, 2000, 23).unwrap();
        assert_eq!(z.len(), 2000);
        let ks = ks_distance_to_normal(&z);
        assert!(ks < 0.05, "{m}: KS distance {ks}");
    }
}

/// Sample covariance of 10⁶ draws matches the enumeration oracle within three
/// standard errors per entry.
#[test]
fn exact_moments_match_simulation() {
    let d = CellDistribution::from_rates(0.3, [0.35, 0.5], [0.7, 0.8], [0.25, 0.15]).unwrap();
    let n = 1_000_000usize;
    let recs = d.sample(n, &mut substream(99, 0));
    for m in Metric::ALL {
        let (mean, exact) = exact_moments(&d, m).unwrap();
        let (_, empirical) = fairci::validation::empirical_indicator_covariance(&recs, m).unwrap();
        // Var of (Zj - μj)(Zk - μk) from the atoms gives each entry's standard error.
        let mu = mean.as_array();
        for j in 0..4 {
            for k in 0..=j {
                let mut second = 0.0;
                for (atom, p) in d.atoms() {
                    let z = indicator(m, &atom);
                    second += p * ((z[j] - mu[j]) * (z[k] - mu[k])).powi(2);
                }
                let var = second - exact.get(j, k).powi(2);
                let se = (var.max(0.0) / n as f64).sqrt();
                let diff = (empirical.get(j, k) - exact.get(j, k)).abs();
                assert!(diff <= 3.0 * se + 1e-12, "{m} ({j},{k}): diff {diff:e}, se {se:e}");
            }
        }
    }
}

/// Indicator vector written out once more, independently of the library.
fn indicator(m: Metric, r: &fairci::AuditRecord) -> [f64; 4] {
    let s0 = r.group == fairci::Group::Protected;
    let (g, y) = (r.prediction, r.label.unwrap());
    let (num, den): (bool, bool) = match m {
        Metric::Dia => (g, true),
        Metric::DiTrue => (y, true),
        Metric::Ca1 => (g && y, y),
        Metric::Ca0 => (!g && !y, !y),
        Metric::Cu1 => (g && y, g),
        Metric::Cu0 => (!g && !y, !g),
    };
    let f = |b: bool| if b { 1.0 } else { 0.0 };
    [f(num && s0), f(num && !s0), f(den && s0), f(den && !s0)]
}

/// Bootstrap σ agrees with the delta-method σ at n = 10⁴.
#[test]
fn bootstrap_agrees_with_delta_method() {
    let d = CellDistribution::reference_scenario();
    let n = 10_000;
    let mut gaps = Vec::new();
    for trial in 0..20u64 {
        let recs = d.sample(n, &mut substream(1000 + trial, u64::MAX));
        let cells = fairci::metrics::count_cells(&recs).unwrap();
        let delta = estimate(&cells, Metric::Dia, 0.05).unwrap().sigma;
        let boot = bootstrap_sigma(&recs, Metric::Dia, 200, trial).unwrap();
        let gap = (boot - delta).abs() / delta;
        if trial == 0 {
            assert!(gap < 0.15, "single-trial gap {gap}");
        }
        gaps.push(gap);
    }
    gaps.sort_by(f64::total_cmp);
    let median = (gaps[9] + gaps[10]) / 2.0;
    assert!(median <= 0.10, "median gap {median}");
}

#[test]
fn bootstrap_is_reproducible() {
    let d = CellDistribution::reference_scenario();
    let recs = d.sample(3000, &mut substream(4, 0));
    let a = bootstrap_sigma(&recs, Metric::Ca1, 500, 8).unwrap();
    let b = bootstrap_sigma(&recs, Metric::Ca1, 500, 8).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}
