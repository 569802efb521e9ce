//! Closed-form covariance matrices of the indicator vector Z = (A₀, A₁, B₀, B₁).

use crate::delta::{CovarianceMatrix, MomentVector};

/// Covariance for the disparate-impact vector (1{g=1,S=0}, 1{g=1,S=1}, 1{S=0}, 1{S=1})
/// at moments (p₀, p₁, π₀, π₁). Assumes π₀ + π₁ = 1.
pub fn disparate_impact_covariance(m: &MomentVector) -> CovarianceMatrix {
    let [p0, p1, pi0, pi1] = m.as_array();
    CovarianceMatrix::from_lower([
        &[p0 * (1.0 - p0)],
        &[-p0 * p1, p1 * (1.0 - p1)],
        &[pi1 * p0, -pi0 * p1, pi0 * pi1],
        &[-pi1 * p0, pi0 * p1, -pi0 * pi1, pi0 * pi1],
    ])
}

/// Covariance for nested indicators A_s ⊆ B_s with B₀ ∩ B₁ = ∅, at moments
/// (p₀, p₁, r₀, r₁) = (P(A₀), P(A₁), P(B₀), P(B₁)).
///
/// This is the form used by the CA and CU estimators. Disjointness gives
/// Cov(A₀, A₁) = −p₀p₁ and Cov(A₀, B₁) = −p₀r₁; nesting gives
/// Cov(A_s, B_s) = p_s(1 − r_s). With r₀ + r₁ = 1 it coincides with
/// [`disparate_impact_covariance`].
pub fn nested_indicator_covariance(m: &MomentVector) -> CovarianceMatrix {
    let [p0, p1, r0, r1] = m.as_array();
    CovarianceMatrix::from_lower([
        &[p0 * (1.0 - p0)],
        &[-p0 * p1, p1 * (1.0 - p1)],
        &[p0 * (1.0 - r0), -p1 * r0, r0 * (1.0 - r0)],
        &[-p0 * r1, p1 * (1.0 - r1), -r0 * r1, r1 * (1.0 - r1)],
    ])
}

/// The conditional-accuracy matrix as it is commonly printed, with entry (2,1)
/// equal to −p₀r₁ and entry (4,1) equal to +p₀r₁. It is not the covariance of
/// the indicator vector; it exists so the discrepancy can be measured and is
/// never used for estimation.
pub fn printed_conditional_covariance(m: &MomentVector) -> CovarianceMatrix {
    let [p0, p1, r0, r1] = m.as_array();
    CovarianceMatrix::from_lower([
        &[p0 * (1.0 - p0)],
        &[-p0 * r1, p1 * (1.0 - p1)],
        &[p0 * (1.0 - r0), -p1 * r0, r0 * (1.0 - r0)],
        &[p0 * r1, p1 * (1.0 - r1), -r0 * r1, r1 * (1.0 - r1)],
    ])
}
