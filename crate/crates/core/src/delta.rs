//! Delta-method engine for the ratio functional φ(x) = x₁x₄ / (x₂x₃).
//!
//! Every estimator in this crate is φ evaluated at the sample mean of a
//! 4-dimensional indicator vector. The asymptotic standard deviation is the
//! square root of the sandwich form ∇φᵀ Σ ∇φ, both evaluated at the plug-in
//! moments.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

/// Quadratic forms down to this value are treated as rounding noise and clamped to 0.
pub const QUADRATIC_FORM_TOLERANCE: f64 = 1e-10;

/// Mean of a 4-dimensional indicator vector. Components are probabilities of
/// joint events; they need not sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentVector([f64; 4]);

impl MomentVector {
    pub fn new(m: [f64; 4]) -> Result<Self> {
        if let Some(bad) = m.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "moment component {bad} is not a probability"
            )));
        }
        Ok(MomentVector(m))
    }

    /// Moments from indicator counts over `n` observations (maximum-likelihood proportions).
    pub fn from_counts(counts: [u64; 4], n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let n = n as f64;
        Self::new(counts.map(|c| c as f64 / n))
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientVector(pub [f64; 4]);

impl GradientVector {
    pub fn scaled(&self, c: f64) -> Self {
        GradientVector(self.0.map(|g| g * c))
    }
}

/// Symmetric 4×4 covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix([[f64; 4]; 4]);

impl CovarianceMatrix {
    /// Accepts a full matrix; entries must agree with their transpose to 1e-12.
    pub fn new(rows: [[f64; 4]; 4]) -> Result<Self> {
        for i in 0..4 {
            for j in 0..i {
                let (a, b) = (rows[i][j], rows[j][i]);
                if !a.is_finite() || !b.is_finite() || (a - b).abs() > 1e-12 {
                    return Err(Error::AsymmetricCovariance { row: i + 1, col: j + 1 });
                }
            }
        }
        Ok(CovarianceMatrix(rows))
    }

    /// Builds the matrix from its lower triangle, row by row: `lower[i]` holds
    /// entries (i, 0..=i).
    pub fn from_lower(lower: [&[f64]; 4]) -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in lower.iter().enumerate() {
            assert_eq!(row.len(), i + 1, "lower-triangle row {i} has wrong length");
            for (j, &v) in row.iter().enumerate() {
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        CovarianceMatrix(m)
    }

    pub fn zeros() -> Self {
        CovarianceMatrix([[0.0; 4]; 4])
    }

    /// Entry at 0-based (row, col).
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[row][col]
    }

    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.0
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let m = Matrix4::from_fn(|i, j| self.0[i][j]);
        let ev = m.symmetric_eigenvalues();
        [ev[0], ev[1], ev[2], ev[3]]
    }

    pub fn max_abs_diff(&self, other: &CovarianceMatrix) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }

    /// Checks the properties every covariance of Bernoulli indicators has:
    /// positive semidefinite (eigenvalues ≥ −tol) and diagonal in [0, 1/4].
    pub fn check_indicator_covariance(&self, tol: f64) -> Result<()> {
        for i in 0..4 {
            let d = self.0[i][i];
            if d < -tol || d > 0.25 + tol {
                return Err(Error::InvalidCovariance(format!(
                    "diagonal entry {} = {d} outside [0, 0.25]",
                    i + 1
                )));
            }
        }
        if let Some(ev) = self.eigenvalues().into_iter().find(|&e| e < -tol) {
            return Err(Error::InvalidCovariance(format!("eigenvalue {ev:e} is negative")));
        }
        Ok(())
    }
}

/// A two-sided confidence interval for a ratio estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioCI {
    pub point: f64,
    pub sigma: f64,
    pub n: u64,
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
}

impl RatioCI {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Outcome of the one-sided test H₀: θ ≤ β against H₁: θ > β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub reject_h0: bool,
    pub beta: f64,
    pub alpha: f64,
}

fn check_denominator(m: &MomentVector) -> Result<()> {
    if m.0[1] * m.0[2] == 0.0 {
        return Err(Error::DegenerateDenominator(format!(
            "x2 * x3 = {} * {} is zero",
            m.0[1], m.0[2]
        )));
    }
    Ok(())
}

/// φ(m) = m₁m₄ / (m₂m₃).
pub fn ratio_phi(m: &MomentVector) -> Result<f64> {
    check_denominator(m)?;
    let [m1, m2, m3, m4] = m.0;
    Ok(m1 * m4 / (m2 * m3))
}

/// ∇φ(m) = (m₄/(m₂m₃), −m₁m₄/(m₂²m₃), −m₁m₄/(m₂m₃²), m₁/(m₂m₃)).
pub fn ratio_gradient(m: &MomentVector) -> Result<GradientVector> {
    check_denominator(m)?;
    let [m1, m2, m3, m4] = m.0;
    let d = m2 * m3;
    Ok(GradientVector([
        m4 / d,
        -m1 * m4 / (m2 * d),
        -m1 * m4 / (d * m3),
        m1 / d,
    ]))
}

/// gᵀ Σ g. Slightly negative values (above −1e-10) are clamped to 0.
pub fn sandwich_variance(g: &GradientVector, cov: &CovarianceMatrix) -> Result<f64> {
    let mut q = 0.0;
    for i in 0..4 {
        let mut row = 0.0;
        for j in 0..4 {
            row += cov.0[i][j] * g.0[j];
        }
        q += g.0[i] * row;
    }
    if q.is_nan() {
        return Err(Error::InvalidArgument("quadratic form is NaN".into()));
    }
    if q < 0.0 {
        if q < -QUADRATIC_FORM_TOLERANCE {
            return Err(Error::NegativeQuadraticForm(q));
        }
        return Ok(0.0);
    }
    Ok(q)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(())
}

/// point ± (σ/√n)·z(1 − α/2).
pub fn clt_interval(point: f64, sigma: f64, n: u64, alpha: f64) -> Result<RatioCI> {
    check_alpha(alpha)?;
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let half = sigma / (n as f64).sqrt() * normal::quantile(1.0 - alpha / 2.0);
    Ok(RatioCI {
        point,
        sigma,
        n,
        alpha,
        lower: point - half,
        upper: point + half,
    })
}

/// Tests H₀: θ ≤ β against H₁: θ > β with the statistic (√n/σ)(point − β).
/// H₀ is rejected when the statistic reaches z(1 − α).
pub fn one_sided_test(point: f64, sigma: f64, n: u64, beta: f64, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    if sigma == 0.0 {
        return Err(Error::ZeroSigma);
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    let statistic = (n as f64).sqrt() / sigma * (point - beta);
    Ok(TestResult {
        statistic,
        p_value: normal::sf(statistic),
        reject_h0: statistic >= normal::quantile(1.0 - alpha),
        beta,
        alpha,
    })
}
