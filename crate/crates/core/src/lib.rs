//! Fairness audits with asymptotic confidence intervals.
//!
//! The crate estimates disparate impact and the conditional accuracy / use
//! ratios from (prediction, label, group) tables, attaches delta-method
//! intervals and one-sided tests, and ships the oracles and simulations used
//! to check those intervals.

pub mod delta;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod normal;
pub mod report;
pub mod validation;

pub use delta::{
    clt_interval, one_sided_test, ratio_gradient, ratio_phi, sandwich_variance, CovarianceMatrix,
    GradientVector, MomentVector, RatioCI, TestResult,
};
pub use error::{Error, Result};
pub use metrics::{AuditRecord, CellCounts, Group, Metric, MetricEstimate};
