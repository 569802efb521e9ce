//! Independent checks of the closed-form asymptotics.
//!
//! * [`exact_moments`] enumerates the atoms of a cell distribution to get the
//!   exact mean and covariance of a metric's indicator vector.
//! * [`coverage_simulation`] and [`rejection_rate_simulation`] draw repeated
//!   samples and count how often the interval covers, or the test rejects.
//! * [`bootstrap_sigma`] is the resampling comparator for σ.
//! * [`adjudicate_matrix`] measures how far printed and corrected covariance
//!   forms sit from the enumeration oracle.
//!
//! Every stochastic routine is a pure function of its inputs and seed.
//! Replicate `r` draws from [`substream`]`(seed, r)`, so parallel and
//! sequential execution give identical results.

mod distribution;
mod oracle;
mod simulate;

pub use distribution::CellDistribution;
pub use oracle::{
    adjudicate_matrix, empirical_indicator_covariance, exact_moments, AdjudicationReport,
};
pub use simulate::{
    bootstrap, bootstrap_sigma, compare_bootstrap, coverage_simulation, ks_distance_to_normal,
    rejection_rate_simulation, standardized_statistics, substream, BootstrapComparison, BootstrapSummary,
    CoverageReport, SizeReport, MIN_BOOTSTRAP_RESAMPLES, MIN_REPLICATES,
};
