use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distribution::CellDistribution;
use crate::delta::one_sided_test;
use crate::error::{Error, Result};
use crate::metrics::{count_cells, estimate, AuditRecord, Metric};
use crate::normal;

pub const MIN_REPLICATES: usize = 100;
pub const MIN_BOOTSTRAP_RESAMPLES: usize = 200;
/// Largest fraction of bootstrap resamples allowed to be degenerate.
const MAX_BOOTSTRAP_DISCARD: f64 = 0.10;

/// Random stream for replicate `index` under `seed`.
///
/// ChaCha8 keyed by `seed` (expanded with `seed_from_u64`), with the 64-bit
/// ChaCha stream id set to `index`. Streams never overlap, and the output is
/// identical on every platform.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageReport {
    pub metric: Metric,
    pub true_value: f64,
    pub nominal: f64,
    /// Fraction of retained replicates whose interval contains `true_value`.
    pub empirical: f64,
    pub covered: usize,
    pub replicates: usize,
    /// Replicates dropped because a denominator cell was empty.
    pub discarded: usize,
    pub n_per_replicate: u64,
    pub seed: u64,
}

impl CoverageReport {
    pub fn retained(&self) -> usize {
        self.replicates - self.discarded
    }

    pub fn discard_rate(&self) -> f64 {
        self.discarded as f64 / self.replicates as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeReport {
    pub metric: Metric,
    pub true_value: f64,
    pub beta: f64,
    pub alpha: f64,
    /// Fraction of retained replicates in which H₀: θ ≤ β was rejected.
    pub rejection_rate: f64,
    pub rejections: usize,
    pub replicates: usize,
    pub discarded: usize,
    pub n_per_replicate: u64,
    pub seed: u64,
}

fn check_sim_args(n: u64, replicates: usize, alpha: f64) -> Result<()> {
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_REPLICATES} replicates are required, got {replicates}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Per-replicate outcome; `None` marks a degenerate replicate.
fn run_replicates<T, F>(
    dist: &CellDistribution,
    n: u64,
    replicates: usize,
    seed: u64,
    f: F,
) -> Vec<Option<T>>
where
    T: Send,
    F: Fn(&crate::metrics::CellCounts) -> Option<T> + Sync,
{
    let sampler = dist.sampler();
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r as u64);
            let cells = sampler.counts(n, &mut rng);
            f(&cells)
        })
        .collect()
}

/// Repeats the experiment `replicates` times with samples of size `n` and
/// reports how often the plug-in interval contains the true value.
pub fn coverage_simulation(
    dist: &CellDistribution,
    metric: Metric,
    n: u64,
    replicates: usize,
    alpha: f64,
    seed: u64,
) -> Result<CoverageReport> {
    check_sim_args(n, replicates, alpha)?;
    let truth = dist.true_value(metric)?;
    let outcomes = run_replicates(dist, n, replicates, seed, |cells| {
        estimate(cells, metric, alpha).ok().map(|e| e.ci.contains(truth))
    });
    let discarded = outcomes.iter().filter(|o| o.is_none()).count();
    let covered = outcomes.iter().filter(|o| **o == Some(true)).count();
    let retained = replicates - discarded;
    if retained == 0 {
        return Err(Error::DegenerateDistribution(
            "every replicate had an empty denominator cell".into(),
        ));
    }
    Ok(CoverageReport {
        metric,
        true_value: truth,
        nominal: 1.0 - alpha,
        empirical: covered as f64 / retained as f64,
        covered,
        replicates,
        discarded,
        n_per_replicate: n,
        seed,
    })
}

/// Rejection frequency of the one-sided test of H₀: θ ≤ β.
pub fn rejection_rate_simulation(
    dist: &CellDistribution,
    metric: Metric,
    n: u64,
    replicates: usize,
    beta: f64,
    alpha: f64,
    seed: u64,
) -> Result<SizeReport> {
    check_sim_args(n, replicates, alpha)?;
    let truth = dist.true_value(metric)?;
    let outcomes = run_replicates(dist, n, replicates, seed, |cells| {
        let e = estimate(cells, metric, alpha).ok()?;
        one_sided_test(e.point, e.sigma, e.n, beta, alpha)
            .ok()
            .map(|t| t.reject_h0)
    });
    let discarded = outcomes.iter().filter(|o| o.is_none()).count();
    let rejections = outcomes.iter().filter(|o| **o == Some(true)).count();
    let retained = replicates - discarded;
    if retained == 0 {
        return Err(Error::DegenerateDistribution(
            "every replicate was degenerate".into(),
        ));
    }
    Ok(SizeReport {
        metric,
        true_value: truth,
        beta,
        alpha,
        rejection_rate: rejections as f64 / retained as f64,
        rejections,
        replicates,
        discarded,
        n_per_replicate: n,
        seed,
    })
}

/// (√n/σ̂)(T̂ − θ) for each non-degenerate replicate, in replicate order.
pub fn standardized_statistics(
    dist: &CellDistribution,
    metric: Metric,
    n: u64,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_sim_args(n, replicates, 0.05)?;
    let truth = dist.true_value(metric)?;
    let root_n = (n as f64).sqrt();
    let outcomes = run_replicates(dist, n, replicates, seed, |cells| {
        let e = estimate(cells, metric, 0.05).ok()?;
        (e.sigma > 0.0).then(|| root_n / e.sigma * (e.point - truth))
    });
    Ok(outcomes.into_iter().flatten().collect())
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `values` and Φ.
pub fn ks_distance_to_normal(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal::cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSummary {
    pub metric: Metric,
    /// √n times the standard deviation of the resampled point estimates.
    pub sigma: f64,
    pub resamples: usize,
    pub discarded: usize,
    pub seed: u64,
}

/// Nonparametric bootstrap of the point estimate; see [`bootstrap_sigma`].
pub fn bootstrap(
    records: &[AuditRecord],
    metric: Metric,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    if resamples < MIN_BOOTSTRAP_RESAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_BOOTSTRAP_RESAMPLES} resamples are required, got {resamples}"
        )));
    }
    // Fails early if the metric is not computable on the full sample.
    estimate(&count_cells(records)?, metric, 0.05)?;

    let n = records.len();
    let points: Vec<Option<f64>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b as u64);
            let sample: Vec<AuditRecord> =
                (0..n).map(|_| records[rng.random_range(0..n)]).collect();
            let cells = count_cells(&sample).ok()?;
            estimate(&cells, metric, 0.05).ok().map(|e| e.point)
        })
        .collect();

    let kept: Vec<f64> = points.iter().flatten().copied().collect();
    let discarded = resamples - kept.len();
    if discarded as f64 > MAX_BOOTSTRAP_DISCARD * resamples as f64 || kept.len() < 2 {
        return Err(Error::TooManyDegenerateResamples {
            discarded,
            resamples,
        });
    }
    let k = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / k;
    let var = kept.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(BootstrapSummary {
        metric,
        sigma: var.sqrt() * (n as f64).sqrt(),
        resamples,
        discarded,
        seed,
    })
}

/// Bootstrap standard deviation of the point estimate, scaled by √n so it is
/// comparable with the delta-method σ.
pub fn bootstrap_sigma(
    records: &[AuditRecord],
    metric: Metric,
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    bootstrap(records, metric, resamples, seed).map(|b| b.sigma)
}

/// Delta-method and bootstrap σ on one simulated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapComparison {
    pub metric: Metric,
    pub n: u64,
    pub point: f64,
    pub delta_sigma: f64,
    pub bootstrap: BootstrapSummary,
    /// |σ_bootstrap − σ_delta| / σ_delta.
    pub relative_gap: f64,
}

/// Draws one sample of size `n` from `dist` (stream `u64::MAX` of `seed`,
/// which replicate streams never reach) and compares the plug-in σ with the
/// bootstrap σ computed under `seed`.
pub fn compare_bootstrap(
    dist: &CellDistribution,
    metric: Metric,
    n: u64,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapComparison> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let records = dist.sample(n as usize, &mut substream(seed, u64::MAX));
    let est = estimate(&count_cells(&records)?, metric, 0.05)?;
    let bootstrap = bootstrap(&records, metric, resamples, seed)?;
    if est.sigma == 0.0 {
        return Err(Error::ZeroSigma);
    }
    Ok(BootstrapComparison {
        metric,
        n,
        point: est.point,
        delta_sigma: est.sigma,
        relative_gap: (bootstrap.sigma - est.sigma).abs() / est.sigma,
        bootstrap,
    })
}
