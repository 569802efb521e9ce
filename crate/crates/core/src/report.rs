//! Audit and validation reports: construction, JSON form, text summary and
//! plot series.
//!
//! Every report is a JSON object tagged by `"kind"` (`"audit"` or
//! `"validation"`) and carries `schema_version`. Reading rejects unknown
//! fields, so a report that parses is one this version of the tool wrote.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::delta::TestResult;
use crate::error::{Error, Result};
use crate::ingest::AuditTable;
use crate::metrics::{
    count_cells, estimate, pairwise_audits, statistical_parity_gap, test_disparate_impact,
    CellCounts, Metric, MetricEstimate, MultiGroupRecord,
};
use crate::normal;
use crate::validation::{
    bootstrap, AdjudicationReport, BootstrapComparison, BootstrapSummary, CellDistribution,
    CoverageReport, SizeReport,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Which metrics an audit computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricSelection {
    Di,
    DiTrue,
    Ca,
    Cu,
    ParityGap,
    All,
}

impl MetricSelection {
    pub fn metrics(self) -> &'static [Metric] {
        match self {
            MetricSelection::Di => &[Metric::Dia],
            MetricSelection::DiTrue => &[Metric::DiTrue],
            MetricSelection::Ca => &[Metric::Ca1, Metric::Ca0],
            MetricSelection::Cu => &[Metric::Cu1, Metric::Cu0],
            MetricSelection::ParityGap => &[],
            MetricSelection::All => &Metric::ALL,
        }
    }

    fn includes_parity_gap(self) -> bool {
        matches!(self, MetricSelection::ParityGap | MetricSelection::All)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetDescriptor {
    pub source: String,
    pub preset: Option<String>,
    pub checksum: Option<String>,
    pub n_records: u64,
    pub n_dropped: u64,
    pub has_labels: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricTest {
    pub metric: Metric,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairwiseEntry {
    pub group: String,
    pub reference: String,
    pub estimate: MetricEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditReport {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub timestamp: String,
    pub dataset: DatasetDescriptor,
    pub alpha: f64,
    pub beta: f64,
    pub seed: Option<u64>,
    pub cells: CellCounts,
    pub estimates: Vec<MetricEstimate>,
    pub tests: Vec<MetricTest>,
    pub parity_gap: Option<f64>,
    pub bootstrap: Vec<BootstrapSummary>,
    pub pairwise: Vec<PairwiseEntry>,
    pub warnings: Vec<String>,
}

/// Settings for [`run_audit`].
#[derive(Debug, Clone)]
pub struct AuditOptions {
    pub selection: MetricSelection,
    pub alpha: f64,
    pub beta: f64,
    pub preset: Option<String>,
    /// Bootstrap resamples per metric; `None` skips the bootstrap.
    pub bootstrap_resamples: Option<usize>,
    pub seed: u64,
    /// Multi-group records and the reference group for pairwise ratios.
    pub pairwise: Option<(Vec<MultiGroupRecord>, String)>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            selection: MetricSelection::All,
            alpha: crate::metrics::DEFAULT_ALPHA,
            beta: crate::metrics::DEFAULT_BETA,
            preset: None,
            bootstrap_resamples: None,
            seed: 0,
            pairwise: None,
        }
    }
}

fn check_level(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

/// Computes the selected metrics, their one-sided tests against β, and the
/// optional bootstrap and pairwise extras.
///
/// With `MetricSelection::All`, metrics that need labels the table lacks, or
/// whose denominators are empty, are skipped with a warning. An explicitly
/// selected metric that cannot be computed is an error.
pub fn run_audit(table: &AuditTable, opts: &AuditOptions) -> Result<AuditReport> {
    check_level(opts.alpha, opts.beta)?;
    let cells = count_cells(&table.records)?;
    let lenient = opts.selection == MetricSelection::All;
    let mut warnings = Vec::new();
    if table.n_dropped > 0 {
        warnings.push(format!("{} rows dropped during ingestion", table.n_dropped));
    }

    let mut estimates = Vec::new();
    for &metric in opts.selection.metrics() {
        match estimate(&cells, metric, opts.alpha) {
            Ok(e) => estimates.push(e),
            Err(e) if lenient && e.is_data_error() => {
                warnings.push(format!("{metric} skipped: {e}"));
            }
            Err(e) => return Err(e),
        }
    }

    let mut tests = Vec::new();
    for e in &estimates {
        match test_disparate_impact(e, opts.beta, opts.alpha) {
            Ok(result) => tests.push(MetricTest {
                metric: e.metric,
                result,
            }),
            Err(Error::ZeroSigma) => {
                warnings.push(format!("{}: sigma is zero, test not performed", e.metric));
            }
            Err(err) => return Err(err),
        }
        for w in &e.warnings {
            warnings.push(format!("{}: {w}", e.metric));
        }
    }

    let parity_gap = if opts.selection.includes_parity_gap() {
        match statistical_parity_gap(&cells) {
            Ok(g) => Some(g),
            Err(e) if lenient => {
                warnings.push(format!("parity gap skipped: {e}"));
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let mut boot = Vec::new();
    if let Some(resamples) = opts.bootstrap_resamples {
        for e in &estimates {
            boot.push(bootstrap(&table.records, e.metric, resamples, opts.seed)?);
        }
    }

    let mut pairwise = Vec::new();
    if let Some((records, reference)) = &opts.pairwise {
        let metrics: Vec<Metric> = estimates.iter().map(|e| e.metric).collect();
        let metrics = if metrics.is_empty() { vec![Metric::Dia] } else { metrics };
        for metric in metrics {
            for (group, estimate) in pairwise_audits(records, reference, metric, opts.alpha)? {
                pairwise.push(PairwiseEntry {
                    group,
                    reference: reference.clone(),
                    estimate,
                });
            }
        }
    }

    Ok(AuditReport {
        schema_version: SCHEMA_VERSION,
        tool: ToolInfo::current(),
        timestamp: now(),
        dataset: DatasetDescriptor {
            source: table.source.clone(),
            preset: opts.preset.clone(),
            checksum: table.checksum.clone(),
            n_records: table.records.len() as u64,
            n_dropped: table.n_dropped as u64,
            has_labels: table.has_labels(),
        },
        alpha: opts.alpha,
        beta: opts.beta,
        seed: opts.bootstrap_resamples.map(|_| opts.seed),
        cells,
        estimates,
        tests,
        parity_gap,
        bootstrap: boot,
        pairwise,
        warnings,
    })
}

fn fmt_ci(lower: f64, upper: f64) -> String {
    format!("[{lower:.4}, {upper:.4}]")
}

impl AuditReport {
    /// Human-readable summary. Every point estimate is printed with its
    /// interval.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let d = &self.dataset;
        let level = 100.0 * (1.0 - self.alpha);
        let _ = writeln!(s, "source: {}", d.source);
        let _ = writeln!(s, "records: {} (dropped {})", d.n_records, d.n_dropped);
        let _ = writeln!(s, "alpha = {}, beta = {}", self.alpha, self.beta);
        if !self.estimates.is_empty() {
            let _ = writeln!(
                s,
                "\n{:<8} {:>8} {:<18} {:>8}  H0: ratio <= {}",
                "metric",
                "point",
                format!("{level}% CI"),
                "sigma",
                self.beta
            );
        }
        for e in &self.estimates {
            let test = self
                .tests
                .iter()
                .find(|t| t.metric == e.metric)
                .map(|t| {
                    let verdict = if t.result.reject_h0 { "rejected" } else { "not rejected" };
                    format!("{verdict} (p = {:.4})", t.result.p_value)
                })
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<8} {:>8.4} {:<18} {:>8.4}  {}",
                e.metric.name(),
                e.point,
                fmt_ci(e.ci.lower, e.ci.upper),
                e.sigma,
                test
            );
        }
        for b in &self.bootstrap {
            let _ = writeln!(
                s,
                "bootstrap sigma for {}: {:.4} ({} resamples, {} discarded)",
                b.metric.name(),
                b.sigma,
                b.resamples,
                b.discarded
            );
        }
        if !self.pairwise.is_empty() {
            let _ = writeln!(s, "\npairwise against reference group:");
            for p in &self.pairwise {
                let e = &p.estimate;
                let _ = writeln!(
                    s,
                    "{:<8} {} vs {}: {:.4} {}",
                    e.metric.name(),
                    p.group,
                    p.reference,
                    e.point,
                    fmt_ci(e.ci.lower, e.ci.upper)
                );
            }
        }
        if let Some(g) = self.parity_gap {
            let _ = writeln!(s, "\nstatistical parity gap P(g=1|S=0) - P(g=1|S=1): {g:.4}");
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(s, "\nwarnings:");
            for w in &self.warnings {
                let _ = writeln!(s, "  {w}");
            }
        }
        s
    }
}

/// Result body of a `validate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ValidationResult {
    Coverage(CoverageReport),
    Size(SizeReport),
    Adjudication(AdjudicationReport),
    Bootstrap(BootstrapComparison),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationReport {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub timestamp: String,
    pub seed: u64,
    /// The sampling distribution, when the run draws from one.
    pub distribution: Option<CellDistribution>,
    pub result: ValidationResult,
}

impl ValidationReport {
    pub fn new(seed: u64, distribution: Option<CellDistribution>, result: ValidationResult) -> Self {
        ValidationReport {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo::current(),
            timestamp: now(),
            seed,
            distribution,
            result,
        }
    }

    pub fn summary(&self) -> String {
        match &self.result {
            ValidationResult::Coverage(c) => format!(
                "{} coverage: {:.4} (nominal {:.2}); {} of {} retained replicates covered {:.6}; {} discarded; n = {}\n",
                c.metric.name(),
                c.empirical,
                c.nominal,
                c.covered,
                c.retained(),
                c.true_value,
                c.discarded,
                c.n_per_replicate
            ),
            ValidationResult::Size(r) => format!(
                "{} rejection rate of H0: ratio <= {} at true value {:.6}: {:.4} (alpha {}); {} of {} retained; {} discarded; n = {}\n",
                r.metric.name(),
                r.beta,
                r.true_value,
                r.rejection_rate,
                r.alpha,
                r.rejections,
                r.replicates - r.discarded,
                r.discarded,
                r.n_per_replicate
            ),
            ValidationResult::Adjudication(a) => format!(
                "{} over {} distributions: corrected form max deviation {:.3e} ({}), printed form max deviation {:.3e} at entries {:?}\n",
                a.metric.name(),
                a.trials,
                a.corrected_max_deviation,
                if a.corrected_form_agrees() { "agrees" } else { "DISAGREES" },
                a.printed_max_deviation,
                a.printed_deviating_entries
            ),
            ValidationResult::Bootstrap(b) => format!(
                "{} at n = {}: point {:.4}, delta-method sigma {:.4}, bootstrap sigma {:.4} ({} resamples), relative gap {:.3}\n",
                b.metric.name(),
                b.n,
                b.point,
                b.delta_sigma,
                b.bootstrap.sigma,
                b.bootstrap.resamples,
                b.relative_gap
            ),
        }
    }
}

/// Any report this tool writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Audit(AuditReport),
    Validation(ValidationReport),
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Report = serde_json::from_str(text)?;
        let version = match &report {
            Report::Audit(a) => a.schema_version,
            Report::Validation(v) => v.schema_version,
        };
        if version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "report schema version {version} is not supported (expected {SCHEMA_VERSION})"
            )));
        }
        Ok(report)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let unreadable = |message: String| Error::UnreadableReport {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| unreadable(e.to_string()))?;
        Self::from_json(&text).map_err(|e| unreadable(e.to_string()))
    }

    /// The JSON with the timestamp blanked, for determinism comparisons.
    pub fn without_timestamp(&self) -> Self {
        let mut r = self.clone();
        match &mut r {
            Report::Audit(a) => a.timestamp.clear(),
            Report::Validation(v) => v.timestamp.clear(),
        }
        r
    }

    /// Plot-ready rows, in report order.
    pub fn plot_rows(&self) -> Result<Vec<PlotRow>> {
        match self {
            Report::Audit(a) => {
                let mut rows: Vec<PlotRow> = a
                    .estimates
                    .iter()
                    .map(|e| PlotRow::new(e.metric.name(), e.point, e.ci.lower, e.ci.upper))
                    .collect();
                rows.extend(a.pairwise.iter().map(|p| {
                    let e = &p.estimate;
                    PlotRow::new(
                        format!("{}:{}", e.metric.name(), p.group),
                        e.point,
                        e.ci.lower,
                        e.ci.upper,
                    )
                }));
                Ok(rows)
            }
            Report::Validation(v) => match &v.result {
                ValidationResult::Coverage(c) => Ok(vec![wald_row(
                    c.metric.name(),
                    c.empirical,
                    c.retained(),
                    1.0 - c.nominal,
                )]),
                ValidationResult::Size(r) => Ok(vec![wald_row(
                    r.metric.name(),
                    r.rejection_rate,
                    r.replicates - r.discarded,
                    0.05,
                )]),
                ValidationResult::Bootstrap(b) => {
                    let z = normal::quantile(0.975);
                    let half = |sigma: f64| z * sigma / (b.n as f64).sqrt();
                    let name = b.metric.name();
                    Ok(vec![
                        PlotRow::new(format!("{name}:delta"), b.point, b.point - half(b.delta_sigma), b.point + half(b.delta_sigma)),
                        PlotRow::new(format!("{name}:bootstrap"), b.point, b.point - half(b.bootstrap.sigma), b.point + half(b.bootstrap.sigma)),
                    ])
                }
                ValidationResult::Adjudication(_) => Err(Error::InvalidArgument(
                    "adjudication reports have no interval series to plot".into(),
                )),
            },
        }
    }
}

/// Binomial proportion with its Wald band at level 1 − `alpha`.
fn wald_row(metric: &str, p: f64, trials: usize, alpha: f64) -> PlotRow {
    let half = normal::quantile(1.0 - alpha / 2.0) * (p * (1.0 - p) / trials as f64).sqrt();
    PlotRow::new(metric, p, (p - half).max(0.0), (p + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub metric: String,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

impl PlotRow {
    fn new(metric: impl Into<String>, point: f64, lower: f64, upper: f64) -> Self {
        PlotRow {
            metric: metric.into(),
            point,
            lower,
            upper,
        }
    }
}

/// `metric,point,lower,upper` CSV.
pub fn plot_csv(rows: &[PlotRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{AuditRecord, Group};

    fn table() -> AuditTable {
        let mut records = Vec::new();
        for (g, y, s, k) in [
            (true, true, Group::Protected, 30),
            (false, true, Group::Protected, 20),
            (true, false, Group::Protected, 10),
            (false, false, Group::Protected, 40),
            (true, true, Group::Favored, 50),
            (false, true, Group::Favored, 10),
            (true, false, Group::Favored, 15),
            (false, false, Group::Favored, 25),
        ] {
            records.extend(std::iter::repeat_n(AuditRecord::new(g, Some(y), s), k));
        }
        AuditTable {
            records,
            n_dropped: 2,
            source: "mem".into(),
            checksum: None,
        }
    }

    #[test]
    fn all_metrics_in_canonical_order() {
        let r = run_audit(&table(), &AuditOptions::default()).unwrap();
        let names: Vec<_> = r.estimates.iter().map(|e| e.metric.name()).collect();
        assert_eq!(names, ["DIA", "DI_true", "CA1", "CA0", "CU1", "CU0"]);
        assert_eq!(r.tests.len(), 6);
        assert!(r.parity_gap.is_some());
        assert!(r.warnings.iter().any(|w| w.contains("2 rows dropped")));
    }

    #[test]
    fn explicit_label_metric_without_labels_fails() {
        let mut t = table();
        for r in &mut t.records {
            r.label = None;
        }
        let opts = AuditOptions {
            selection: MetricSelection::Ca,
            ..Default::default()
        };
        assert!(matches!(run_audit(&t, &opts), Err(Error::LabelsMissing(_))));
        let all = run_audit(&t, &AuditOptions::default()).unwrap();
        assert_eq!(all.estimates.len(), 1);
    }

    #[test]
    fn report_round_trips_and_rejects_unknown_fields() {
        let r = Report::Audit(run_audit(&table(), &AuditOptions::default()).unwrap());
        let json = r.to_json();
        assert_eq!(Report::from_json(&json).unwrap(), r);
        let tampered = json.replacen("\"alpha\"", "\"extra\": 1,\n  \"alpha\"", 1);
        assert!(Report::from_json(&tampered).is_err());
    }

    #[test]
    fn plot_rows_follow_report_order() {
        let r = Report::Audit(run_audit(&table(), &AuditOptions::default()).unwrap());
        let csv = plot_csv(&r.plot_rows().unwrap()).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "metric,point,lower,upper");
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("DIA,"));
    }

    #[test]
    fn summary_shows_interval_next_to_point() {
        let r = run_audit(&table(), &AuditOptions::default()).unwrap();
        let e = &r.estimates[0];
        let line = r.summary().lines().find(|l| l.starts_with("DIA")).unwrap().to_string();
        assert!(line.contains(&format!("{:.4} [{:.4}, {:.4}]", e.point, e.ci.lower, e.ci.upper)));
    }
}
