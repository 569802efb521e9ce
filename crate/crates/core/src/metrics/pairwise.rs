use serde::{Deserialize, Serialize};

use super::{count_cells, estimate, AuditRecord, Group, Metric, MetricEstimate};
use crate::error::{Error, Result};

/// A record whose protected attribute has more than two levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiGroupRecord {
    pub prediction: bool,
    pub label: Option<bool>,
    pub group: String,
}

/// Compares every group against `reference`: each non-reference group G is
/// coded S = 0 and the reference S = 1, and `metric` is estimated on that
/// two-group table. Output follows first-appearance order of the groups.
pub fn pairwise_audits(
    records: &[MultiGroupRecord],
    reference: &str,
    metric: Metric,
    alpha: f64,
) -> Result<Vec<(String, MetricEstimate)>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.group.as_str()) {
            order.push(&r.group);
        }
    }
    if !order.contains(&reference) {
        return Err(Error::UnknownReferenceGroup(reference.to_string()));
    }
    if order.len() < 2 {
        return Err(Error::InvalidArgument(
            "pairwise audits need at least two distinct groups".into(),
        ));
    }

    let reference_records: Vec<AuditRecord> = records
        .iter()
        .filter(|r| r.group == reference)
        .map(|r| AuditRecord::new(r.prediction, r.label, Group::Favored))
        .collect();

    order
        .into_iter()
        .filter(|g| *g != reference)
        .map(|g| {
            let mut pair: Vec<AuditRecord> = records
                .iter()
                .filter(|r| r.group == g)
                .map(|r| AuditRecord::new(r.prediction, r.label, Group::Protected))
                .collect();
            pair.extend_from_slice(&reference_records);
            let cells = count_cells(&pair)?;
            Ok((g.to_string(), estimate(&cells, metric, alpha)?))
        })
        .collect()
}
