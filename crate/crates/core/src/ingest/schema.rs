use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::table::{parse_bytes, ParseOptions, RawTable};
use crate::error::{Error, Result};
use crate::metrics::{AuditRecord, Group, MultiGroupRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Skip the row and count it in `n_dropped`.
    #[default]
    Drop,
    /// Abort ingestion.
    Error,
}

/// Tokens treated as a missing value in prediction and label columns.
pub const MISSING_TOKENS: [&str; 6] = ["", "?", "NA", "N/A", "NaN", "null"];

/// Declarative mapping from raw columns to (prediction, label, group).
///
/// A prediction or label value is 1 when it is listed in the positive set, a
/// missing token (see [`MISSING_TOKENS`]) is handled by `missing_policy`, and
/// anything else is 0. A group value must be listed in either the protected
/// set (S = 0) or the favored set (S = 1); other values follow `missing_policy`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    pub prediction_column: String,
    #[serde(default)]
    pub label_column: Option<String>,
    pub group_column: String,
    pub positive_prediction_values: BTreeSet<String>,
    #[serde(default)]
    pub positive_label_values: BTreeSet<String>,
    pub protected_group_values: BTreeSet<String>,
    pub favored_group_values: BTreeSet<String>,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
}

impl SchemaConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let schema: SchemaConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidSchema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positive_prediction_values.is_empty() {
            return Err(Error::InvalidSchema("positive_prediction_values is empty".into()));
        }
        if self.label_column.is_some() && self.positive_label_values.is_empty() {
            return Err(Error::InvalidSchema("positive_label_values is empty".into()));
        }
        if self.protected_group_values.is_empty() || self.favored_group_values.is_empty() {
            return Err(Error::InvalidSchema("both group value sets must be nonempty".into()));
        }
        if let Some(v) = self.protected_group_values.intersection(&self.favored_group_values).next() {
            return Err(Error::InvalidSchema(format!(
                "group value {v:?} is both protected and favored"
            )));
        }
        Ok(())
    }

    /// Schema that reads the CSV written by [`AuditTable::to_canonical_csv`].
    pub fn canonical(with_labels: bool) -> Self {
        let one = || BTreeSet::from(["1".to_string()]);
        SchemaConfig {
            prediction_column: "prediction".into(),
            label_column: with_labels.then(|| "label".into()),
            group_column: "group".into(),
            positive_prediction_values: one(),
            positive_label_values: if with_labels { one() } else { BTreeSet::new() },
            protected_group_values: BTreeSet::from(["0".to_string()]),
            favored_group_values: one(),
            missing_policy: MissingPolicy::Error,
        }
    }
}

/// Ingested records plus provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditTable {
    pub records: Vec<AuditRecord>,
    /// Rows dropped while parsing or mapping.
    pub n_dropped: usize,
    pub source: String,
    pub checksum: Option<String>,
}

impl AuditTable {
    pub fn has_labels(&self) -> bool {
        self.records.first().is_some_and(|r| r.label.is_some())
    }

    /// `prediction,label,group` with 0/1 values; the label field is empty
    /// when the table has no labels.
    pub fn to_canonical_csv(&self) -> String {
        let bit = |b: bool| if b { "1" } else { "0" };
        let mut out = String::from("prediction,label,group\n");
        for r in &self.records {
            out.push_str(bit(r.prediction));
            out.push(',');
            if let Some(y) = r.label {
                out.push_str(bit(y));
            }
            out.push(',');
            out.push_str(bit(r.group == Group::Favored));
            out.push('\n');
        }
        out
    }

    pub fn from_canonical_csv(text: &str, source: &str) -> Result<Self> {
        let raw = parse_bytes(text.as_bytes(), &ParseOptions::default(), source)?;
        let with_labels = raw.rows.first().is_some_and(|r| r.get(1).is_some_and(|v| !v.is_empty()));
        apply_schema(&raw, &SchemaConfig::canonical(with_labels))
    }
}

struct Columns {
    prediction: usize,
    label: Option<usize>,
    group: usize,
}

fn resolve(raw: &RawTable, schema: &SchemaConfig, group_column: &str) -> Result<Columns> {
    schema.validate()?;
    Ok(Columns {
        prediction: raw.column(&schema.prediction_column)?,
        label: schema
            .label_column
            .as_deref()
            .map(|c| raw.column(c))
            .transpose()?,
        group: raw.column(group_column)?,
    })
}

enum Mapped<T> {
    Value(T),
    Unmappable(usize),
}

fn binary(row: &[String], col: usize, positives: &BTreeSet<String>) -> Mapped<bool> {
    let v = row[col].as_str();
    if MISSING_TOKENS.contains(&v) {
        Mapped::Unmappable(col)
    } else {
        Mapped::Value(positives.contains(v))
    }
}

fn map_outcomes(row: &[String], cols: &Columns, schema: &SchemaConfig) -> Mapped<(bool, Option<bool>)> {
    let prediction = match binary(row, cols.prediction, &schema.positive_prediction_values) {
        Mapped::Value(v) => v,
        Mapped::Unmappable(c) => return Mapped::Unmappable(c),
    };
    let label = match cols.label {
        None => None,
        Some(c) => match binary(row, c, &schema.positive_label_values) {
            Mapped::Value(v) => Some(v),
            Mapped::Unmappable(c) => return Mapped::Unmappable(c),
        },
    };
    Mapped::Value((prediction, label))
}

fn unmappable(raw: &RawTable, row_idx: usize, col: usize) -> Error {
    Error::UnmappableValue {
        row: row_idx + 1,
        column: raw.headers[col].clone(),
        value: raw.rows[row_idx][col].clone(),
    }
}

/// Maps every raw row to an [`AuditRecord`]. Order is preserved.
pub fn apply_schema(raw: &RawTable, schema: &SchemaConfig) -> Result<AuditTable> {
    let cols = resolve(raw, schema, &schema.group_column)?;
    let mut records = Vec::with_capacity(raw.rows.len());
    let mut n_dropped = raw.n_dropped;
    for (i, row) in raw.rows.iter().enumerate() {
        let g = row[cols.group].as_str();
        let group = if schema.protected_group_values.contains(g) {
            Mapped::Value(Group::Protected)
        } else if schema.favored_group_values.contains(g) {
            Mapped::Value(Group::Favored)
        } else {
            Mapped::Unmappable(cols.group)
        };
        let mapped = match (group, map_outcomes(row, &cols, schema)) {
            (Mapped::Value(s), Mapped::Value((p, y))) => Mapped::Value(AuditRecord::new(p, y, s)),
            (Mapped::Unmappable(c), _) | (_, Mapped::Unmappable(c)) => Mapped::Unmappable(c),
        };
        match mapped {
            Mapped::Value(r) => records.push(r),
            Mapped::Unmappable(c) => match schema.missing_policy {
                MissingPolicy::Drop => n_dropped += 1,
                MissingPolicy::Error => return Err(unmappable(raw, i, c)),
            },
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(AuditTable {
        records,
        n_dropped,
        source: raw.source.clone(),
        checksum: Some(raw.checksum.clone()),
    })
}

/// Multi-group variant: the raw group value is kept as is, and the group
/// value sets of `schema` are not consulted. Rows with a missing group value
/// follow `missing_policy`.
pub fn apply_multigroup_schema(
    raw: &RawTable,
    schema: &SchemaConfig,
    group_column: &str,
) -> Result<(Vec<MultiGroupRecord>, usize)> {
    let cols = resolve(raw, schema, group_column)?;
    let mut out = Vec::with_capacity(raw.rows.len());
    let mut n_dropped = raw.n_dropped;
    for (i, row) in raw.rows.iter().enumerate() {
        let g = &row[cols.group];
        let mapped = if MISSING_TOKENS.contains(&g.as_str()) {
            Mapped::Unmappable(cols.group)
        } else {
            map_outcomes(row, &cols, schema)
        };
        match mapped {
            Mapped::Value((prediction, label)) => out.push(MultiGroupRecord {
                prediction,
                label,
                group: g.clone(),
            }),
            Mapped::Unmappable(c) => match schema.missing_policy {
                MissingPolicy::Drop => n_dropped += 1,
                MissingPolicy::Error => return Err(unmappable(raw, i, c)),
            },
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok((out, n_dropped))
}
