//! Delimited-file parsing, schema mapping, and dataset presets.
//!
//! A schema file is JSON with exactly these keys:
//!
//! ```json
//! {
//!   "prediction_column": "income",
//!   "label_column": "income",
//!   "group_column": "sex",
//!   "positive_prediction_values": [">50K"],
//!   "positive_label_values": [">50K"],
//!   "protected_group_values": ["Female"],
//!   "favored_group_values": ["Male"],
//!   "missing_policy": "drop"
//! }
//! ```
//!
//! `label_column` and `positive_label_values` may be omitted for label-free
//! audits; `missing_policy` defaults to `"drop"`. Unknown keys are rejected.

mod fetch;
mod schema;
mod table;

pub use fetch::{
    default_cache_dir, ensure_cached, fetch_dataset, Preset, Registry, CACHE_DIR_ENV, REGISTRY_ENV,
};
pub use schema::{
    apply_multigroup_schema, apply_schema, AuditTable, MissingPolicy, SchemaConfig, MISSING_TOKENS,
};
pub use table::{parse_bytes, parse_reader, parse_table, sha256_hex, ParseOptions, RawTable};
