use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::MissingPolicy;
use crate::error::{Error, Result};

/// How a delimited file is laid out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParseOptions {
    /// Single-byte field delimiter, e.g. `","` or `" "`.
    pub delimiter: String,
    pub has_header: bool,
    /// Column names for files without a header row.
    pub column_names: Option<Vec<String>>,
    /// Strip surrounding whitespace from every field.
    pub trim: bool,
    /// What to do with rows whose field count differs from the header.
    pub ragged_rows: MissingPolicy,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            delimiter: ",".into(),
            has_header: true,
            column_names: None,
            trim: false,
            ragged_rows: MissingPolicy::Drop,
        }
    }
}

impl ParseOptions {
    fn delimiter_byte(&self) -> Result<u8> {
        match self.delimiter.as_bytes() {
            [b] => Ok(*b),
            _ if self.delimiter == "\\t" => Ok(b'\t'),
            _ => Err(Error::InvalidSchema(format!(
                "delimiter must be a single byte, got {:?}",
                self.delimiter
            ))),
        }
    }
}

/// Rows of text fields with resolved column names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Data rows seen in the input, including dropped ones.
    pub rows_seen: usize,
    pub n_dropped: usize,
    pub source: String,
    /// Lowercase hex SHA-256 of the input bytes.
    pub checksum: String,
}

impl RawTable {
    /// Index of the first column called `name`.
    pub fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses a file; see [`parse_bytes`].
pub fn parse_table(path: &Path, opts: &ParseOptions) -> Result<RawTable> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_bytes(&bytes, opts, &path.display().to_string())
}

/// Parses a byte stream; see [`parse_bytes`].
pub fn parse_reader<R: Read>(mut reader: R, opts: &ParseOptions, source: &str) -> Result<RawTable> {
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(source, e))?;
    parse_bytes(&bytes, opts, source)
}

/// Parses RFC 4180 style delimited UTF-8 text. Blank lines are skipped.
pub fn parse_bytes(bytes: &[u8], opts: &ParseOptions, source: &str) -> Result<RawTable> {
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(Error::EmptyFile);
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter_byte()?)
        .has_headers(false)
        .flexible(true)
        .trim(if opts.trim { csv::Trim::All } else { csv::Trim::None })
        .from_reader(bytes);

    let mut records = reader.records();
    let headers: Vec<String> = if opts.has_header {
        match records.next() {
            Some(h) => h?.iter().map(str::to_string).collect(),
            None => return Err(Error::EmptyFile),
        }
    } else {
        match &opts.column_names {
            Some(names) => names.clone(),
            None => Vec::new(),
        }
    };

    let mut rows = Vec::new();
    let mut rows_seen = 0;
    let mut n_dropped = 0;
    let mut width = if headers.is_empty() { None } else { Some(headers.len()) };
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        rows_seen += 1;
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            match opts.ragged_rows {
                MissingPolicy::Drop => {
                    n_dropped += 1;
                    continue;
                }
                MissingPolicy::Error => {
                    return Err(Error::RaggedRow {
                        row: i + 1,
                        found: rec.len(),
                        expected,
                    })
                }
            }
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }

    let headers = if headers.is_empty() {
        (0..width.unwrap_or(0)).map(|i| format!("c{i}")).collect()
    } else {
        headers
    };

    Ok(RawTable {
        headers,
        rows,
        rows_seen,
        n_dropped,
        source: source.to_string(),
        checksum: sha256_hex(bytes),
    })
}
