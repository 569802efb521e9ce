//! C ABI over the `fairci` library.
//!
//! Conventions:
//!
//! * Every fallible call returns a [`FairciStatus`]; `FAIRCI_STATUS_OK` is 0.
//!   On failure, [`fairci_last_error`] returns a message for the calling
//!   thread, valid until that thread's next fallible call.
//! * Results come back through caller-provided out-pointers. Out-pointers are
//!   untouched on failure.
//! * Cell tables and ingested tables are opaque handles. Each `*_new` /
//!   `*_load` is paired with a `*_free`; freeing NULL is a no-op.
//! * Panics never cross the boundary; they surface as `FAIRCI_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use fairci::ingest::{apply_schema, fetch_dataset, parse_table, AuditTable, ParseOptions, Registry, SchemaConfig};
use fairci::metrics::{count_cells, estimate, SMALL_CELL};
use fairci::{normal, CellCounts, Error, Metric};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FairciStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidAlpha = 3,
    DegenerateDenominator = 4,
    NegativeQuadraticForm = 5,
    ZeroSigma = 6,
    EmptyInput = 7,
    LabelsMissing = 8,
    MixedLabelPresence = 9,
    InvalidCovariance = 10,
    InvalidDistribution = 11,
    IoError = 12,
    MalformedInput = 13,
    MissingColumn = 14,
    InvalidSchema = 15,
    DigestMismatch = 16,
    NetworkError = 17,
    UnknownPreset = 18,
    NotCached = 19,
    Internal = 99,
}

impl From<&Error> for FairciStatus {
    fn from(e: &Error) -> Self {
        use FairciStatus as S;
        match e {
            Error::DegenerateDenominator(_) | Error::DegenerateDistribution(_) => S::DegenerateDenominator,
            Error::NegativeQuadraticForm(_) => S::NegativeQuadraticForm,
            Error::InvalidAlpha(_) => S::InvalidAlpha,
            Error::ZeroSigma => S::ZeroSigma,
            Error::AsymmetricCovariance { .. } | Error::InvalidCovariance(_) => S::InvalidCovariance,
            Error::EmptyInput => S::EmptyInput,
            Error::MixedLabelPresence => S::MixedLabelPresence,
            Error::LabelsMissing(_) => S::LabelsMissing,
            Error::InvalidDistribution(_) => S::InvalidDistribution,
            Error::Io { .. } => S::IoError,
            Error::EmptyFile
            | Error::RaggedRow { .. }
            | Error::Csv(_)
            | Error::UnmappableValue { .. }
            | Error::Json(_)
            | Error::UnreadableReport { .. } => S::MalformedInput,
            Error::MissingColumn(_) => S::MissingColumn,
            Error::InvalidSchema(_) => S::InvalidSchema,
            Error::DigestMismatch { .. } => S::DigestMismatch,
            Error::NetworkError { .. } => S::NetworkError,
            Error::UnknownPreset(_) => S::UnknownPreset,
            Error::NotCached(_) => S::NotCached,
            Error::InvalidArgument(_)
            | Error::UnknownReferenceGroup(_)
            | Error::TooManyDegenerateResamples { .. } => S::InvalidArgument,
        }
    }
}

/// Ratio metrics, in the order of the library's `Metric::ALL`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FairciMetric {
    Dia = 0,
    DiTrue = 1,
    Ca1 = 2,
    Ca0 = 3,
    Cu1 = 4,
    Cu0 = 5,
}

impl From<FairciMetric> for Metric {
    fn from(m: FairciMetric) -> Self {
        match m {
            FairciMetric::Dia => Metric::Dia,
            FairciMetric::DiTrue => Metric::DiTrue,
            FairciMetric::Ca1 => Metric::Ca1,
            FairciMetric::Ca0 => Metric::Ca0,
            FairciMetric::Cu1 => Metric::Cu1,
            FairciMetric::Cu0 => Metric::Cu0,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FairciEstimate {
    pub point: f64,
    /// Asymptotic standard deviation of sqrt(n) * (estimate - ratio).
    pub sigma: f64,
    pub n: u64,
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    /// Some coordinate count is below the small-cell threshold.
    pub small_cell: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FairciTest {
    pub statistic: f64,
    pub p_value: f64,
    pub reject_h0: bool,
    pub beta: f64,
    pub alpha: f64,
}

/// Opaque cell-count table.
pub struct FairciCellCounts(CellCounts);

/// Opaque ingested table.
pub struct FairciTable(AuditTable);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: FairciStatus, msg: &str) -> FairciStatus {
    set_last_error(msg);
    status
}

/// Runs `f`, recording errors and trapping panics.
fn guard<F: FnOnce() -> Result<(), FairciStatus>>(f: F) -> FairciStatus {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FairciStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(FairciStatus::Internal, "internal panic"),
    }
}

fn lib_err(e: Error) -> FairciStatus {
    let status = FairciStatus::from(&e);
    fail(status, &format!("{}: {e}", e.code()))
}

fn null() -> FairciStatus {
    fail(FairciStatus::NullPointer, "required pointer argument is NULL")
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, FairciStatus> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(FairciStatus::InvalidArgument, "string argument is not UTF-8"))
}

/// Message for the last failure on this thread; empty after a success.
#[no_mangle]
pub extern "C" fn fairci_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fairci_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Cell table from the 8 joint counts, indexed `[g][y][s]` (row-major:
/// counts[4*g + 2*y + s]).
///
/// # Safety
/// `counts` must point to 8 readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fairci_cells_new_joint(
    counts: *const u64,
    out: *mut *mut FairciCellCounts,
) -> FairciStatus {
    guard(|| {
        if counts.is_null() || out.is_null() {
            return Err(null());
        }
        let c = std::slice::from_raw_parts(counts, 8);
        let mut j = [[[0u64; 2]; 2]; 2];
        for (k, v) in c.iter().enumerate() {
            j[k / 4][(k / 2) % 2][k % 2] = *v;
        }
        let cells = CellCounts::from_joint(j).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(FairciCellCounts(cells)));
        Ok(())
    })
}

/// Label-free cell table from the 4 counts indexed `[g][s]` (counts[2*g + s]).
///
/// # Safety
/// `counts` must point to 4 readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fairci_cells_new_marginal(
    counts: *const u64,
    out: *mut *mut FairciCellCounts,
) -> FairciStatus {
    guard(|| {
        if counts.is_null() || out.is_null() {
            return Err(null());
        }
        let c = std::slice::from_raw_parts(counts, 4);
        let cells = CellCounts::from_prediction_group([[c[0], c[1]], [c[2], c[3]]]).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(FairciCellCounts(cells)));
        Ok(())
    })
}

/// # Safety
/// `cells` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fairci_cells_free(cells: *mut FairciCellCounts) {
    if !cells.is_null() {
        drop(Box::from_raw(cells));
    }
}

/// Number of records behind the table, 0 for NULL.
///
/// # Safety
/// `cells` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fairci_cells_n(cells: *const FairciCellCounts) -> u64 {
    cells.as_ref().map_or(0, |c| c.0.n())
}

/// Point estimate, sigma and the level 1 - alpha interval of `metric`.
///
/// # Safety
/// `cells` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fairci_estimate(
    cells: *const FairciCellCounts,
    metric: FairciMetric,
    alpha: f64,
    out: *mut FairciEstimate,
) -> FairciStatus {
    guard(|| {
        let (Some(cells), false) = (cells.as_ref(), out.is_null()) else {
            return Err(null());
        };
        let e = estimate(&cells.0, metric.into(), alpha).map_err(lib_err)?;
        *out = FairciEstimate {
            point: e.point,
            sigma: e.sigma,
            n: e.n,
            alpha: e.ci.alpha,
            lower: e.ci.lower,
            upper: e.ci.upper,
            small_cell: e.warnings.iter().any(|w| w == SMALL_CELL),
        };
        Ok(())
    })
}

/// One-sided test of H0: ratio <= beta at level alpha.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fairci_one_sided_test(
    point: f64,
    sigma: f64,
    n: u64,
    beta: f64,
    alpha: f64,
    out: *mut FairciTest,
) -> FairciStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let t = fairci::one_sided_test(point, sigma, n, beta, alpha).map_err(lib_err)?;
        *out = FairciTest {
            statistic: t.statistic,
            p_value: t.p_value,
            reject_h0: t.reject_h0,
            beta: t.beta,
            alpha: t.alpha,
        };
        Ok(())
    })
}

/// point ± z(1 - alpha/2) * sigma / sqrt(n).
///
/// # Safety
/// `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fairci_clt_interval(
    point: f64,
    sigma: f64,
    n: u64,
    alpha: f64,
    lower: *mut f64,
    upper: *mut f64,
) -> FairciStatus {
    guard(|| {
        if lower.is_null() || upper.is_null() {
            return Err(null());
        }
        let ci = fairci::clt_interval(point, sigma, n, alpha).map_err(lib_err)?;
        *lower = ci.lower;
        *upper = ci.upper;
        Ok(())
    })
}

/// Standard normal CDF.
#[no_mangle]
pub extern "C" fn fairci_normal_cdf(x: f64) -> f64 {
    normal::cdf(x)
}

/// Standard normal quantile; `p` must lie in (0, 1).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fairci_normal_quantile(p: f64, out: *mut f64) -> FairciStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(fail(FairciStatus::InvalidArgument, "p must lie in (0, 1)"));
        }
        *out = normal::quantile(p);
        Ok(())
    })
}

/// Reads a comma-delimited file with a header row and maps it with a JSON
/// schema (same keys as the CLI's schema file).
///
/// # Safety
/// `path` and `schema_json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fairci_table_load(
    path: *const c_char,
    schema_json: *const c_char,
    out: *mut *mut FairciTable,
) -> FairciStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let path = PathBuf::from(c_str(path)?);
        let schema = SchemaConfig::from_json(c_str(schema_json)?).map_err(lib_err)?;
        let raw = parse_table(&path, &ParseOptions::default()).map_err(lib_err)?;
        let table = apply_schema(&raw, &schema).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(FairciTable(table)));
        Ok(())
    })
}

/// Loads a built-in preset from `cache_dir`, downloading it first unless
/// `offline` is set.
///
/// # Safety
/// `preset` and `cache_dir` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fairci_table_load_preset(
    preset: *const c_char,
    cache_dir: *const c_char,
    offline: bool,
    out: *mut *mut FairciTable,
) -> FairciStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let preset = c_str(preset)?;
        let dir = PathBuf::from(c_str(cache_dir)?);
        let table = fetch_dataset(&Registry::builtin(), preset, &dir, offline).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(FairciTable(table)));
        Ok(())
    })
}

/// # Safety
/// `table` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fairci_table_free(table: *mut FairciTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Retained records, 0 for NULL.
///
/// # Safety
/// `table` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fairci_table_len(table: *const FairciTable) -> u64 {
    table.as_ref().map_or(0, |t| t.0.records.len() as u64)
}

/// Rows dropped during ingestion, 0 for NULL.
///
/// # Safety
/// `table` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fairci_table_dropped(table: *const FairciTable) -> u64 {
    table.as_ref().map_or(0, |t| t.0.n_dropped as u64)
}

/// Cell counts of an ingested table. The new handle is owned by the caller.
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fairci_table_cells(
    table: *const FairciTable,
    out: *mut *mut FairciCellCounts,
) -> FairciStatus {
    guard(|| {
        let (Some(table), false) = (table.as_ref(), out.is_null()) else {
            return Err(null());
        };
        let cells = count_cells(&table.0.records).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(FairciCellCounts(cells)));
        Ok(())
    })
}
