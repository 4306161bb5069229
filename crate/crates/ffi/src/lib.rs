//! C ABI over the sharesynth library.
//!
//! Datasets cross the boundary as opaque `SsDataset` handles. Every fallible
//! call returns an `SsStatus`; on failure `ss_last_error_message` describes
//! the most recent error on the calling thread. Strings returned by the
//! library are freed with `ss_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use serde_json::Value;
use sharesynth::dp::NoiseKind;
use sharesynth::io::{load_dataset, save_dataset};
use sharesynth::metrics::workload_error;
use sharesynth::partition::{partition, PartitionMode};
use sharesynth::pipeline::{run_caps, Algo, BackendKind, CapsConfig, PrivacyBudget};
use sharesynth::schema::Dataset;
use sharesynth::workload::Workload;
use sharesynth::Error;

/// Opaque dataset handle.
pub struct SsDataset {
    inner: Dataset,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Bad configuration, parameters or workload.
    Config = 3,
    /// Malformed dataset or domain file.
    Ingestion = 4,
    /// File could not be read or written.
    Io = 5,
    /// Protocol failure inside the library.
    Internal = 6,
    /// The library panicked; the handle arguments are left untouched.
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(SsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let status = match &e {
            Error::Io { .. } => SsStatus::Io,
            Error::Ingestion(_) => SsStatus::Ingestion,
            Error::Integrity(_) | Error::Orchestration(_) => SsStatus::Internal,
            _ => SsStatus::Config,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: SsStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(SsStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SsStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn dataset_arg<'a>(p: *const SsDataset, name: &str) -> Result<&'a Dataset, Failure> {
    p.as_ref().map(|d| &d.inner).ok_or_else(|| fail(SsStatus::NullArgument, format!("{name} is null")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(fail(SsStatus::NullArgument, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn ss_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads a CSV file against a domain JSON file.
///
/// # Safety
/// `csv_path` and `domain_path` must be NUL-terminated strings and `out` a
/// valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ss_dataset_load(
    csv_path: *const c_char,
    domain_path: *const c_char,
    out: *mut *mut SsDataset,
) -> SsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let csv = str_arg(csv_path, "csv_path")?;
        let domain = str_arg(domain_path, "domain_path")?;
        let inner = load_dataset(Path::new(csv), Path::new(domain))?;
        *out = Box::into_raw(Box::new(SsDataset { inner }));
        Ok(())
    })
}

/// Writes a dataset as CSV.
///
/// # Safety
/// `data` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ss_dataset_save(data: *const SsDataset, path: *const c_char) -> SsStatus {
    guard(|| {
        let d = dataset_arg(data, "data")?;
        save_dataset(Path::new(str_arg(path, "path")?), d)?;
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_dataset_free(data: *mut SsDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_dataset_rows(data: *const SsDataset) -> usize {
    data.as_ref().map_or(0, |d| d.inner.n_rows())
}

/// Number of attributes; 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_dataset_cols(data: *const SsDataset) -> usize {
    data.as_ref().map_or(0, |d| d.inner.schema.len())
}

/// Category index of one cell.
///
/// # Safety
/// `data` must be a live handle and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn ss_dataset_get(data: *const SsDataset, row: usize, col: usize, out: *mut u32) -> SsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let d = dataset_arg(data, "data")?;
        let v = d
            .rows
            .get(row)
            .and_then(|r| r.get(col))
            .ok_or_else(|| fail(SsStatus::Config, format!("cell ({row}, {col}) is outside the dataset")))?;
        *out = *v;
        Ok(())
    })
}

fn workload_of(v: Option<&Value>, data: &Dataset) -> Result<Workload, Failure> {
    match v {
        None => Ok(Workload::all_2way(&data.schema)?),
        Some(Value::String(s)) if s == "all-2way" => Ok(Workload::all_2way(&data.schema)?),
        Some(Value::String(path)) => Ok(Workload::from_file(Path::new(path), &data.schema)?),
        Some(obj) => Ok(Workload::from_json(&obj.to_string(), &data.schema)?),
    }
}

fn field<'a>(cfg: &'a Value, key: &str) -> Option<&'a Value> {
    cfg.get(key).filter(|v| !v.is_null())
}

fn number(cfg: &Value, key: &str, default: f64) -> Result<f64, Failure> {
    match field(cfg, key) {
        None => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| fail(SsStatus::Config, format!("{key} must be a number"))),
    }
}

fn integer(cfg: &Value, key: &str, default: u64) -> Result<u64, Failure> {
    match field(cfg, key) {
        None => Ok(default),
        Some(v) => v.as_u64().ok_or_else(|| fail(SsStatus::Config, format!("{key} must be a non-negative integer"))),
    }
}

fn text<'a>(cfg: &'a Value, key: &str, default: &'a str) -> Result<&'a str, Failure> {
    match field(cfg, key) {
        None => Ok(default),
        Some(v) => v.as_str().ok_or_else(|| fail(SsStatus::Config, format!("{key} must be a string"))),
    }
}

fn generate(data: &Dataset, cfg: &Value) -> Result<(Dataset, String), Failure> {
    if !cfg.is_object() {
        return Err(fail(SsStatus::Config, "configuration must be a JSON object"));
    }
    let workload = workload_of(field(cfg, "workload"), data)?;
    let rounds = integer(cfg, "rounds", 10)? as usize;
    let budget = PrivacyBudget::new(number(cfg, "epsilon", 1.0)?, number(cfg, "delta", 1e-9)?, rounds)?;
    let algo: Algo = text(cfg, "algo", "aim")?.parse()?;
    let noise: NoiseKind = text(cfg, "noise", "ih")?.parse()?;
    let backend: BackendKind = text(cfg, "backend", "mpc")?.parse()?;
    let mode: PartitionMode = text(cfg, "partition", "central")?.parse()?;
    let seed = integer(cfg, "seed", 0)?;
    let (plan, holders) = partition(data, &mode, seed)?;
    let config = CapsConfig { workload, budget, algo, noise, backend, seed, record_messages: false };
    let (synth, log) = run_caps(&data.schema, &plan, &holders, &config)?;
    Ok((synth, log.to_json()))
}

/// Runs the synthesizer on `data`. `config_json` is an object with optional
/// keys `workload` ("all-2way", a workload file path, or an inline
/// `{"queries": [...]}` object), `epsilon`, `delta`, `rounds`, `algo`,
/// `noise`, `partition`, `backend` and `seed`, defaulting as the CLI does.
/// On success `out` receives a new handle and, when `log_out` is not null,
/// `*log_out` receives the run log as JSON.
///
/// # Safety
/// `data` must be a live handle, `config_json` a NUL-terminated string, `out`
/// valid writable storage, and `log_out` null or valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn ss_generate(
    data: *const SsDataset,
    config_json: *const c_char,
    out: *mut *mut SsDataset,
    log_out: *mut *mut c_char,
) -> SsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let d = dataset_arg(data, "data")?;
        let cfg: Value = serde_json::from_str(str_arg(config_json, "config_json")?).map_err(Error::from)?;
        let (synth, log) = generate(d, &cfg)?;
        *out = Box::into_raw(Box::new(SsDataset { inner: synth }));
        if !log_out.is_null() {
            *log_out = CString::new(log).expect("JSON has no NUL").into_raw();
        }
        Ok(())
    })
}

/// Workload error over all 1-way and 2-way marginals.
///
/// # Safety
/// Both handles must be live and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn ss_workload_error(real: *const SsDataset, synth: *const SsDataset, out: *mut f64) -> SsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let (r, s) = (dataset_arg(real, "real")?, dataset_arg(synth, "synth")?);
        let w = Workload::all_2way(&r.schema)?;
        *out = workload_error(r, s, &w)?.workload_error;
        Ok(())
    })
}

/// Frees a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
