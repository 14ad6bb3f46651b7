//! C ABI for the simulator: load a scenario file, run it to a CSV, and
//! drive the verification suite. Handles are opaque; every fallible call
//! returns a status code and records a human-readable message
//! retrievable with `jsdm_last_error_message`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};

use jsdm_sim::harness::{self, RunOverrides};
use jsdm_sim::scenario::ScenarioSpec;
use jsdm_sim::JsdmError;

/// Status codes returned by every fallible API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JsdmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    BdCheckFailed = 4,
    InvariantViolation = 5,
    IoError = 6,
    InternalError = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn status_of(err: &JsdmError) -> JsdmStatus {
    match err {
        JsdmError::BdCheckFailed { .. } => JsdmStatus::BdCheckFailed,
        JsdmError::Config(_) | JsdmError::InvalidSpec(_) => JsdmStatus::ConfigError,
        JsdmError::Io(_) => JsdmStatus::IoError,
        JsdmError::Inconsistent(_) | JsdmError::BoundInvalid(_) => JsdmStatus::InvariantViolation,
        _ => JsdmStatus::InternalError,
    }
}

/// Opaque loaded-scenario handle.
pub struct JsdmScenario {
    spec: ScenarioSpec,
}

unsafe fn path_from_c(ptr: *const c_char) -> Result<PathBuf, JsdmStatus> {
    if ptr.is_null() {
        set_error("null path argument");
        return Err(JsdmStatus::NullArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(JsdmStatus::InvalidUtf8)
        }
    }
}

/// Loads and validates a TOML scenario file. On success writes an owned
/// handle into `out`; release it with `jsdm_scenario_free`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid
/// pointer-to-pointer.
#[no_mangle]
pub unsafe extern "C" fn jsdm_scenario_load(
    path: *const c_char,
    out: *mut *mut JsdmScenario,
) -> JsdmStatus {
    if out.is_null() {
        set_error("null output handle");
        return JsdmStatus::NullArgument;
    }
    let path = match path_from_c(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match ScenarioSpec::load(Path::new(&path)) {
        Ok(spec) => {
            *out = Box::into_raw(Box::new(JsdmScenario { spec }));
            JsdmStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Releases a scenario handle. NULL is a no-op.
///
/// # Safety
/// `handle` must have come from `jsdm_scenario_load` and not have been
/// freed already.
#[no_mangle]
pub unsafe extern "C" fn jsdm_scenario_free(handle: *mut JsdmScenario) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Runs every cell of the scenario and writes the results CSV to
/// `csv_path`. Pass 0 for `seed`/`trials`/`threads` to use the
/// scenario's own values (respectively all cores).
///
/// # Safety
/// `handle` must be a live scenario handle; `csv_path` a valid
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn jsdm_scenario_run_to_csv(
    handle: *const JsdmScenario,
    csv_path: *const c_char,
    seed: u64,
    trials: u64,
    threads: u32,
) -> JsdmStatus {
    if handle.is_null() {
        set_error("null scenario handle");
        return JsdmStatus::NullArgument;
    }
    let csv = match path_from_c(csv_path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let spec = &(*handle).spec;
    let overrides = RunOverrides {
        seed: (seed != 0).then_some(seed),
        trials: (trials != 0).then_some(trials),
        threads: (threads != 0).then_some(threads as usize),
        out_dir: None,
    };
    match harness::run_scenario(spec, &overrides).and_then(|rows| harness::write_csv(&rows, &csv))
    {
        Ok(()) => JsdmStatus::Ok,
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Runs the analytical verification suite with the given seed. Returns
/// `Ok` when every check passes, `InvariantViolation` otherwise.
#[no_mangle]
pub extern "C" fn jsdm_verify(seed: u64) -> JsdmStatus {
    let items = harness::verify_suite(seed);
    let failed: Vec<String> = items
        .iter()
        .filter(|i| !i.pass)
        .map(|i| format!("{}: {}", i.name, i.detail))
        .collect();
    if failed.is_empty() {
        JsdmStatus::Ok
    } else {
        set_error(&failed.join("; "));
        JsdmStatus::InvariantViolation
    }
}

/// Copies the last error message (NUL-terminated, possibly truncated)
/// into `buf` and returns the full message length in bytes, excluding
/// the NUL. A zero-length buffer only queries the length.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes unless `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn jsdm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn jsdm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
