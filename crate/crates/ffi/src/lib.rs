//! C ABI for the simulator.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every function returns a
//! [`RisStatus`]; on failure [`ris_last_error`] describes the error for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ris_secrecy::channel::{path_loss, PathLossModel};
use ris_secrecy::config::{run_file, ScenarioDocument};
use ris_secrecy::engine::{AxisValue, ResultTable};
use ris_secrecy::output::to_csv;
use ris_secrecy::ris::{amplitude, PhaseCodebook};
use ris_secrecy::scenario::{db_to_linear, AmplitudeModel, Quantization};
use ris_secrecy::secrecy::SecurePower;
use ris_secrecy::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Scenario values out of range.
    Validation = 3,
    /// Malformed document, unknown key or unusable override.
    Config = 4,
    Io = 5,
    /// Row index past the end of a table.
    OutOfRange = 6,
    /// Argument outside a function's domain.
    Domain = 7,
    Panic = 8,
}

/// A scenario document plus any overrides applied so far.
pub struct RisScenario {
    doc: ScenarioDocument,
}

/// Aggregated results of one run.
pub struct RisResultTable {
    table: ResultTable,
}

/// Numbers of one result row. NaN marks a field that does not apply.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisRowStats {
    /// Axis value; +inf for unquantized on a bits axis, NaN for a model axis.
    pub axis: f64,
    /// Phase bits; -1 when unquantized.
    pub bits: i32,
    /// 1 for the practical amplitude model, 0 for ideal.
    pub practical: i32,
    pub gamma: f64,
    pub mu: f64,
    pub mean_cs: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub sop: f64,
    pub intercept: f64,
    pub spsc: f64,
    pub coverage: f64,
    pub see: f64,
    /// +inf when unattainable, NaN when not computed.
    pub secure_power_dbm: f64,
    pub trials: u64,
    pub prenull_failures: u64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> RisStatus {
    match e {
        Error::Validation(_) => RisStatus::Validation,
        Error::Io(_) => RisStatus::Io,
        Error::Domain { .. } | Error::LengthMismatch { .. } | Error::EmptySamples => {
            RisStatus::Domain
        }
        Error::Config(_) => RisStatus::Config,
    }
}

fn guard(f: impl FnOnce() -> Result<(), RisStatus>) -> RisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RisStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            RisStatus::Panic
        }
    }
}

fn fail(e: Error) -> RisStatus {
    set_error(e.to_string());
    status_of(&e)
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, RisStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(RisStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        RisStatus::InvalidUtf8
    })
}

fn null(what: &str) -> RisStatus {
    set_error(format!("{what} is null"));
    RisStatus::NullPointer
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ris_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, NUL-terminated, static.
#[no_mangle]
pub extern "C" fn ris_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML scenario document.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ris_scenario_from_toml(
    text: *const c_char,
    out: *mut *mut RisScenario,
) -> RisStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(text, "text")?;
        let doc = ScenarioDocument::parse(text).map_err(fail)?;
        // reject unknown keys now rather than at run time
        doc.to_file().map_err(fail)?;
        *out = Box::into_raw(Box::new(RisScenario { doc }));
        Ok(())
    })
}

/// Loads a shipped preset (`fig8a`, `presets/fig10`, ...) or a scenario file path.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ris_scenario_load(
    name: *const c_char,
    out: *mut *mut RisScenario,
) -> RisStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = str_arg(name, "name")?;
        let doc = ScenarioDocument::load(name).map_err(fail)?;
        doc.to_file().map_err(fail)?;
        *out = Box::into_raw(Box::new(RisScenario { doc }));
        Ok(())
    })
}

/// Applies one `key=value` override, with the same rules as `--set`.
/// The scenario is unchanged when the call fails.
///
/// # Safety
/// `scenario` must come from this library; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn ris_scenario_set(
    scenario: *mut RisScenario,
    key: *const c_char,
    value: *const c_char,
) -> RisStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        let mut doc = s.doc.clone();
        doc.set(key, value).map_err(fail)?;
        doc.to_file().map_err(fail)?;
        s.doc = doc;
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ris_scenario_free(scenario: *mut RisScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Validates the scenario and runs its sweep on `workers` threads (0 = all).
///
/// # Safety
/// `scenario` must come from this library and `out` be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ris_scenario_run(
    scenario: *const RisScenario,
    workers: u32,
    out: *mut *mut RisResultTable,
) -> RisStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let file = s.doc.to_file().map_err(fail)?;
        let table = run_file(&file, workers as usize).map_err(fail)?;
        *out = Box::into_raw(Box::new(RisResultTable { table }));
        Ok(())
    })
}

/// Number of rows; 0 for a null table.
///
/// # Safety
/// `table` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ris_table_row_count(table: *const RisResultTable) -> usize {
    table.as_ref().map_or(0, |t| t.table.rows.len())
}

/// Copies row `index` into `out`.
///
/// # Safety
/// `table` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ris_table_row(
    table: *const RisResultTable,
    index: usize,
    out: *mut RisRowStats,
) -> RisStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let Some(r) = t.table.rows.get(index) else {
            set_error(format!("row {index} of {}", t.table.rows.len()));
            return Err(RisStatus::OutOfRange);
        };
        let s = &r.stats;
        *out = RisRowStats {
            axis: match r.axis_value {
                AxisValue::Number(x) => x,
                AxisValue::Bits(Quantization::Bits(b)) => b as f64,
                AxisValue::Bits(Quantization::None) => f64::INFINITY,
                AxisValue::Model(_) => f64::NAN,
            },
            bits: match r.quantization {
                Quantization::Bits(b) => b as i32,
                Quantization::None => -1,
            },
            practical: (r.model == "practical") as i32,
            gamma: r.gamma,
            mu: r.mu.unwrap_or(f64::NAN),
            mean_cs: s.mean_secrecy_rate,
            ci_low: s.ci_low,
            ci_high: s.ci_high,
            sop: s.sop,
            intercept: s.intercept_prob,
            spsc: s.spsc_prob,
            coverage: s.coverage_prob,
            see: s.see,
            secure_power_dbm: match s.secure_power {
                Some(SecurePower::Attained(p)) => p,
                Some(SecurePower::Unattainable) => f64::INFINITY,
                None => f64::NAN,
            },
            trials: s.trials as u64,
            prenull_failures: r.prenull_failures as u64,
            seed: r.seed,
        };
        Ok(())
    })
}

/// Renders the table as CSV into a new string; free it with [`ris_string_free`].
///
/// # Safety
/// `table` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ris_table_csv(
    table: *const RisResultTable,
    out: *mut *mut c_char,
) -> RisStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let csv = CString::new(to_csv(&t.table)).map_err(|_| {
            set_error("CSV contains NUL");
            RisStatus::Panic
        })?;
        *out = csv.into_raw();
        Ok(())
    })
}

/// # Safety
/// `table` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ris_table_free(table: *mut RisResultTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// `s` must come from [`ris_table_csv`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ris_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Linear path-loss gain `c0 (d/d0)^-gamma`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ris_path_loss(
    c0_db: f64,
    d0: f64,
    gamma: f64,
    d: f64,
    out: *mut f64,
) -> RisStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let m = PathLossModel {
            c0_linear: db_to_linear(c0_db),
            d0,
            gamma,
        };
        *out = path_loss(&m, d).map_err(fail)?;
        Ok(())
    })
}

/// Nearest codeword of the `bits`-bit phase codebook.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ris_quantize_phase(bits: u8, theta: f64, out: *mut f64) -> RisStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = PhaseCodebook::new(bits).map_err(fail)?.quantize(theta);
        Ok(())
    })
}

/// Reflection amplitude of the practical model at phase `theta`.
#[no_mangle]
pub extern "C" fn ris_amplitude(beta_min: f64, phi: f64, alpha: f64, theta: f64) -> f64 {
    amplitude(
        &AmplitudeModel::Practical {
            beta_min,
            phi,
            alpha,
        },
        theta,
    )
}
