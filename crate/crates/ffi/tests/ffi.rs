use std::ffi::{CStr, CString};
use std::ptr;

use ris_secrecy_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ris_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn load(name: &str) -> *mut RisScenario {
    let mut s = ptr::null_mut();
    let st = unsafe { ris_scenario_load(cstr(name).as_ptr(), &mut s) };
    assert_eq!(st, RisStatus::Ok, "{}", last_error());
    s
}

fn set(s: *mut RisScenario, k: &str, v: &str) -> RisStatus {
    unsafe { ris_scenario_set(s, cstr(k).as_ptr(), cstr(v).as_ptr()) }
}

#[test]
fn preset_run_rows_and_csv() {
    let s = load("presets/fig9a");
    assert_eq!(set(s, "run.trials", "20"), RisStatus::Ok);
    assert_eq!(set(s, "bits", "\"inf\""), RisStatus::Ok);
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { ris_scenario_run(s, 1, &mut t) },
        RisStatus::Ok,
        "{}",
        last_error()
    );
    let n = unsafe { ris_table_row_count(t) };
    // 15 placements x 2 path-loss exponents
    assert_eq!(n, 30);

    let mut row = std::mem::MaybeUninit::<RisRowStats>::uninit();
    assert_eq!(
        unsafe { ris_table_row(t, 0, row.as_mut_ptr()) },
        RisStatus::Ok
    );
    let row = unsafe { row.assume_init() };
    assert_eq!(row.axis, 5.0);
    assert_eq!(row.bits, -1);
    assert_eq!(row.practical, 0);
    assert_eq!(row.gamma, 3.0);
    assert!(row.mu.is_nan());
    assert_eq!(row.trials, 20);
    assert_eq!(row.coverage, 1.0 - row.sop);
    assert!(row.ci_low <= row.mean_cs && row.mean_cs <= row.ci_high);

    let mut out = std::mem::MaybeUninit::<RisRowStats>::uninit();
    assert_eq!(
        unsafe { ris_table_row(t, n, out.as_mut_ptr()) },
        RisStatus::OutOfRange
    );

    let mut csv = ptr::null_mut();
    assert_eq!(unsafe { ris_table_csv(t, &mut csv) }, RisStatus::Ok);
    let text = unsafe { CStr::from_ptr(csv) }.to_str().unwrap().to_string();
    assert!(text.starts_with("axis_name,axis,strategy"));
    assert_eq!(text.lines().count(), n + 1);
    unsafe {
        ris_string_free(csv);
        ris_table_free(t);
        ris_scenario_free(s);
    }
}

#[test]
fn toml_errors_are_reported() {
    let src = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/presets/fig8a.toml"
    ))
    .unwrap();
    let mut s = ptr::null_mut();
    let bad = cstr(&src.replace("beta_min", "beta_mim"));
    assert_eq!(
        unsafe { ris_scenario_from_toml(bad.as_ptr(), &mut s) },
        RisStatus::Config
    );
    assert!(last_error().contains("beta_mim"));
    assert!(s.is_null());

    let good = cstr(&src);
    assert_eq!(
        unsafe { ris_scenario_from_toml(good.as_ptr(), &mut s) },
        RisStatus::Ok
    );
    assert_eq!(last_error(), "");
    assert_eq!(set(s, "nope", "1"), RisStatus::Config);
    assert_eq!(set(s, "d_v", "-1"), RisStatus::Ok);
    // validation happens when the scenario runs
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { ris_scenario_run(s, 1, &mut t) },
        RisStatus::Validation
    );
    assert!(last_error().contains("d_v"));
    assert!(t.is_null());
    unsafe { ris_scenario_free(s) };
}

#[test]
fn failed_set_leaves_scenario_unchanged() {
    let s = load("fig10");
    assert_eq!(set(s, "ris.typo", "1"), RisStatus::Config);
    assert_eq!(set(s, "run.trials", "3"), RisStatus::Ok);
    assert_eq!(set(s, "mu", "0.5"), RisStatus::Ok);
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { ris_scenario_run(s, 0, &mut t) },
        RisStatus::Ok,
        "{}",
        last_error()
    );
    assert_eq!(unsafe { ris_table_row_count(t) }, 11 * 4);
    unsafe {
        ris_table_free(t);
        ris_scenario_free(s);
    }
}

#[test]
fn null_pointers_rejected() {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { ris_scenario_load(ptr::null(), &mut s) },
        RisStatus::NullPointer
    );
    assert_eq!(
        unsafe { ris_scenario_load(cstr("fig8a").as_ptr(), ptr::null_mut()) },
        RisStatus::NullPointer
    );
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { ris_scenario_run(ptr::null(), 1, &mut t) },
        RisStatus::NullPointer
    );
    assert_eq!(unsafe { ris_table_row_count(ptr::null()) }, 0);
    unsafe {
        ris_scenario_free(ptr::null_mut());
        ris_table_free(ptr::null_mut());
        ris_string_free(ptr::null_mut());
    }
    let missing = cstr("presets/none");
    assert_eq!(
        unsafe { ris_scenario_load(missing.as_ptr(), &mut s) },
        RisStatus::Io
    );
}

#[test]
fn helpers() {
    let mut v = 0.0;
    assert_eq!(
        unsafe { ris_path_loss(-30.0, 1.0, 3.0, 10.0, &mut v) },
        RisStatus::Ok
    );
    assert!((v - 1e-6).abs() < 1e-18);
    assert_eq!(
        unsafe { ris_path_loss(-30.0, 1.0, 3.0, 0.0, &mut v) },
        RisStatus::Domain
    );
    assert_eq!(unsafe { ris_quantize_phase(2, 0.1, &mut v) }, RisStatus::Ok);
    assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    assert_eq!(
        unsafe { ris_quantize_phase(0, 0.1, &mut v) },
        RisStatus::Domain
    );
    assert!((ris_amplitude(0.5, std::f64::consts::FRAC_PI_2, 2.0, 0.0) - 0.5).abs() < 1e-15);
    let ver = unsafe { CStr::from_ptr(ris_version()) }.to_str().unwrap();
    assert_eq!(ver, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/ris_secrecy.h"
    ))
    .unwrap();
    for name in [
        "typedef struct RisScenario RisScenario;",
        "typedef struct RisResultTable RisResultTable;",
        "RIS_STATUS_VALIDATION = 3",
        "RisStatus ris_scenario_load(",
        "RisStatus ris_scenario_set(",
        "RisStatus ris_scenario_run(",
        "RisStatus ris_table_row(",
        "RisStatus ris_table_csv(",
        "void ris_table_free(",
        "const char *ris_last_error(void);",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}
