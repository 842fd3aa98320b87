use std::ffi::{CStr, CString};
use std::ptr;

use lapdet_ffi::*;

fn last_error() -> String {
    let p = lapdet_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn default_config_logdet_matches_oracle() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(lapdet_config_new_default(&mut cfg), LapdetStatus::Ok);
        let (mut ld, mut n) = (0.0, 0usize);
        assert_eq!(lapdet_logdet(cfg, 3, &mut ld, &mut n), LapdetStatus::Ok);
        assert_eq!(n, 49);
        let oracle = lapdet::spectral::logdet_constant_oracle(7, 7, 1.0, 1.0, &lapdet::complex::BoundarySpec::all());
        assert!((ld - oracle.logdet).abs() < 1e-10);
        lapdet_config_free(cfg);
    }
}

#[test]
fn sweep_handle_round_trip() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(lapdet_config_new_default(&mut cfg), LapdetStatus::Ok);
        let levels = [2u32, 3, 4, 5, 6];
        let mut s = ptr::null_mut();
        assert_eq!(lapdet_sweep_run(cfg, levels.as_ptr(), levels.len(), &mut s), LapdetStatus::Ok);
        assert_eq!(lapdet_sweep_len(s), 5);
        let (mut lv, mut eps, mut ld) = (0u32, 0.0, 0.0);
        assert_eq!(lapdet_sweep_entry(s, 4, &mut lv, &mut eps, &mut ld), LapdetStatus::Ok);
        assert_eq!((lv, eps), (6, 1.0 / 64.0));
        assert_eq!(lapdet_sweep_entry(s, 5, &mut lv, &mut eps, &mut ld), LapdetStatus::OutOfRange);
        let mut c = LapdetCoeffs::default();
        assert_eq!(lapdet_sweep_fit(s, &mut c), LapdetStatus::Ok);
        assert!((c.c_bulk - 1.16624).abs() < 1e-2, "{c:?}");
        lapdet_sweep_free(s);
        lapdet_config_free(cfg);
    }
}

#[test]
fn config_errors_map_to_status() {
    unsafe {
        let (gxx, gyy) = (CString::new("x - 1").unwrap(), CString::new("1").unwrap());
        let dom = [0.0, 1.0, 0.0, 1.0];
        let mut cfg = ptr::null_mut();
        let st = lapdet_config_new(gxx.as_ptr(), gyy.as_ptr(), dom.as_ptr(), LAPDET_SIDES_ALL, 1, 1, &mut cfg);
        assert_eq!(st, LapdetStatus::Config);
        assert!(cfg.is_null());
        assert!(last_error().contains("metric"));

        let ok = CString::new("(1 + x/2)^2").unwrap();
        assert_eq!(lapdet_config_new(ok.as_ptr(), gyy.as_ptr(), dom.as_ptr(), 0, 1, 1, &mut cfg), LapdetStatus::Config);
        assert_eq!(lapdet_config_new(ok.as_ptr(), gyy.as_ptr(), dom.as_ptr(), 16, 1, 1, &mut cfg), LapdetStatus::Config);
        assert_eq!(lapdet_config_new(ok.as_ptr(), gyy.as_ptr(), dom.as_ptr(), LAPDET_SIDE_BOTTOM, 1, 1, &mut cfg), LapdetStatus::Ok);
        lapdet_config_free(cfg);

        let missing = CString::new("/nonexistent/config.toml").unwrap();
        assert_eq!(lapdet_config_load(missing.as_ptr(), &mut cfg), LapdetStatus::Config);
        assert!(last_error().contains("/nonexistent/config.toml"));
    }
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        assert_eq!(lapdet_config_new_default(ptr::null_mut()), LapdetStatus::NullPointer);
        let mut v = 0.0;
        assert_eq!(lapdet_logdet(ptr::null(), 2, &mut v, ptr::null_mut()), LapdetStatus::NullPointer);
        assert_eq!(lapdet_sweep_len(ptr::null()), 0);
        lapdet_sweep_free(ptr::null_mut());
        lapdet_config_free(ptr::null_mut());
    }
}

#[test]
fn lattice_log_and_dimer() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(lapdet_lattice_log(1.0, 1.0, 1, 0, &mut v), LapdetStatus::Ok);
        assert!((v - 0.25).abs() < 1e-13);
        assert_eq!(lapdet_lattice_log(-1.0, 1.0, 1, 0, &mut v), LapdetStatus::Config);

        let mut cfg = ptr::null_mut();
        assert_eq!(lapdet_config_new_default(&mut cfg), LapdetStatus::Ok);
        let mut err = 1.0;
        assert_eq!(lapdet_dimer_check(cfg, 2, 3, LAPDET_SIDE_LEFT | LAPDET_SIDE_BOTTOM, &mut err), LapdetStatus::Ok);
        assert!(err < 1e-9);
        // All four sides give a non-square Dirac operator.
        assert_eq!(lapdet_dimer_check(cfg, 2, 2, 0, &mut err), LapdetStatus::Numeric);
        assert!(last_error().contains("dimension mismatch"));
        lapdet_config_free(cfg);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(lapdet_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_exports() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/lapdet.h")).unwrap();
    for name in [
        "lapdet_last_error",
        "lapdet_version",
        "lapdet_config_new_default",
        "lapdet_config_new",
        "lapdet_config_load",
        "lapdet_config_free",
        "lapdet_logdet",
        "lapdet_sweep_run",
        "lapdet_sweep_len",
        "lapdet_sweep_entry",
        "lapdet_sweep_fit",
        "lapdet_sweep_free",
        "lapdet_lattice_log",
        "lapdet_dimer_check",
        "typedef struct LapdetConfig LapdetConfig",
        "LAPDET_STATUS_NUMERIC",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
