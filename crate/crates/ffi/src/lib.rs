//! C ABI over `lapdet`. Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! functions and released by the matching `*_free`. Every fallible call returns a
//! [`LapdetStatus`]; the message of the last failure on the calling thread is available from
//! [`lapdet_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lapdet::asymptotics::{fit_expansion, ModelBasis};
use lapdet::complex::{BoundarySpec, CellComplex, Side};
use lapdet::config::{check_levels, Component, ExperimentConfig};
use lapdet::dimerft::kasteleyn_check_and_z;
use lapdet::latticefn::{lattice_log, LatticeLogParams};
use lapdet::metric::weights_from_metric;
use lapdet::spectral::{logdet_laplacian, sweep, SweepOptions, SweepSample, SweepSeries};
use lapdet::Error;

/// Result of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LapdetStatus {
    Ok = 0,
    /// Invalid input: bad config, metric, domain, side mask or level list.
    Config = 1,
    /// Numeric failure: singular or indefinite operator, quadrature or fit failure, budget.
    Numeric = 2,
    /// A required pointer argument was null.
    NullPointer = 3,
    /// Index out of range.
    OutOfRange = 4,
    /// Internal panic caught at the boundary.
    Panic = 5,
}

pub const LAPDET_SIDE_LEFT: u32 = 1;
pub const LAPDET_SIDE_RIGHT: u32 = 2;
pub const LAPDET_SIDE_BOTTOM: u32 = 4;
pub const LAPDET_SIDE_TOP: u32 = 8;
pub const LAPDET_SIDES_ALL: u32 = 15;

/// Experiment configuration: metric, domain, Dirichlet sides and base cells.
pub struct LapdetConfig {
    inner: ExperimentConfig,
}

/// Log-determinant series over subdivision levels.
pub struct LapdetSweep {
    inner: SweepSeries,
}

/// Coefficients of `c_bulk ε⁻² + c_boundary ε⁻¹ + c_log log ε + c_const`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LapdetCoeffs {
    pub c_bulk: f64,
    pub c_boundary: f64,
    pub c_log: f64,
    pub c_const: f64,
    pub residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: LapdetStatus, msg: impl Into<String>) -> LapdetStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> LapdetStatus {
    let status = if e.is_config() { LapdetStatus::Config } else { LapdetStatus::Numeric };
    fail(status, e.to_string())
}

fn guard<F: FnOnce() -> LapdetStatus>(f: F) -> LapdetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
            fail(LapdetStatus::Panic, format!("panic: {}", msg.unwrap_or_else(|| "unknown".into())))
        }
    }
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(LapdetStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, LapdetStatus> {
    CStr::from_ptr(p).to_str().map_err(|_| fail(LapdetStatus::Config, format!("`{name}` is not valid UTF-8")))
}

fn sides_from_mask(mask: u32) -> Result<BoundarySpec, LapdetStatus> {
    if mask & !LAPDET_SIDES_ALL != 0 {
        return Err(fail(LapdetStatus::Config, format!("side mask {mask:#x} has unknown bits")));
    }
    let sides: Vec<Side> = Side::ALL.into_iter().filter(|s| mask >> (*s as u32) & 1 == 1).collect();
    BoundarySpec::new(&sides).map_err(from_error)
}

fn boxed<T>(out: *mut *mut T, v: T) -> LapdetStatus {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(v)) };
    LapdetStatus::Ok
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call
/// on the same thread.
#[no_mangle]
pub extern "C" fn lapdet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn lapdet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Identity metric on the unit square, all sides Dirichlet, one base cell.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn lapdet_config_new_default(out: *mut *mut LapdetConfig) -> LapdetStatus {
    guard(|| {
        non_null!(out);
        boxed(out, LapdetConfig { inner: ExperimentConfig::default() })
    })
}

/// Builds a config from metric expressions, `domain = [x0, x1, y0, y1]`, a side mask and base
/// cell counts.
///
/// # Safety
/// `gxx` and `gyy` must be NUL-terminated strings, `domain` must point to 4 doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn lapdet_config_new(
    gxx: *const c_char,
    gyy: *const c_char,
    domain: *const f64,
    sides: u32,
    base_nx: usize,
    base_ny: usize,
    out: *mut *mut LapdetConfig,
) -> LapdetStatus {
    guard(|| {
        non_null!(gxx, gyy, domain, out);
        let (gxx, gyy) = match (str_arg(gxx, "gxx"), str_arg(gyy, "gyy")) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let sides = match sides_from_mask(sides) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let d = std::slice::from_raw_parts(domain, 4);
        let cfg = ExperimentConfig {
            gxx: Component::Expr(gxx.to_string()),
            gyy: Component::Expr(gyy.to_string()),
            domain: [d[0], d[1], d[2], d[3]],
            dirichlet_sides: sides,
            base_cells: [base_nx, base_ny],
            ..Default::default()
        };
        try_status!(cfg.validate());
        boxed(out, LapdetConfig { inner: cfg })
    })
}

/// Loads a JSON or TOML config file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lapdet_config_load(path: *const c_char, out: *mut *mut LapdetConfig) -> LapdetStatus {
    guard(|| {
        non_null!(path, out);
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let cfg = try_status!(ExperimentConfig::load(Path::new(path)));
        boxed(out, LapdetConfig { inner: cfg })
    })
}

/// # Safety
/// `cfg` must come from a `lapdet_config_*` constructor and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn lapdet_config_free(cfg: *mut LapdetConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Log-determinant of the Laplacian at one subdivision level of the base complex.
///
/// # Safety
/// `cfg` must be a live handle; `out_logdet` and `out_n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lapdet_logdet(cfg: *const LapdetConfig, level: u32, out_logdet: *mut f64, out_n: *mut usize) -> LapdetStatus {
    guard(|| {
        non_null!(cfg, out_logdet, out_n);
        let c = &(*cfg).inner;
        let g = try_status!(c.metric());
        let x = try_status!(c.base_complex()).at_level(level);
        let r = try_status!(logdet_laplacian(&x, &g, &c.dirichlet_sides));
        *out_logdet = r.logdet;
        *out_n = r.n;
        LapdetStatus::Ok
    })
}

/// Runs a sweep over `n_levels` strictly ascending levels.
///
/// # Safety
/// `cfg` must be a live handle, `levels` must point to `n_levels` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn lapdet_sweep_run(cfg: *const LapdetConfig, levels: *const u32, n_levels: usize, out: *mut *mut LapdetSweep) -> LapdetStatus {
    guard(|| {
        non_null!(cfg, levels, out);
        let c = &(*cfg).inner;
        let lv = std::slice::from_raw_parts(levels, n_levels);
        try_status!(check_levels(lv));
        let g = try_status!(c.metric());
        let base = try_status!(c.base_complex());
        let s = try_status!(sweep(&g, &base, &c.dirichlet_sides, lv, SweepOptions::default()));
        boxed(out, LapdetSweep { inner: s })
    })
}

/// Number of entries in a sweep; 0 for null.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lapdet_sweep_len(s: *const LapdetSweep) -> usize {
    if s.is_null() {
        0
    } else {
        (*s).inner.entries.len()
    }
}

/// Entry `i` of a sweep.
///
/// # Safety
/// `s` must be a live handle and the output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn lapdet_sweep_entry(s: *const LapdetSweep, i: usize, out_level: *mut u32, out_epsilon: *mut f64, out_logdet: *mut f64) -> LapdetStatus {
    guard(|| {
        non_null!(s, out_level, out_epsilon, out_logdet);
        let entries = &(&(*s).inner).entries;
        let Some(e) = entries.get(i) else {
            return fail(LapdetStatus::OutOfRange, format!("entry {i} of {}", entries.len()));
        };
        *out_level = e.level;
        *out_epsilon = e.epsilon;
        *out_logdet = e.logdet;
        LapdetStatus::Ok
    })
}

/// Unconstrained least-squares fit of the sweep against `{ε⁻², ε⁻¹, log ε, 1}`.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lapdet_sweep_fit(s: *const LapdetSweep, out: *mut LapdetCoeffs) -> LapdetStatus {
    guard(|| {
        non_null!(s, out);
        let samples: Vec<SweepSample> = (*s).inner.entries.iter().map(|e| SweepSample { epsilon: e.epsilon, logdet: e.logdet }).collect();
        let c = try_status!(fit_expansion(&samples, &ModelBasis::free()));
        *out = LapdetCoeffs { c_bulk: c.c_bulk, c_boundary: c.c_boundary, c_log: c.c_log, c_const: c.c_const, residual: c.residual };
        LapdetStatus::Ok
    })
}

/// # Safety
/// `s` must come from [`lapdet_sweep_run`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lapdet_sweep_free(s: *mut LapdetSweep) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Lattice logarithm with weights `(a, b)` at `(x, y)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lapdet_lattice_log(a: f64, b: f64, x: i64, y: i64, out: *mut f64) -> LapdetStatus {
    guard(|| {
        non_null!(out);
        let p = try_status!(LatticeLogParams::new(a, b));
        *out = try_status!(lattice_log(p, x, y));
        LapdetStatus::Ok
    })
}

/// Largest relative difference between the dimer partition function of the doubled
/// `nx x ny` complex and the fermionic determinant, using the config's metric and domain.
/// `sides` overrides the config's Dirichlet sides when nonzero.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lapdet_dimer_check(cfg: *const LapdetConfig, nx: usize, ny: usize, sides: u32, out: *mut f64) -> LapdetStatus {
    guard(|| {
        non_null!(cfg, out);
        let c = &(*cfg).inner;
        let l = if sides == 0 {
            c.dirichlet_sides
        } else {
            match sides_from_mask(sides) {
                Ok(l) => l,
                Err(s) => return s,
            }
        };
        let x = try_status!(c.rect().and_then(|r| CellComplex::new(r, nx, ny)));
        let w = try_status!(c.metric().and_then(|g| weights_from_metric(&x, &g)));
        let check = try_status!(kasteleyn_check_and_z(&x, &w, &l, false));
        *out = check.max_relative_error();
        LapdetStatus::Ok
    })
}
