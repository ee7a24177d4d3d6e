//! C ABI for the tailsum estimator.
//!
//! The surface is deliberately small: parse an instance document into an
//! opaque handle, run an estimation method against it, get the same text
//! report document the CLI prints. Status codes mirror the CLI exit codes;
//! whenever a call fails, [`ts_last_error`] returns a human-readable message
//! for the current thread.
//!
//! Ownership rules: every `TsInstance*` is released with
//! [`ts_instance_free`]; every `char*` produced through an out-parameter is
//! released with [`ts_string_free`]. Handles are immutable after creation
//! and may be shared across threads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tailsum::baselines::{exact_probability, monte_carlo, DEFAULT_MAX_EXACT_CELLS};
use tailsum::distributions::normalize;
use tailsum::engine::{
    run_fptas_bit_mode_traced, run_fptas_float, run_fptas_traced, BitModeOverrides,
};
use tailsum::instance::{parse_instance, Instance};
use tailsum::rational::parse_rational;
use tailsum::report::{render_estimate, render_exact, render_mc, render_trivial, InstanceSummary};
use tailsum::Error;

/// Call outcome. Mirrors the CLI exit-code taxonomy, plus `NullArgument`
/// for contract violations at the boundary.
#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    InternalError = 1,
    ParseError = 2,
    ParameterError = 3,
    SizeGuardError = 4,
    NullArgument = 5,
}

/// Estimation method selector.
#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TsMethod {
    Fptas = 0,
    FptasBit = 1,
    Exact = 2,
    Mc = 3,
}

/// Run options. Zero/null fields mean "use the default"; see the field docs.
#[repr(C)]
#[derive(Copy, Clone, Debug)]
pub struct TsOptions {
    pub method: TsMethod,
    /// Relative accuracy as a rational string ("1/10", "0.05"); null keeps
    /// the default of 1/10.
    pub epsilon: *const c_char,
    /// Threshold override; honored only when `has_threshold` is true,
    /// otherwise the instance document's threshold applies.
    pub threshold: i64,
    pub has_threshold: bool,
    /// Monte-Carlo sample count (0 = 100000).
    pub mc_samples: u64,
    /// Monte-Carlo seed.
    pub seed: u64,
    /// Monte-Carlo Hoeffding failure probability (0 = 1e-3).
    pub mc_delta: f64,
    /// Bit-mode oracle precision override (0 = derived floor; values below
    /// the floor are refused).
    pub bit_l: u64,
    /// DP worker threads (0 or 1 = sequential; results are identical).
    pub parallelism: u32,
    /// Exact-convolution size guard in cells (0 = 10^7).
    pub max_exact_cells: u64,
    /// Run the fptas method on best-effort float magnitudes (uncertified).
    pub float_arithmetic: bool,
}

/// Opaque parsed instance.
pub struct TsInstance {
    parsed: Instance,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_last_error(msg: &str) {
    let sanitized: Vec<u8> = msg.bytes().filter(|&b| b != 0).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap();
    });
}

fn status_for(err: &Error) -> TsStatus {
    match err {
        Error::Parse(_) | Error::EmptyInstance | Error::InvalidDistribution(_) | Error::Io(_) => {
            TsStatus::ParseError
        }
        Error::Parameter(_) => TsStatus::ParameterError,
        Error::SizeGuard { .. } => TsStatus::SizeGuardError,
        Error::BrokenOracle(_) => TsStatus::InternalError,
    }
}

fn fail(err: &Error) -> TsStatus {
    set_last_error(&err.to_string());
    status_for(err)
}

fn guarded<F: FnOnce() -> TsStatus>(f: F) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic");
            TsStatus::InternalError
        }
    }
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn ts_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Default-initialized options: certified fptas at epsilon = 1/10.
#[no_mangle]
pub extern "C" fn ts_options_default() -> TsOptions {
    TsOptions {
        method: TsMethod::Fptas,
        epsilon: ptr::null(),
        threshold: 0,
        has_threshold: false,
        mc_samples: 0,
        seed: 0,
        mc_delta: 0.0,
        bit_l: 0,
        parallelism: 0,
        max_exact_cells: 0,
        float_arithmetic: false,
    }
}

/// Parses an instance document (the `tailsum/1` TOML format) into a handle.
///
/// On success writes the handle through `out` and returns `Ok`;
/// on failure leaves `out` untouched.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_instance_parse(
    text: *const c_char,
    out: *mut *mut TsInstance,
) -> TsStatus {
    if text.is_null() || out.is_null() {
        set_last_error("null argument");
        return TsStatus::NullArgument;
    }
    let text = CStr::from_ptr(text);
    guarded(|| {
        let text = match text.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_last_error("instance text is not valid UTF-8");
                return TsStatus::ParseError;
            }
        };
        match parse_instance(text) {
            Ok(parsed) => {
                *out = Box::into_raw(Box::new(TsInstance { parsed }));
                TsStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Releases a handle from [`ts_instance_parse`]. Null is a no-op.
///
/// # Safety
/// `inst` must be a pointer previously returned by [`ts_instance_parse`]
/// and not already freed.
#[no_mangle]
pub unsafe extern "C" fn ts_instance_free(inst: *mut TsInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

fn run_impl(inst: &TsInstance, opts: &TsOptions) -> Result<String, Error> {
    let epsilon = if opts.epsilon.is_null() {
        parse_rational("1/10").unwrap()
    } else {
        let text = unsafe { CStr::from_ptr(opts.epsilon) }
            .to_str()
            .map_err(|_| Error::Parameter("epsilon is not valid UTF-8".into()))?;
        parse_rational(text).map_err(|_| Error::Parameter(format!("bad epsilon {text:?}")))?
    };
    let threshold = if opts.has_threshold {
        opts.threshold
    } else {
        inst.parsed.threshold
    };
    let parallelism = (opts.parallelism as usize).max(1);
    let mc_samples = if opts.mc_samples == 0 { 100_000 } else { opts.mc_samples };
    let mc_delta = if opts.mc_delta == 0.0 { 1e-3 } else { opts.mc_delta };
    let max_cells = if opts.max_exact_cells == 0 {
        DEFAULT_MAX_EXACT_CELLS
    } else {
        opts.max_exact_cells
    };
    if opts.float_arithmetic && !matches!(opts.method, TsMethod::Fptas) {
        return Err(Error::Parameter(
            "float arithmetic only applies to the fptas method".into(),
        ));
    }

    let instance = normalize(inst.parsed.distributions.clone(), threshold)?;
    let summary = InstanceSummary::new(&instance, threshold);
    let method_name = match opts.method {
        TsMethod::Fptas => "fptas",
        TsMethod::FptasBit => "fptas-bit",
        TsMethod::Exact => "exact",
        TsMethod::Mc => "mc",
    };
    if let Some(answer) = instance.trivial_answer() {
        return Ok(render_trivial(method_name, &summary, answer));
    }
    Ok(match opts.method {
        TsMethod::Fptas if opts.float_arithmetic => {
            let rep = run_fptas_float(&instance, &epsilon, parallelism)?;
            render_estimate(method_name, &summary, &rep)
        }
        TsMethod::Fptas => {
            let (rep, _) = run_fptas_traced(&instance, &epsilon, parallelism)?;
            render_estimate(method_name, &summary, &rep)
        }
        TsMethod::FptasBit => {
            let overrides = BitModeOverrides {
                oracle_bits: (opts.bit_l != 0).then_some(opts.bit_l),
            };
            let (rep, _) =
                run_fptas_bit_mode_traced(&instance, &epsilon, &overrides, parallelism)?;
            render_estimate(method_name, &summary, &rep)
        }
        TsMethod::Exact => {
            let value = exact_probability(&instance, instance.threshold(), max_cells)?;
            render_exact(&summary, &value)
        }
        TsMethod::Mc => {
            let rep = monte_carlo(
                &instance,
                instance.threshold(),
                mc_samples,
                opts.seed,
                mc_delta,
            )?;
            render_mc(&summary, &rep)
        }
    })
}

/// Runs an estimation method against a parsed instance.
///
/// On success writes a NUL-terminated report document through `out_report`
/// (free it with [`ts_string_free`]) and returns `Ok`.
///
/// # Safety
/// `inst` must be a live handle, `opts` and `out_report` valid pointers;
/// `opts.epsilon`, when non-null, must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ts_run(
    inst: *const TsInstance,
    opts: *const TsOptions,
    out_report: *mut *mut c_char,
) -> TsStatus {
    if inst.is_null() || opts.is_null() || out_report.is_null() {
        set_last_error("null argument");
        return TsStatus::NullArgument;
    }
    let inst = &*inst;
    let opts = *opts;
    guarded(|| match run_impl(inst, &opts) {
        Ok(doc) => {
            let c = CString::new(doc).expect("report documents contain no NUL");
            *out_report = c.into_raw();
            TsStatus::Ok
        }
        Err(err) => fail(&err),
    })
}

/// Releases a string produced by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from this library and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn ts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
