//! C ABI over `nof-core`.
//!
//! Every function returns an [`NofStatus`]. On failure the message is
//! available from [`nof_last_error`] until the next call on the same thread.
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_traits::ToPrimitive;

use nof_core::discrepancy::{CorrelationQuery, CylinderFamily};
use nof_core::distributions::{make_dist, DistName};
use nof_core::functions::PartialFunctionSpec;
use nof_core::harness::{simulate, BuiltProtocol, ExperimentConfig, InputSource, ProtocolKind};
use nof_core::model::run;
use nof_core::{Error, InputMatrix, RandomTape};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NofStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    CapExceeded = 4,
    Internal = 5,
}

/// Protocol families.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NofProtocolKind {
    Gip = 0,
    Disj = 1,
    Mod3 = 2,
}

impl From<NofProtocolKind> for ProtocolKind {
    fn from(k: NofProtocolKind) -> Self {
        match k {
            NofProtocolKind::Gip => ProtocolKind::Gip,
            NofProtocolKind::Disj => ProtocolKind::Disj,
            NofProtocolKind::Mod3 => ProtocolKind::Mod3,
        }
    }
}

/// Opaque protocol handle.
pub struct NofProtocol {
    inner: BuiltProtocol,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NofStatus {
    match e {
        Error::Infeasible(_) => NofStatus::Infeasible,
        Error::CapExceeded { .. } => NofStatus::CapExceeded,
        Error::Protocol(_) => NofStatus::Internal,
        _ => NofStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (NofStatus, String)>) -> NofStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NofStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            NofStatus::Internal
        }
    }
}

fn core(e: Error) -> (NofStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (NofStatus, String) {
    (NofStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `bits` must point to `n * k` readable bytes.
unsafe fn read_matrix(n: usize, k: usize, bits: *const u8) -> Result<InputMatrix, (NofStatus, String)> {
    if bits.is_null() {
        return Err(null("bits"));
    }
    let len = n.checked_mul(k).ok_or((NofStatus::InvalidArgument, "n * k overflows".to_string()))?;
    let data = std::slice::from_raw_parts(bits, len).to_vec();
    InputMatrix::new(n, k, data).map_err(core)
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn nof_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a protocol for `n x k` inputs with error at most `epsilon`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn nof_protocol_new(
    kind: NofProtocolKind,
    n: usize,
    k: usize,
    epsilon: f64,
    out: *mut *mut NofProtocol,
) -> NofStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = BuiltProtocol::build(kind.into(), n, k, epsilon).map_err(core)?;
        *out = Box::into_raw(Box::new(NofProtocol { inner }));
        Ok(())
    })
}

/// Releases a handle from [`nof_protocol_new`]. Null is ignored.
///
/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nof_protocol_free(p: *mut NofProtocol) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Worst-case number of bits written by any execution.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nof_protocol_cost_ceiling(p: *const NofProtocol, out: *mut usize) -> NofStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("protocol"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = p.inner.info().cost_ceiling;
        Ok(())
    })
}

/// Runs the protocol once on the row-major matrix `bits` with tape `seed`.
///
/// # Safety
/// `p` must be a live handle, `bits` must hold `n * k` bytes of 0 or 1, and
/// `output` and `cost_bits` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nof_protocol_run(
    p: *const NofProtocol,
    bits: *const u8,
    n: usize,
    k: usize,
    seed: u64,
    output: *mut bool,
    cost_bits: *mut usize,
) -> NofStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("protocol"))?;
        if output.is_null() || cost_bits.is_null() {
            return Err(null("output"));
        }
        let x = read_matrix(n, k, bits)?;
        let info = p.inner.info();
        if (info.n, info.k) != (n, k) {
            return Err(core(Error::DimensionMismatch { expected_n: info.n, expected_k: info.k, n, k }));
        }
        let out = run(p.inner.protocol(), &x, &RandomTape::new(seed)).map_err(core)?;
        *output = out.output;
        *cost_bits = out.cost_bits;
        Ok(())
    })
}

/// Exact failure probability over the tape on one input, as a double.
///
/// # Safety
/// As for [`nof_protocol_run`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nof_protocol_exact_error(
    p: *const NofProtocol,
    bits: *const u8,
    n: usize,
    k: usize,
    out: *mut f64,
) -> NofStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("protocol"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = read_matrix(n, k, bits)?;
        let q = p.inner.exact_failure(&x).map_err(core)?;
        *out = q.to_f64().unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Monte Carlo estimate over uniform inputs. Writes the JSON report to
/// `*json`, which must be released with [`nof_string_free`].
///
/// # Safety
/// `json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nof_simulate_uniform(
    kind: NofProtocolKind,
    n: usize,
    k: usize,
    epsilon: f64,
    trials: u64,
    seed: u64,
    json: *mut *mut c_char,
) -> NofStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let dist = make_dist(DistName::Uniform, n, k, None).map_err(core)?;
        let mut c = ExperimentConfig::new(kind.into(), n, k, InputSource::Distribution(dist));
        c.epsilon = epsilon;
        c.trials = trials;
        c.seed = seed;
        c.workers = 1;
        let report = simulate(&c).map_err(core)?;
        let s = CString::new(report.canonical_json()).expect("json has no nul");
        *json = s.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nof_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Exact discrepancy of GIP under the uniform distribution over all
/// cylinder intersections, with enumeration cap `cap`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nof_disc_gip_uniform(n: usize, k: usize, cap: u64, out: *mut f64) -> NofStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let dist = make_dist(DistName::Uniform, n, k, None).map_err(core)?;
        let q = CorrelationQuery::with_distribution(&PartialFunctionSpec::gip(n, k), &dist, CylinderFamily::All)
            .map_err(core)?;
        *out = q.exact_disc(u128::from(cap)).map_err(core)?.value;
        Ok(())
    })
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn nof_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version"),
    };
    V.as_ptr()
}
