//! C ABI over the hodograph library.
//!
//! Every entry point returns an [`HgStatus`]; on failure the message is
//! available from [`hg_last_error`] on the same thread. Arrays are passed as
//! pointer plus length, matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hodograph::blowup::{catastrophe_search, CatastropheReport};
use hodograph::demos::load_demo;
use hodograph::problem::{parse_problem, Problem};
use hodograph::Error;

/// Bumped whenever a signature or struct layout changes.
pub const HG_ABI_VERSION: u32 = 1;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// The problem text or demo name could not be turned into a problem.
    Setup = 3,
    /// A length argument does not match the problem dimension.
    Dimension = 4,
    /// The output buffer is too small; the required length was written.
    BufferTooSmall = 5,
    /// The operation needs the other half of the model (hodograph vs initial data).
    WrongModel = 6,
    NoBranch = 7,
    NoConvergence = 8,
    /// Any other numerical failure.
    Numerical = 9,
    Panic = 10,
}

/// Opaque problem handle.
pub struct HgProblem {
    problem: Problem,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: HgStatus, msg: impl Into<String>) -> HgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn numeric(err: Error) -> HgStatus {
    let status = match err {
        Error::NoBranch => HgStatus::NoBranch,
        Error::NoConvergence { .. } | Error::LeftDomain { .. } => HgStatus::NoConvergence,
        Error::Dimension { .. } => HgStatus::Dimension,
        _ => HgStatus::Numerical,
    };
    fail(status, err.to_string())
}

fn guard(f: impl FnOnce() -> HgStatus) -> HgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(HgStatus::Panic, "internal panic"),
    }
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, HgStatus> {
    if p.is_null() {
        return Err(fail(HgStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(HgStatus::InvalidUtf8, "string is not UTF-8"))
}

unsafe fn handle<'a>(p: *const HgProblem) -> Result<&'a Problem, HgStatus> {
    p.as_ref().map(|h| &h.problem).ok_or_else(|| fail(HgStatus::NullPointer, "null problem handle"))
}

unsafe fn input<'a>(p: *const f64, len: usize, want: usize) -> Result<&'a [f64], HgStatus> {
    if len != want {
        return Err(fail(HgStatus::Dimension, format!("got {len} values, expected {want}")));
    }
    if p.is_null() {
        return Err(fail(HgStatus::NullPointer, "null input array"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize) -> Result<&'a mut [f64], HgStatus> {
    if p.is_null() {
        return Err(fail(HgStatus::NullPointer, "null output array"));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn hodograph_side(p: &Problem) -> Result<&hodograph::hodograph::HodographSystem, HgStatus> {
    p.system().ok_or_else(|| fail(HgStatus::WrongModel, "problem has no hodograph system"))
}

fn field_side(p: &Problem) -> Result<&hodograph::characteristics::InitialField, HgStatus> {
    p.field().ok_or_else(|| fail(HgStatus::WrongModel, "problem has no initial data"))
}

macro_rules! attempt {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

fn write_report(r: &CatastropheReport, t_c: *mut f64, u_c: *mut f64, x_c: *mut f64) -> HgStatus {
    let n = r.u_c.len();
    unsafe {
        let t = attempt!(output(t_c, 1));
        t[0] = r.t_c;
        attempt!(output(u_c, n)).copy_from_slice(&r.u_c);
        attempt!(output(x_c, n)).copy_from_slice(&r.x_c);
    }
    HgStatus::Ok
}

#[no_mangle]
pub extern "C" fn hg_abi_version() -> u32 {
    HG_ABI_VERSION
}

/// Copies the last error message (NUL-terminated, truncated to `cap`) and
/// returns its full length in bytes excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hg_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let k = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), k);
            *buf.add(k) = 0;
        }
        msg.len()
    })
}

/// Parses a TOML problem definition.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_problem_from_toml(src: *const c_char, out: *mut *mut HgProblem) -> HgStatus {
    guard(|| {
        if out.is_null() {
            return fail(HgStatus::NullPointer, "null output handle");
        }
        let text = attempt!(c_str(src));
        match parse_problem(text, &[]) {
            Ok(problem) => {
                *out = Box::into_raw(Box::new(HgProblem { problem }));
                HgStatus::Ok
            }
            Err(e) => fail(HgStatus::Setup, e.to_string()),
        }
    })
}

/// Loads a built-in demo; `initial_data` nonzero selects its initial-data side.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_problem_from_demo(name: *const c_char, initial_data: i32, out: *mut *mut HgProblem) -> HgStatus {
    guard(|| {
        if out.is_null() {
            return fail(HgStatus::NullPointer, "null output handle");
        }
        let name = attempt!(c_str(name));
        let demo = match load_demo(name, &[]) {
            Ok(Some(d)) => d,
            Ok(None) => return fail(HgStatus::Setup, format!("unknown demo '{name}'")),
            Err(e) => return fail(HgStatus::Setup, e.to_string()),
        };
        let side = if initial_data != 0 { demo.initial_data } else { demo.hodograph };
        match side {
            Some(problem) => {
                *out = Box::into_raw(Box::new(HgProblem { problem }));
                HgStatus::Ok
            }
            None => fail(HgStatus::WrongModel, format!("demo '{name}' has no such side")),
        }
    })
}

/// # Safety
/// `p` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hg_problem_free(p: *mut HgProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_problem_dim(p: *const HgProblem, out: *mut usize) -> HgStatus {
    guard(|| {
        let p = attempt!(handle(p));
        if out.is_null() {
            return fail(HgStatus::NullPointer, "null output");
        }
        *out = p.dim();
        HgStatus::Ok
    })
}

/// `M = J_f(u) + tI` into `out` (n·n values, row-major).
///
/// # Safety
/// `u` holds `n` values and `out` has room for `n*n`.
#[no_mangle]
pub unsafe extern "C" fn hg_build_m(p: *const HgProblem, u: *const f64, n: usize, t: f64, out: *mut f64) -> HgStatus {
    guard(|| {
        let sys = attempt!(hodograph_side(attempt!(handle(p))));
        let u = attempt!(input(u, n, sys.dim()));
        let m = match sys.build_m(u, t) {
            Ok(m) => m,
            Err(e) => return numeric(e),
        };
        let out = attempt!(output(out, n * n));
        for i in 0..n {
            for k in 0..n {
                out[i * n + k] = m[(i, k)];
            }
        }
        HgStatus::Ok
    })
}

/// Coefficients `a_0 … a_{n-1}` of the monic blow-up polynomial at `u`.
///
/// # Safety
/// `u` holds `n` values and `out` has room for `n`.
#[no_mangle]
pub unsafe extern "C" fn hg_charpoly(p: *const HgProblem, u: *const f64, n: usize, out: *mut f64) -> HgStatus {
    guard(|| {
        let sys = attempt!(hodograph_side(attempt!(handle(p))));
        let u = attempt!(input(u, n, sys.dim()));
        match sys.charpoly(u) {
            Ok(c) => {
                attempt!(output(out, n)).copy_from_slice(&c.coeffs);
                HgStatus::Ok
            }
            Err(e) => numeric(e),
        }
    })
}

/// Sorted real branch values at `u`; `count` receives how many exist.
///
/// # Safety
/// `u` holds `n` values, `out` has room for `cap`, `count` is valid.
#[no_mangle]
pub unsafe extern "C" fn hg_real_branches(
    p: *const HgProblem,
    u: *const f64,
    n: usize,
    out: *mut f64,
    cap: usize,
    count: *mut usize,
) -> HgStatus {
    guard(|| {
        let sys = attempt!(hodograph_side(attempt!(handle(p))));
        let u = attempt!(input(u, n, sys.dim()));
        if count.is_null() {
            return fail(HgStatus::NullPointer, "null count");
        }
        let values = match sys.real_branches(u, 1e-9) {
            Ok(b) => b.values(),
            Err(e) => return numeric(e),
        };
        *count = values.len();
        if values.len() > cap {
            return fail(HgStatus::BufferTooSmall, format!("{} branches, buffer holds {cap}", values.len()));
        }
        if !values.is_empty() {
            attempt!(output(out, values.len())).copy_from_slice(&values);
        }
        HgStatus::Ok
    })
}

/// Solves `x = u t + f(u)` for `u` by Newton iteration from `guess`.
///
/// # Safety
/// `x`, `guess` and `u_out` each hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn hg_solve_u(
    p: *const HgProblem,
    x: *const f64,
    n: usize,
    t: f64,
    guess: *const f64,
    u_out: *mut f64,
) -> HgStatus {
    guard(|| {
        let sys = attempt!(hodograph_side(attempt!(handle(p))));
        let x = attempt!(input(x, n, sys.dim()));
        let g = attempt!(input(guess, n, sys.dim()));
        match sys.solve_u(x, t, g) {
            Ok(s) => {
                attempt!(output(u_out, n)).copy_from_slice(&s.u);
                HgStatus::Ok
            }
            Err(e) => numeric(e),
        }
    })
}

/// Earliest positive (`positive` nonzero) or latest negative blow-up time.
///
/// # Safety
/// `t_c` holds one value; `u_c` and `x_c` hold `n` values each.
#[no_mangle]
pub unsafe extern "C" fn hg_catastrophe_search(
    p: *const HgProblem,
    positive: i32,
    starts: usize,
    seed: u64,
    t_c: *mut f64,
    u_c: *mut f64,
    x_c: *mut f64,
) -> HgStatus {
    guard(|| {
        let sys = attempt!(hodograph_side(attempt!(handle(p))));
        match catastrophe_search(sys, positive != 0, starts.max(1), seed) {
            Ok(r) => write_report(&r, t_c, u_c, x_c),
            Err(e) => numeric(e),
        }
    })
}

/// Eigentimes at the Lagrangian label `x0`, sorted ascending.
///
/// # Safety
/// `x0` holds `n` values, `out` has room for `cap`, `count` is valid.
#[no_mangle]
pub unsafe extern "C" fn hg_eigentimes(
    p: *const HgProblem,
    x0: *const f64,
    n: usize,
    out: *mut f64,
    cap: usize,
    count: *mut usize,
) -> HgStatus {
    guard(|| {
        let f = attempt!(field_side(attempt!(handle(p))));
        let x0 = attempt!(input(x0, n, f.dim()));
        if count.is_null() {
            return fail(HgStatus::NullPointer, "null count");
        }
        let times: Vec<f64> = match f.eigentimes(x0) {
            Ok(v) => v.iter().map(|e| e.t).collect(),
            Err(e) => return numeric(e),
        };
        *count = times.len();
        if times.len() > cap {
            return fail(HgStatus::BufferTooSmall, format!("{} eigentimes, buffer holds {cap}", times.len()));
        }
        if !times.is_empty() {
            attempt!(output(out, times.len())).copy_from_slice(&times);
        }
        HgStatus::Ok
    })
}

/// Gradient catastrophe found directly from the initial data.
///
/// # Safety
/// `t_c` holds one value; `u_c` and `x_c` hold `n` values each.
#[no_mangle]
pub unsafe extern "C" fn hg_direct_catastrophe(
    p: *const HgProblem,
    starts: usize,
    seed: u64,
    t_c: *mut f64,
    u_c: *mut f64,
    x_c: *mut f64,
) -> HgStatus {
    guard(|| {
        let f = attempt!(field_side(attempt!(handle(p))));
        match f.direct_catastrophe(starts.max(1), seed) {
            Ok(r) => write_report(&r, t_c, u_c, x_c),
            Err(e) => numeric(e),
        }
    })
}
