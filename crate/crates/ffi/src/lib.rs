//! C interface to `dca-core`.
//!
//! Objects are opaque handles created by `dca_*_new`-style calls and
//! released with the matching `*_free`. Every call returns a [`DcaStatus`];
//! after a failure, [`dca_last_error`] describes it. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dca_core::dca::{max_strong_residual, MidEdgeField};
use dca_core::ising::{IsingCounts, IsingParams};
use dca_core::lattice::DomainSpec;
use dca_core::onmodel::{critical_params, saw_count, Regime};
use dca_core::scaling::solve_riemann_bvp;
use dca_core::{Error, LatticeDomain};

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DcaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Budget = 3,
    Numerical = 4,
    Panic = 5,
}

/// Dense-regime or dilute-regime critical branch of the O(N) model.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DcaRegime {
    Dense = 0,
    Dilute = 1,
}

/// A lattice domain.
pub struct DcaDomain(LatticeDomain);

/// Complex values indexed by mid-edge id.
pub struct DcaField(MidEdgeField);

const VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
    Ok(s) => s,
    Err(_) => panic!("version contains a nul byte"),
};

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DcaStatus {
    match e {
        Error::Budget { .. } => DcaStatus::Budget,
        Error::NonConvergence { .. } | Error::Inconsistent { .. } | Error::LinearAlgebra(_) => DcaStatus::Numerical,
        _ => DcaStatus::InvalidInput,
    }
}

enum Fail {
    Null,
    Core(Error),
    Input(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DcaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DcaStatus::Ok,
        Ok(Err(Fail::Null)) => {
            set_error("null pointer argument".into());
            DcaStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Input(m))) => {
            set_error(m);
            DcaStatus::InvalidInput
        }
        Err(_) => {
            set_error("internal panic".into());
            DcaStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null)
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null);
    }
    out.write(v);
    Ok(())
}

/// Library version, a static nul-terminated string.
#[no_mangle]
pub extern "C" fn dca_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn dca_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a domain from a JSON spec such as
/// `{"kind":"square","cellsX":3,"cellsY":2,"mesh":1.0,"a":0,"b":4}`.
///
/// # Safety
/// `spec` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dca_domain_from_json(spec: *const c_char, out: *mut *mut DcaDomain) -> DcaStatus {
    guard(|| {
        if spec.is_null() {
            return Err(Fail::Null);
        }
        let text = CStr::from_ptr(spec).to_str().map_err(|e| Fail::Input(e.to_string()))?;
        let spec: DomainSpec = serde_json::from_str(text).map_err(|e| Fail::Input(format!("domain spec: {e}")))?;
        let d = spec.build()?;
        write(out, Box::into_raw(Box::new(DcaDomain(d))))
    })
}

/// # Safety
/// `domain` must come from [`dca_domain_from_json`] and not be used after.
#[no_mangle]
pub unsafe extern "C" fn dca_domain_free(domain: *mut DcaDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Vertex, edge, face and port counts.
///
/// # Safety
/// `domain` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn dca_domain_counts(
    domain: *const DcaDomain,
    vertices: *mut usize,
    edges: *mut usize,
    faces: *mut usize,
    ports: *mut usize,
) -> DcaStatus {
    guard(|| {
        let d = &borrow(domain)?.0;
        write(vertices, d.vertex_count())?;
        write(edges, d.edge_count())?;
        write(faces, d.face_count())?;
        write(ports, d.port_count())
    })
}

/// Fermionic observable at edge weight `x`, from the marked port `a`, by
/// enumeration of at most `2^budget_log2` configurations.
///
/// # Safety
/// `domain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dca_ising_observable(
    domain: *const DcaDomain,
    x: f64,
    budget_log2: u32,
    out: *mut *mut DcaField,
) -> DcaStatus {
    guard(|| {
        let d = &borrow(domain)?.0;
        let params = IsingParams::from_x(x)?;
        let (a, _) = d.marked_ports().ok_or_else(|| Fail::Input("domain has no marks a and b".into()))?;
        let f = IsingCounts::new(d, a, budget_log2)?.field(params.x);
        write(out, Box::into_raw(Box::new(DcaField(f))))
    })
}

/// Solution of the discrete Riemann boundary value problem between the
/// marked ports.
///
/// # Safety
/// `domain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dca_riemann_bvp(domain: *const DcaDomain, out: *mut *mut DcaField) -> DcaStatus {
    guard(|| {
        let d = &borrow(domain)?.0;
        let sol = solve_riemann_bvp(d)?;
        write(out, Box::into_raw(Box::new(DcaField(sol.field))))
    })
}

/// # Safety
/// `field` must come from this library and not be used after.
#[no_mangle]
pub unsafe extern "C" fn dca_field_free(field: *mut DcaField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of mid-edges.
///
/// # Safety
/// `field` must be a live handle and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn dca_field_len(field: *const DcaField, len: *mut usize) -> DcaStatus {
    guard(|| write(len, borrow(field)?.0.len()))
}

/// Value at mid-edge `index`.
///
/// # Safety
/// `field` must be a live handle; `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn dca_field_get(field: *const DcaField, index: usize, re: *mut f64, im: *mut f64) -> DcaStatus {
    guard(|| {
        let f = &borrow(field)?.0;
        if index >= f.len() {
            return Err(Fail::Input(format!("mid-edge {index} out of range")));
        }
        let v = f.get(index);
        write(re, v.re)?;
        write(im, v.im)
    })
}

/// Largest strong-relation residual of `field` over all corners.
///
/// # Safety
/// Both handles must be live, the field built on this domain, and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn dca_strong_residual(
    domain: *const DcaDomain,
    field: *const DcaField,
    out: *mut f64,
) -> DcaStatus {
    guard(|| {
        let d = &borrow(domain)?.0;
        let f = &borrow(field)?.0;
        if f.len() != d.mid_edge_count() {
            return Err(Fail::Input("field does not belong to this domain".into()));
        }
        write(out, max_strong_residual(d, f, 0..d.vertex_count()).max_residual)
    })
}

/// Self-avoiding walk counts `C(1..=kmax)` written to `counts`, which must
/// hold `kmax` entries.
///
/// # Safety
/// `counts` must point to `kmax` writable `u64`s.
#[no_mangle]
pub unsafe extern "C" fn dca_saw_count(kmax: usize, counts: *mut u64) -> DcaStatus {
    guard(|| {
        if counts.is_null() {
            return Err(Fail::Null);
        }
        let c = saw_count(kmax, 36)?;
        ptr::copy_nonoverlapping(c.counts.as_ptr(), counts, kmax);
        Ok(())
    })
}

/// Critical edge weight and spin of the O(N) model for `n ∈ [0, 2]`.
///
/// # Safety
/// `x` and `spin` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dca_on_critical(n: f64, regime: DcaRegime, x: *mut f64, spin: *mut f64) -> DcaStatus {
    guard(|| {
        let regime = match regime {
            DcaRegime::Dense => Regime::Dense,
            DcaRegime::Dilute => Regime::Dilute,
        };
        let p = critical_params(n, regime)?;
        write(x, p.x)?;
        write(spin, p.spin)
    })
}
