//! C ABI over `skbreak`.
//!
//! Every fallible call returns an [`SkbStatus`]; on failure the message is
//! kept in a thread-local slot readable through [`skb_last_error_message`].
//! Panics are caught at the boundary and reported as [`SkbStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use skbreak::family::{FamilySpec, ModelSign};
use skbreak::rep::{Dim, HPoint};
use skbreak::spectrum::spectrum;
use skbreak::symbreak::{
    gamma_closed, localized_family, poincare_hopf, predicted_counts, verify_minimal_model, MinimalModelReport,
    VerifyConfig, VerifyStatus,
};
use skbreak::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Panic = 4,
    BufferTooSmall = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkbKind {
    Odd = 0,
    EvenMinus = 1,
    EvenPlus = 2,
    PerturbedOdd = 3,
    PerturbedEven = 4,
}

impl SkbKind {
    fn from_raw(v: i32) -> Option<Self> {
        Some(match v {
            0 => Self::Odd,
            1 => Self::EvenMinus,
            2 => Self::EvenPlus,
            3 => Self::PerturbedOdd,
            4 => Self::PerturbedEven,
            _ => return None,
        })
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkbVerifyStatus {
    Pass = 0,
    Fail = 1,
    NumericalFailure = 2,
}

/// Opaque family handle.
pub struct SkbFamily {
    spec: FamilySpec,
}

/// Opaque verification report handle.
pub struct SkbReport {
    report: MinimalModelReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(s).expect("nul bytes removed")));
}

fn status_of(e: &Error) -> SkbStatus {
    match e {
        Error::InvalidArgument(_)
        | Error::OutOfRange { .. }
        | Error::NotInHyperplane { .. }
        | Error::NonUnit { .. }
        | Error::TooLarge { .. }
        | Error::Unsupported(_) => SkbStatus::InvalidArgument,
        _ => SkbStatus::Numerical,
    }
}

/// Runs `f` behind catch_unwind, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SkbStatus, String)>) -> SkbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SkbStatus::Ok,
        Ok(Err((status, msg))) => {
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
            SkbStatus::Panic
        }
    }
}

fn lib<T>(r: skbreak::Result<T>) -> Result<T, (SkbStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (SkbStatus, String) {
    (SkbStatus::NullPointer, "null pointer argument".into())
}

fn dim(k: usize) -> Result<Dim, (SkbStatus, String)> {
    lib(Dim::new(k))
}

/// Length in bytes (without the terminator) of the last error message on this
/// thread, or 0 if there is none.
#[no_mangle]
pub extern "C" fn skb_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |s| s.as_bytes().len()))
}

/// Copies the last error message (NUL-terminated) into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn skb_last_error_message(buf: *mut c_char, len: usize) -> SkbStatus {
    if buf.is_null() {
        return SkbStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[0u8][..], |s| s.as_bytes_with_nul());
        if bytes.len() > len {
            return SkbStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
        SkbStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn skb_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn skb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Creates a family of the given `SkbKind`. `eta` is ignored for the unperturbed kinds; `eta0 <= 0`
/// means no localization (perturbed-odd) or the default 4 eta (perturbed-even).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn skb_family_new(k: usize, kind: i32, eta: f64, eta0: f64, out: *mut *mut SkbFamily) -> SkbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let d = dim(k)?;
        let kind = SkbKind::from_raw(kind)
            .ok_or_else(|| (SkbStatus::InvalidArgument, format!("unknown family kind {kind}")))?;
        let spec = lib(match kind {
            SkbKind::Odd if d.is_odd() => Ok(FamilySpec::odd_quadratic(d)),
            SkbKind::Odd => Err(Error::Unsupported(format!("the odd family needs odd k, got {k}"))),
            SkbKind::EvenMinus => FamilySpec::even_model(d, ModelSign::Minus),
            SkbKind::EvenPlus => FamilySpec::even_model(d, ModelSign::Plus),
            SkbKind::PerturbedOdd if !d.is_odd() => Err(Error::Unsupported(format!("perturbed-odd needs odd k, got {k}"))),
            SkbKind::PerturbedOdd if eta0 > 0.0 => localized_family(d, eta, eta0, ModelSign::Minus),
            SkbKind::PerturbedOdd => FamilySpec::perturbed_odd(d, eta),
            SkbKind::PerturbedEven if d.is_odd() => Err(Error::Unsupported(format!("perturbed-even needs even k, got {k}"))),
            SkbKind::PerturbedEven => localized_family(d, eta, if eta0 > 0.0 { eta0 } else { 4.0 * eta }, ModelSign::Minus),
        })?;
        *out = Box::into_raw(Box::new(SkbFamily { spec }));
        Ok(())
    })
}

/// # Safety
/// `family` must be null or a handle from `skb_family_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn skb_family_free(family: *mut SkbFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Dimension k of the family, 0 for a null handle.
///
/// # Safety
/// `family` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn skb_family_k(family: *const SkbFamily) -> usize {
    family.as_ref().map_or(0, |f| f.spec.k.k())
}

unsafe fn point<'a>(family: *const SkbFamily, x: *const f64, len: usize) -> Result<(&'a SkbFamily, HPoint), (SkbStatus, String)> {
    let fam = family.as_ref().ok_or_else(null)?;
    if x.is_null() {
        return Err(null());
    }
    let k = fam.spec.k.k();
    if len != k {
        return Err((SkbStatus::InvalidArgument, format!("point has {len} coordinates, expected {k}")));
    }
    let p = lib(HPoint::new(std::slice::from_raw_parts(x, len).to_vec()))?;
    Ok((fam, p))
}

/// Writes F(x, lambda) into `out` (k entries).
///
/// # Safety
/// `x` must hold `len` readable doubles and `out` `len` writable ones.
#[no_mangle]
pub unsafe extern "C" fn skb_family_eval(family: *const SkbFamily, x: *const f64, len: usize, lambda: f64, out: *mut f64) -> SkbStatus {
    guard(|| {
        let (fam, p) = point(family, x, len)?;
        if out.is_null() {
            return Err(null());
        }
        let f = fam.spec.eval(&p, lambda);
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(f.coords());
        Ok(())
    })
}

/// Number of negative eigenvalues of DF on H_{k-1}; errors if non-hyperbolic.
///
/// # Safety
/// `x` must hold `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skb_family_index(family: *const SkbFamily, x: *const f64, len: usize, lambda: f64, out: *mut usize) -> SkbStatus {
    guard(|| {
        let (fam, p) = point(family, x, len)?;
        if out.is_null() {
            return Err(null());
        }
        *out = lib(spectrum(&fam.spec.jac_restricted(&p, lambda)).checked_index())?;
        Ok(())
    })
}

/// Signed equilibrium count sum (-1)^index at `lambda`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skb_poincare_hopf(family: *const SkbFamily, lambda: f64, out: *mut i64) -> SkbStatus {
    guard(|| {
        let fam = family.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let v = lib(poincare_hopf(&fam.spec, lambda))?;
        *out = i64::try_from(v).map_err(|_| (SkbStatus::Numerical, "count overflows i64".to_string()))?;
        Ok(())
    })
}

/// Predicted crossing-curve and fold counts.
///
/// # Safety
/// Both out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn skb_predicted_counts(k: usize, crossings: *mut u64, folds: *mut u64) -> SkbStatus {
    guard(|| {
        if crossings.is_null() || folds.is_null() {
            return Err(null());
        }
        let c = lib(predicted_counts(dim(k)?))?;
        let to64 = |v: u128| u64::try_from(v).map_err(|_| (SkbStatus::InvalidArgument, format!("count for k = {k} overflows u64")));
        *crossings = to64(c.crossings)?;
        *folds = to64(c.folds)?;
        Ok(())
    })
}

/// Closed-form fold value gamma_{k,p}.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skb_gamma(k: usize, p: usize, eta: f64, out: *mut f64) -> SkbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = lib(gamma_closed(dim(k)?, p, eta))?;
        Ok(())
    })
}

/// Runs the crossing-curve and fold verification over the default window.
/// Count mismatches are reported in the handle, not as an error status.
///
/// # Safety
/// `out` must be valid for writing a handle.
#[no_mangle]
pub unsafe extern "C" fn skb_verify(k: usize, eta: f64, eta0: f64, out: *mut *mut SkbReport) -> SkbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let mut cfg = VerifyConfig::new(dim(k)?, eta);
        if eta0 > 0.0 {
            cfg.eta0 = Some(eta0);
        }
        let report = lib(verify_minimal_model(&cfg))?;
        *out = Box::into_raw(Box::new(SkbReport { report }));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle from `skb_verify` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn skb_report_free(report: *mut SkbReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn skb_report_counts(report: *const SkbReport, crossings: *mut u64, folds: *mut u64) -> SkbStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(null)?;
        if crossings.is_null() || folds.is_null() {
            return Err(null());
        }
        *crossings = r.report.crossings as u64;
        *folds = r.report.folds as u64;
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn skb_report_status(report: *const SkbReport) -> SkbVerifyStatus {
    match report.as_ref().map(|r| r.report.status) {
        Some(VerifyStatus::Pass) => SkbVerifyStatus::Pass,
        Some(VerifyStatus::Fail) => SkbVerifyStatus::Fail,
        Some(VerifyStatus::NumericalFailure) | None => SkbVerifyStatus::NumericalFailure,
    }
}

/// The full report as JSON; free with `skb_string_free`. Null on failure.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn skb_report_json(report: *const SkbReport) -> *mut c_char {
    let mut out = ptr::null_mut();
    guard(|| {
        let r = report.as_ref().ok_or_else(null)?;
        let s = serde_json::to_string(&r.report).map_err(|e| (SkbStatus::Numerical, e.to_string()))?;
        out = CString::new(s).map_err(|e| (SkbStatus::Numerical, e.to_string()))?.into_raw();
        Ok(())
    });
    out
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn skb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panic_is_caught() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, SkbStatus::Panic);
        assert!(skb_last_error_length() > 0);
    }
}
