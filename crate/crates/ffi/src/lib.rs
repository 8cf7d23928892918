//! C interface to the `joyce` library.
//!
//! Every fallible call returns a [`JoyceStatus`]; on failure the message is
//! kept per thread and can be read with [`joyce_last_error`]. Handles are
//! opaque and must be released with their `_free` function.

use joyce::a2::{self, A2Point};
use joyce::bps::BpsStructure;
use joyce::io::parse_structure;
use joyce::specfn;
use joyce::{Error, C64};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoyceStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Panic = 3,
    Pole = 10,
    BranchCut = 11,
    BranchPoint = 12,
    StripViolation = 13,
    PoleNearContour = 14,
    PoleHit = 15,
    NonIntegerBranch = 16,
    BoundaryActive = 17,
    NoActiveClasses = 18,
    CutoffTooSmall = 19,
    FinitenessUndecidable = 20,
    NotUncoupled = 21,
    NotFinite = 22,
    IllConditioned = 23,
    ZeroCentralCharge = 24,
    DegenerateForm = 25,
    Dimension = 26,
    NotTame = 27,
    OnDiscriminant = 28,
    RootCollision = 29,
    Wall = 30,
    QOnCycle = 31,
    PZero = 32,
    JacobianSingular = 33,
    NewtonDiverged = 34,
    RegionUnsupported = 35,
    InvalidInput = 36,
}

impl From<&Error> for JoyceStatus {
    fn from(e: &Error) -> Self {
        use JoyceStatus as S;
        match e {
            Error::Pole(_) => S::Pole,
            Error::BranchCut(_) => S::BranchCut,
            Error::BranchPoint(_) => S::BranchPoint,
            Error::StripViolation(_) => S::StripViolation,
            Error::PoleNearContour(_) => S::PoleNearContour,
            Error::PoleHit(_) => S::PoleHit,
            Error::NonIntegerBranch(_) => S::NonIntegerBranch,
            Error::BoundaryActive(_) => S::BoundaryActive,
            Error::NoActiveClasses => S::NoActiveClasses,
            Error::CutoffTooSmall(_) => S::CutoffTooSmall,
            Error::FinitenessUndecidable(_) => S::FinitenessUndecidable,
            Error::NotUncoupled => S::NotUncoupled,
            Error::NotFinite => S::NotFinite,
            Error::IllConditioned(_) => S::IllConditioned,
            Error::ZeroCentralCharge => S::ZeroCentralCharge,
            Error::DegenerateForm => S::DegenerateForm,
            Error::Dimension(_) => S::Dimension,
            Error::NotTame(_) => S::NotTame,
            Error::OnDiscriminant => S::OnDiscriminant,
            Error::RootCollision => S::RootCollision,
            Error::Wall => S::Wall,
            Error::QOnCycle => S::QOnCycle,
            Error::PZero => S::PZero,
            Error::JacobianSingular(_) => S::JacobianSingular,
            Error::NewtonDiverged(_) => S::NewtonDiverged,
            Error::RegionUnsupported(_) => S::RegionUnsupported,
            Error::InvalidInput(_) => S::InvalidInput,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JoyceComplex {
    pub re: f64,
    pub im: f64,
}

impl From<JoyceComplex> for C64 {
    fn from(z: JoyceComplex) -> Self {
        C64::new(z.re, z.im)
    }
}

impl From<C64> for JoyceComplex {
    fn from(z: C64) -> Self {
        JoyceComplex { re: z.re, im: z.im }
    }
}

/// A parsed BPS structure.
pub struct JoyceStructure(BpsStructure);

/// A point `(a, b)` of the A2 base.
pub struct JoyceA2Point(A2Point);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Fail {
    Null,
    Utf8,
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, recording any failure and turning panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> JoyceStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => JoyceStatus::Ok,
        Ok(Err(Fail::Null)) => {
            set_error("null pointer argument".into());
            JoyceStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string is not valid UTF-8".into());
            JoyceStatus::InvalidString
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(format!("{}: {e}", e.code()));
            JoyceStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            JoyceStatus::Panic
        }
    }
}

fn writable<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    // SAFETY: callers pass either null or a valid, aligned, writable pointer.
    unsafe { p.as_mut() }.ok_or(Fail::Null)
}

fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    // SAFETY: non-null handles come from this library and are still live.
    unsafe { p.as_ref() }.ok_or(Fail::Null)
}

/// Copies the last error message of this thread into `buf`, NUL-terminated
/// and truncated to `len` bytes. Returns the full message length plus one,
/// or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn joyce_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn joyce_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Λ(w, η).
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn joyce_lambda(w: JoyceComplex, eta: JoyceComplex, out: *mut JoyceComplex) -> JoyceStatus {
    guard(|| {
        let o = writable(out)?;
        *o = specfn::lambda_fn(w.into(), eta.into())?.into();
        Ok(())
    })
}

/// Li_k(x) on the principal branch.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn joyce_polylog(k: u32, x: JoyceComplex, out: *mut JoyceComplex) -> JoyceStatus {
    guard(|| {
        let o = writable(out)?;
        *o = specfn::polylog(k, x.into())?.into();
        Ok(())
    })
}

/// F(z | ω₁, ω₂) for the conifold.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn joyce_conifold_f(
    z: JoyceComplex,
    w1: JoyceComplex,
    w2: JoyceComplex,
    out: *mut JoyceComplex,
) -> JoyceStatus {
    guard(|| {
        let o = writable(out)?;
        *o = specfn::conifold_f(z.into(), w1.into(), w2.into())?.into();
        Ok(())
    })
}

/// G(z | ω₁, ω₂) for the conifold.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn joyce_conifold_g(
    z: JoyceComplex,
    w1: JoyceComplex,
    w2: JoyceComplex,
    out: *mut JoyceComplex,
) -> JoyceStatus {
    guard(|| {
        let o = writable(out)?;
        *o = specfn::conifold_g(z.into(), w1.into(), w2.into())?.into();
        Ok(())
    })
}

/// Parses a structure from its JSON file format.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn joyce_structure_from_json(json: *const c_char, out: *mut *mut JoyceStructure) -> JoyceStatus {
    guard(|| {
        let o = writable(out)?;
        if json.is_null() {
            return Err(Fail::Null);
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| Fail::Utf8)?;
        let s = parse_structure(text)?;
        *o = Box::into_raw(Box::new(JoyceStructure(s)));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from `joyce_structure_from_json`, freed once.
#[no_mangle]
pub unsafe extern "C" fn joyce_structure_free(s: *mut JoyceStructure) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn joyce_structure_rank(s: *const JoyceStructure, out: *mut usize) -> JoyceStatus {
    guard(|| {
        let s = handle(s)?;
        *writable(out)? = s.0.rank();
        Ok(())
    })
}

/// Ω(γ) as a reduced fraction `num / den`, with γ given by `len` coordinates.
///
/// # Safety
/// `s` must be a live handle; `gamma` valid for `len` values; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn joyce_structure_omega(
    s: *const JoyceStructure,
    gamma: *const i64,
    len: usize,
    num: *mut i64,
    den: *mut i64,
) -> JoyceStatus {
    guard(|| {
        let s = handle(s)?;
        if gamma.is_null() {
            return Err(Fail::Null);
        }
        let g = std::slice::from_raw_parts(gamma, len);
        if len != s.0.rank() {
            return Err(Error::Dimension(format!("class of length {len} for rank {}", s.0.rank())).into());
        }
        let w = s.0.omega(g);
        let (n, d) = (writable(num)?, writable(den)?);
        *n = *w.numer();
        *d = *w.denom();
        Ok(())
    })
}

/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn joyce_a2_point_new(
    a: JoyceComplex,
    b: JoyceComplex,
    out: *mut *mut JoyceA2Point,
) -> JoyceStatus {
    guard(|| {
        let o = writable(out)?;
        let p = A2Point::new(a.into(), b.into())?;
        *o = Box::into_raw(Box::new(JoyceA2Point(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from `joyce_a2_point_new`, freed once.
#[no_mangle]
pub unsafe extern "C" fn joyce_a2_point_free(p: *mut JoyceA2Point) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Periods of the canonical cycle basis, written to `out[0..2]`.
///
/// # Safety
/// `p` must be a live handle; `out` valid for two values.
#[no_mangle]
pub unsafe extern "C" fn joyce_a2_periods(p: *const JoyceA2Point, out: *mut JoyceComplex) -> JoyceStatus {
    guard(|| {
        let p = handle(p)?;
        if out.is_null() {
            return Err(Fail::Null);
        }
        let z = a2::periods(&p.0, &a2::CycleBasis::canonical(&p.0)?)?;
        let o = std::slice::from_raw_parts_mut(out, 2);
        o[0] = z[0].into();
        o[1] = z[1].into();
        Ok(())
    })
}

/// The Joyce form in period coordinates, row-major into `out[0..4]`, and
/// its distance from the expected constant form.
///
/// # Safety
/// `p` must be a live handle; `out` valid for four values; `error` writable.
#[no_mangle]
pub unsafe extern "C" fn joyce_a2_joyce_form(
    p: *const JoyceA2Point,
    tol: f64,
    out: *mut JoyceComplex,
    error: *mut f64,
) -> JoyceStatus {
    guard(|| {
        let p = handle(p)?;
        if out.is_null() {
            return Err(Fail::Null);
        }
        let err = writable(error)?;
        let f = a2::a2_joyce_form(&p.0, tol)?;
        let o = std::slice::from_raw_parts_mut(out, 4);
        for i in 0..2 {
            for j in 0..2 {
                o[2 * i + j] = f.g_ab[(i, j)].into();
            }
        }
        *err = f.error;
        Ok(())
    })
}
