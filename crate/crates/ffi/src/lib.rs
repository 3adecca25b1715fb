//! C ABI over `jetcarnot`.
//!
//! Objects cross the boundary as opaque heap handles that the caller frees
//! with the matching `*_free`. Every fallible call returns a [`JcStatus`] and
//! writes results through out-pointers; on failure the message is available
//! from [`jc_last_error_message`] on the same thread. Panics are caught and
//! reported as [`JcStatus::Panic`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use jetcarnot::jet::{dilate, JetPoint, JetShape};
use jetcarnot::jetmaps::{prolong, ScalarField};
use jetcarnot::nonextension::{self, BoundaryMapSpec};
use jetcarnot::paths::{self, OptimizerOpts};
use jetcarnot::poly::Polynomial;
use jetcarnot::{calibration, fillvol, heisenberg, JetError};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    ShapeMismatch = 4,
    IncompatiblePair = 5,
    ZeroGap = 6,
    InfeasibleAtBudget = 7,
    Parse = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
    Other = 12,
}

/// A point of `J^k(R^n)`.
pub struct JcJetPoint(JetPoint);

/// A scalar field on `R^n` given by a polynomial.
pub struct JcField(ScalarField);

/// A boundary pair `(f0, f1)` at a dilation scale.
pub struct JcBoundarySpec(BoundaryMapSpec);

/// Optimizer settings for the distance upper bounds.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct JcOptimizerOpts {
    pub steps: usize,
    pub starts: usize,
    pub seed: u64,
    pub endpoint_tol: f64,
    pub max_iters: usize,
}

impl From<JcOptimizerOpts> for OptimizerOpts {
    fn from(o: JcOptimizerOpts) -> Self {
        OptimizerOpts {
            steps: o.steps,
            starts: o.starts,
            seed: o.seed,
            endpoint_tol: o.endpoint_tol,
            max_iters: o.max_iters,
        }
    }
}

enum Failure {
    Lib(JetError),
    Status(JcStatus, String),
}

impl From<JetError> for Failure {
    fn from(e: JetError) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &JetError) -> JcStatus {
    match e {
        JetError::DimensionMismatch { .. } | JetError::AxisOutOfRange { .. } => JcStatus::DimensionMismatch,
        JetError::ShapeMismatch { .. } | JetError::NotHeisenberg(_) => JcStatus::ShapeMismatch,
        JetError::IncompatiblePair { .. } => JcStatus::IncompatiblePair,
        JetError::ZeroGap => JcStatus::ZeroGap,
        JetError::InfeasibleAtBudget { .. } => JcStatus::InfeasibleAtBudget,
        JetError::Parse(_) => JcStatus::Parse,
        JetError::Io(_) => JcStatus::Io,
        JetError::InvalidArgument(_)
        | JetError::InvalidIndex(_)
        | JetError::NotOnBoundary(_)
        | JetError::NonFinite(_)
        | JetError::OrderUnavailable { .. }
        | JetError::DegenerateGrid(_) => JcStatus::InvalidArgument,
        _ => JcStatus::Other,
    }
}

fn guard<F: FnOnce() -> FfiResult<()>>(f: F) -> JcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            JcStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(msg);
            s
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {msg}"));
            JcStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure::Status(JcStatus::NullPointer, format!("{name} is null"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn input_slice<'a>(p: *const f64, len: usize, name: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn input_str<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure::Status(JcStatus::Parse, format!("{name} is not UTF-8: {e}")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

fn json_err(e: serde_json::Error) -> Failure {
    Failure::Lib(JetError::Parse(e.to_string()))
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
/// message length excluding the terminator, or 0 when there is no error.
#[no_mangle]
pub unsafe extern "C" fn jc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn jc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Frees a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn jc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default optimizer settings.
#[no_mangle]
pub extern "C" fn jc_optimizer_opts_default() -> JcOptimizerOpts {
    let o = OptimizerOpts::default();
    JcOptimizerOpts {
        steps: o.steps,
        starts: o.starts,
        seed: o.seed,
        endpoint_tol: o.endpoint_tol,
        max_iters: o.max_iters,
    }
}

/// Dimension of `J^k(R^n)`, written to `out_dim`.
#[no_mangle]
pub unsafe extern "C" fn jc_jet_dim(n: usize, k: usize, out_dim: *mut usize) -> JcStatus {
    guard(|| {
        *out(out_dim, "out_dim")? = JetShape::new(n, k)?.total_dim();
        Ok(())
    })
}

/// Builds a point from `len` coordinates in the layout `[x, u^k, ..., u^0]`.
#[no_mangle]
pub unsafe extern "C" fn jc_jet_point_new(
    n: usize,
    k: usize,
    coords: *const f64,
    len: usize,
    out_point: *mut *mut JcJetPoint,
) -> JcStatus {
    guard(|| {
        let slot = out(out_point, "out_point")?;
        let c = input_slice(coords, len, "coords")?;
        let p = JetPoint::new(JetShape::new(n, k)?, c.to_vec())?;
        *slot = boxed(JcJetPoint(p));
        Ok(())
    })
}

/// Parses a JetPoint JSON document.
#[no_mangle]
pub unsafe extern "C" fn jc_jet_point_from_json(json: *const c_char, out_point: *mut *mut JcJetPoint) -> JcStatus {
    guard(|| {
        let slot = out(out_point, "out_point")?;
        let p: JetPoint = serde_json::from_str(input_str(json, "json")?).map_err(json_err)?;
        *slot = boxed(JcJetPoint(p));
        Ok(())
    })
}

/// Serializes a point to JetPoint JSON. Free the result with [`jc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn jc_jet_point_to_json(p: *const JcJetPoint, out_json: *mut *mut c_char) -> JcStatus {
    guard(|| {
        let p = deref(p, "point")?;
        let slot = out(out_json, "out_json")?;
        let s = serde_json::to_string(&p.0).map_err(json_err)?;
        *slot = CString::new(s).map_err(|e| Failure::Status(JcStatus::Other, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Frees a point. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn jc_jet_point_free(p: *mut JcJetPoint) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of coordinates of `p`, or 0 when `p` is null.
#[no_mangle]
pub unsafe extern "C" fn jc_jet_point_len(p: *const JcJetPoint) -> usize {
    p.as_ref().map_or(0, |p| p.0.coords().len())
}

/// Copies the coordinates of `p` into `buf`, which must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn jc_jet_point_coords(p: *const JcJetPoint, buf: *mut f64, len: usize) -> JcStatus {
    guard(|| {
        let c = deref(p, "point")?.0.coords();
        if len < c.len() {
            return Err(Failure::Status(
                JcStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", c.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(c.as_ptr(), buf, c.len());
        Ok(())
    })
}

/// The dilation `delta_scale(p)`.
#[no_mangle]
pub unsafe extern "C" fn jc_dilate(scale: f64, p: *const JcJetPoint, out_point: *mut *mut JcJetPoint) -> JcStatus {
    guard(|| {
        let p = deref(p, "point")?;
        let slot = out(out_point, "out_point")?;
        *slot = boxed(JcJetPoint(dilate(scale, &p.0)?));
        Ok(())
    })
}

/// Group product of two points of `J^1(R^n)`.
#[no_mangle]
pub unsafe extern "C" fn jc_heisenberg_product(
    p: *const JcJetPoint,
    q: *const JcJetPoint,
    out_point: *mut *mut JcJetPoint,
) -> JcStatus {
    guard(|| {
        let (p, q) = (deref(p, "p")?, deref(q, "q")?);
        let slot = out(out_point, "out_point")?;
        *slot = boxed(JcJetPoint(heisenberg::heisenberg_product(&p.0, &q.0)?));
        Ok(())
    })
}

/// Parses a polynomial JSON document into a field.
#[no_mangle]
pub unsafe extern "C" fn jc_field_from_json(json: *const c_char, out_field: *mut *mut JcField) -> JcStatus {
    guard(|| {
        let slot = out(out_field, "out_field")?;
        let p: Polynomial = serde_json::from_str(input_str(json, "json")?).map_err(json_err)?;
        *slot = boxed(JcField(p.into()));
        Ok(())
    })
}

/// Frees a field. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn jc_field_free(f: *mut JcField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// The k-jet prolongation `j^k f(x)`; `x` has `len == n` entries.
#[no_mangle]
pub unsafe extern "C" fn jc_prolong(
    f: *const JcField,
    k: usize,
    x: *const f64,
    len: usize,
    out_point: *mut *mut JcJetPoint,
) -> JcStatus {
    guard(|| {
        let f = deref(f, "field")?;
        let slot = out(out_point, "out_point")?;
        let x = input_slice(x, len, "x")?;
        *slot = boxed(JcJetPoint(prolong(&f.0, k, x)?));
        Ok(())
    })
}

fn opts_or_default(opts: *const JcOptimizerOpts) -> OptimizerOpts {
    unsafe { opts.as_ref() }.map_or_else(OptimizerOpts::default, |o| (*o).into())
}

/// Lower bound on the Carnot distance from homogeneous coordinate gaps.
#[no_mangle]
pub unsafe extern "C" fn jc_coordinate_lower_bound(
    p: *const JcJetPoint,
    q: *const JcJetPoint,
    out_value: *mut f64,
) -> JcStatus {
    guard(|| {
        let (p, q) = (deref(p, "p")?, deref(q, "q")?);
        *out(out_value, "out_value")? = paths::coordinate_lower_bound(&p.0, &q.0)?;
        Ok(())
    })
}

/// Length of a horizontal curve from `p` to `q`. `opts` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn jc_cc_upper_bound(
    p: *const JcJetPoint,
    q: *const JcJetPoint,
    opts: *const JcOptimizerOpts,
    out_value: *mut f64,
) -> JcStatus {
    guard(|| {
        let (p, q) = (deref(p, "p")?, deref(q, "q")?);
        let slot = out(out_value, "out_value")?;
        *slot = paths::cc_upper_bound(&p.0, &q.0, &opts_or_default(opts))?;
        Ok(())
    })
}

/// Upper bound on the Riemannian distance of `g0`. `opts` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn jc_r0_upper_bound(
    p: *const JcJetPoint,
    q: *const JcJetPoint,
    opts: *const JcOptimizerOpts,
    out_value: *mut f64,
) -> JcStatus {
    guard(|| {
        let (p, q) = (deref(p, "p")?, deref(q, "q")?);
        let slot = out(out_value, "out_value")?;
        *slot = paths::r0_upper_bound(&p.0, &q.0, &opts_or_default(opts))?;
        Ok(())
    })
}

/// The canonical pair `f0 = 0`, `f1 = prod (x_i (1 - x_i))^{k+1}` at `scale`.
#[no_mangle]
pub unsafe extern "C" fn jc_boundary_spec_canonical(
    n: usize,
    k: usize,
    scale: f64,
    out_spec: *mut *mut JcBoundarySpec,
) -> JcStatus {
    guard(|| {
        let slot = out(out_spec, "out_spec")?;
        *slot = boxed(JcBoundarySpec(BoundaryMapSpec::canonical(n, k, scale)?));
        Ok(())
    })
}

/// A pair of boundary-compatible fields at `scale`. The fields are copied.
#[no_mangle]
pub unsafe extern "C" fn jc_boundary_spec_new(
    f0: *const JcField,
    f1: *const JcField,
    k: usize,
    scale: f64,
    out_spec: *mut *mut JcBoundarySpec,
) -> JcStatus {
    guard(|| {
        let (f0, f1) = (deref(f0, "f0")?, deref(f1, "f1")?);
        let slot = out(out_spec, "out_spec")?;
        *slot = boxed(JcBoundarySpec(BoundaryMapSpec::new(f0.0.clone(), f1.0.clone(), k, scale)?));
        Ok(())
    })
}

/// Frees a boundary spec. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn jc_boundary_spec_free(s: *mut JcBoundarySpec) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// `int (f0 - f1)` over the unit cube.
#[no_mangle]
pub unsafe extern "C" fn jc_integral_gap(spec: *const JcBoundarySpec, out_value: *mut f64) -> JcStatus {
    guard(|| {
        *out(out_value, "out_value")? = deref(spec, "spec")?.0.integral_gap();
        Ok(())
    })
}

/// Certified lower bound on the Lipschitz constant of any extension.
#[no_mangle]
pub unsafe extern "C" fn jc_certified_lower_bound(spec: *const JcBoundarySpec, out_value: *mut f64) -> JcStatus {
    guard(|| {
        let spec = deref(spec, "spec")?;
        *out(out_value, "out_value")? = nonextension::certified_lower_bound(&spec.0)?;
        Ok(())
    })
}

/// Integral of `omega` over the boundary image, fixed by the boundary data alone.
#[no_mangle]
pub unsafe extern "C" fn jc_extension_boundary_value(spec: *const JcBoundarySpec, out_value: *mut f64) -> JcStatus {
    guard(|| {
        *out(out_value, "out_value")? = calibration::extension_boundary_value(&deref(spec, "spec")?.0);
        Ok(())
    })
}

/// Certified upper bound on the Lipschitz constant of the boundary map at
/// scale one, from `per_axis` grid points.
#[no_mangle]
pub unsafe extern "C" fn jc_lip_f_upper(spec: *const JcBoundarySpec, per_axis: usize, out_value: *mut f64) -> JcStatus {
    guard(|| {
        let spec = deref(spec, "spec")?;
        *out(out_value, "out_value")? = nonextension::lip_f_upper(&spec.0, per_axis)?;
        Ok(())
    })
}

/// Filling-volume constant `delta` for a Lipschitz bound `lip_f_upper`.
#[no_mangle]
pub unsafe extern "C" fn jc_delta_constant(
    spec: *const JcBoundarySpec,
    lip_f_upper: f64,
    out_value: *mut f64,
) -> JcStatus {
    guard(|| {
        let spec = deref(spec, "spec")?;
        *out(out_value, "out_value")? = fillvol::delta_constant(&spec.0, lip_f_upper)?;
        Ok(())
    })
}

/// Mass bound of the boundary cycle at dilation `scale`.
#[no_mangle]
pub unsafe extern "C" fn jc_mass_upper(
    spec: *const JcBoundarySpec,
    scale: f64,
    lip_f_upper: f64,
    out_value: *mut f64,
) -> JcStatus {
    guard(|| {
        let spec = deref(spec, "spec")?;
        *out(out_value, "out_value")? = fillvol::mass_upper(&spec.0, scale, lip_f_upper)?;
        Ok(())
    })
}

/// Lower bound on the mass of any filling of the boundary cycle at `scale`.
#[no_mangle]
pub unsafe extern "C" fn jc_filling_lower(spec: *const JcBoundarySpec, scale: f64, out_value: *mut f64) -> JcStatus {
    guard(|| {
        let spec = deref(spec, "spec")?;
        *out(out_value, "out_value")? = fillvol::filling_lower(&spec.0, scale)?;
        Ok(())
    })
}

/// Smallest witness level at which a `lambda`-Lipschitz extension is impossible.
#[no_mangle]
pub unsafe extern "C" fn jc_contradiction_level(
    n: usize,
    k: usize,
    gap: f64,
    lambda: f64,
    out_level: *mut usize,
) -> JcStatus {
    guard(|| {
        *out(out_level, "out_level")? = nonextension::contradiction_level(n, k, gap, lambda)?;
        Ok(())
    })
}
