use std::ffi::{c_char, CStr, CString};
use std::ptr;

use jetcarnot::jet::{dilate, JetPoint, JetShape};
use jetcarnot::nonextension::BoundaryMapSpec;
use jetcarnot_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { jc_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string();
    assert_eq!(s.len(), n.min(255));
    s
}

fn point(n: usize, k: usize, coords: &[f64]) -> *mut JcJetPoint {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { jc_jet_point_new(n, k, coords.as_ptr(), coords.len(), &mut p) }, JcStatus::Ok);
    assert!(!p.is_null());
    p
}

fn coords(p: *const JcJetPoint) -> Vec<f64> {
    let len = unsafe { jc_jet_point_len(p) };
    let mut v = vec![0.0; len];
    assert_eq!(unsafe { jc_jet_point_coords(p, v.as_mut_ptr(), len) }, JcStatus::Ok);
    v
}

#[test]
fn point_lifecycle_and_json() {
    let mut dim = 0;
    assert_eq!(unsafe { jc_jet_dim(2, 1, &mut dim) }, JcStatus::Ok);
    assert_eq!(dim, 5);
    let c = [0.5, -1.0, 2.0, 3.0, 4.0];
    let p = point(2, 1, &c);
    assert_eq!(coords(p), c);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { jc_jet_point_to_json(p, &mut json) }, JcStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
    let core: JetPoint = serde_json::from_str(&text).unwrap();
    assert_eq!(core.coords(), &c);
    let mut q = ptr::null_mut();
    assert_eq!(unsafe { jc_jet_point_from_json(json, &mut q) }, JcStatus::Ok);
    assert_eq!(coords(q), c);
    unsafe {
        jc_string_free(json);
        jc_jet_point_free(p);
        jc_jet_point_free(q);
        jc_jet_point_free(ptr::null_mut());
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut p = ptr::null_mut();
    let short = [1.0, 2.0];
    assert_eq!(unsafe { jc_jet_point_new(1, 1, short.as_ptr(), 2, &mut p) }, JcStatus::DimensionMismatch);
    assert!(p.is_null());
    assert!(last_error().contains("expected 3"));

    assert_eq!(unsafe { jc_jet_point_new(1, 1, ptr::null(), 3, &mut p) }, JcStatus::NullPointer);
    assert!(last_error().contains("coords"));

    let bad = CString::new("{\"n\": 1").unwrap();
    assert_eq!(unsafe { jc_jet_point_from_json(bad.as_ptr(), &mut p) }, JcStatus::Parse);

    let q = point(1, 1, &[0.0, 1.0, 2.0]);
    let mut buf = [0.0; 2];
    assert_eq!(unsafe { jc_jet_point_coords(q, buf.as_mut_ptr(), 2) }, JcStatus::BufferTooSmall);
    let mut small = [0 as c_char; 4];
    let full = unsafe { jc_last_error_message(small.as_mut_ptr(), small.len()) };
    assert!(full > 3);
    assert_eq!(unsafe { CStr::from_ptr(small.as_ptr()) }.to_bytes().len(), 3);

    let mut v = 0.0;
    assert_eq!(unsafe { jc_dilate(1.0, q, &mut ptr::null_mut()) }, JcStatus::Ok);
    assert_eq!(unsafe { jc_coordinate_lower_bound(q, ptr::null(), &mut v) }, JcStatus::NullPointer);
    assert_eq!(unsafe { jc_jet_dim(1, 1, &mut 0) }, JcStatus::Ok);
    assert_eq!(unsafe { jc_last_error_message(ptr::null_mut(), 0) }, 0);
    unsafe { jc_jet_point_free(q) };
}

#[test]
fn dilation_and_group_law_match_core() {
    let c = [0.3, -0.7, 1.1];
    let p = point(1, 1, &c);
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { jc_dilate(2.0, p, &mut d) }, JcStatus::Ok);
    let core = dilate(2.0, &JetPoint::new(JetShape::new(1, 1).unwrap(), c.to_vec()).unwrap()).unwrap();
    assert_eq!(coords(d), core.coords());

    let mut prod = ptr::null_mut();
    assert_eq!(unsafe { jc_heisenberg_product(p, d, &mut prod) }, JcStatus::Ok);
    assert_eq!(coords(prod).len(), 3);
    let r = point(1, 2, &[0.0; 4]);
    assert_eq!(unsafe { jc_heisenberg_product(r, r, &mut ptr::null_mut()) }, JcStatus::ShapeMismatch);
    unsafe {
        for h in [p, d, prod, r] {
            jc_jet_point_free(h);
        }
    }
}

#[test]
fn prolongation_of_a_field() {
    // f(x) = x^3 on R, so j^2 f(2) = [x, u^2, u^1, u^0] = [2, 12, 12, 8].
    let json = CString::new(r#"{"n": 1, "terms": [{"index": [3], "coeff": 1.0}]}"#).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { jc_field_from_json(json.as_ptr(), &mut f) }, JcStatus::Ok);
    let mut p = ptr::null_mut();
    let x = [2.0];
    assert_eq!(unsafe { jc_prolong(f, 2, x.as_ptr(), 1, &mut p) }, JcStatus::Ok);
    assert_eq!(coords(p), [2.0, 12.0, 12.0, 8.0]);
    let wrong = [1.0, 2.0];
    assert_eq!(unsafe { jc_prolong(f, 2, wrong.as_ptr(), 2, &mut ptr::null_mut()) }, JcStatus::DimensionMismatch);
    unsafe {
        jc_jet_point_free(p);
        jc_field_free(f);
    }
}

#[test]
fn distance_sandwich() {
    let p = point(1, 1, &[0.0, 0.0, 0.0]);
    let q = point(1, 1, &[0.4, -0.3, 0.2]);
    let mut opts = jc_optimizer_opts_default();
    opts.steps = 32;
    opts.starts = 4;
    let (mut lo, mut r0, mut cc) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(jc_coordinate_lower_bound(p, q, &mut lo), JcStatus::Ok);
        assert_eq!(jc_r0_upper_bound(p, q, &opts, &mut r0), JcStatus::Ok);
        assert_eq!(jc_cc_upper_bound(p, q, ptr::null(), &mut cc), JcStatus::Ok);
    }
    assert!(lo > 0.0 && lo <= r0 * (1.0 + 1e-9), "{lo} {r0}");
    assert!(r0 <= cc * (1.0 + 1e-9), "{r0} {cc}");
    opts.steps = 0;
    assert_eq!(unsafe { jc_cc_upper_bound(p, q, &opts, &mut cc) }, JcStatus::InvalidArgument);
    unsafe {
        jc_jet_point_free(p);
        jc_jet_point_free(q);
    }
}

#[test]
fn boundary_quantities_match_core() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { jc_boundary_spec_canonical(1, 1, 2.0, &mut s) }, JcStatus::Ok);
    let core = BoundaryMapSpec::canonical(1, 1, 2.0).unwrap();
    let (mut gap, mut cert, mut ext, mut lip, mut delta, mut mass, mut fill) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(jc_integral_gap(s, &mut gap), JcStatus::Ok);
        assert_eq!(jc_certified_lower_bound(s, &mut cert), JcStatus::Ok);
        assert_eq!(jc_extension_boundary_value(s, &mut ext), JcStatus::Ok);
        assert_eq!(jc_lip_f_upper(s, 1025, &mut lip), JcStatus::Ok);
        assert_eq!(jc_delta_constant(s, lip, &mut delta), JcStatus::Ok);
        assert_eq!(jc_mass_upper(s, 2.0, lip, &mut mass), JcStatus::Ok);
        assert_eq!(jc_filling_lower(s, 2.0, &mut fill), JcStatus::Ok);
    }
    assert_eq!(gap, core.integral_gap());
    assert!((gap + 1.0 / 30.0).abs() < 1e-15);
    assert_eq!(cert, jetcarnot::nonextension::certified_lower_bound(&core).unwrap());
    assert!((ext.abs() - 8.0 / 30.0).abs() < 1e-14);
    assert!(lip >= 5f64.sqrt());
    assert!((delta * mass.powi(3) - fill).abs() < 1e-12 * fill);

    let mut level = 0;
    assert_eq!(unsafe { jc_contradiction_level(1, 1, gap, 1.0, &mut level) }, JcStatus::Ok);
    assert_eq!(level, 5);

    let zero = CString::new(r#"{"n": 1, "terms": []}"#).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { jc_field_from_json(zero.as_ptr(), &mut f) }, JcStatus::Ok);
    let mut same = ptr::null_mut();
    assert_eq!(unsafe { jc_boundary_spec_new(f, f, 1, 1.0, &mut same) }, JcStatus::Ok);
    assert_eq!(unsafe { jc_delta_constant(same, 1.0, &mut delta) }, JcStatus::ZeroGap);

    let bump = CString::new(r#"{"n": 1, "terms": [{"index": [0], "coeff": 1.0}]}"#).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { jc_field_from_json(bump.as_ptr(), &mut g) }, JcStatus::Ok);
    assert_eq!(unsafe { jc_boundary_spec_new(f, g, 1, 1.0, &mut ptr::null_mut()) }, JcStatus::IncompatiblePair);
    unsafe {
        jc_boundary_spec_free(s);
        jc_boundary_spec_free(same);
        jc_field_free(f);
        jc_field_free(g);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(jc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
