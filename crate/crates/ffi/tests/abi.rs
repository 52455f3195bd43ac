use std::ffi::{CStr, CString};
use std::ptr;

use localdep_ffi::*;

const MEAN: [f64; 3] = [0.0, 0.0, 0.0];
const COV: [f64; 9] = [1.0, 0.5, 0.3, 0.5, 1.0, 0.4, 0.3, 0.4, 1.0];

fn last_error() -> String {
    unsafe { CStr::from_ptr(ld_last_error()) }
        .to_string_lossy()
        .into_owned()
}

struct Handle(*mut LdModel);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { ld_model_free(self.0) }
    }
}

fn model() -> Handle {
    let mut m = ptr::null_mut();
    let status = unsafe { ld_model_new(3, MEAN.as_ptr(), COV.as_ptr(), &mut m) };
    assert_eq!(status, LdStatus::Ok);
    assert!(!m.is_null());
    Handle(m)
}

#[test]
fn eval_matches_known_value() {
    let m = model();
    let p = [0.0, 0.0, 1.0];
    let mut h = f64::NAN;
    let mut phi = [f64::NAN; 3];
    let status = unsafe { ld_eval(m.0, p.as_ptr(), 3, &mut h, phi.as_mut_ptr()) };
    assert_eq!(status, LdStatus::Ok);
    assert!((h - -0.1245).abs() < 5e-5, "{h}");
    assert!(phi.iter().all(|v| v.is_finite()));
    assert_eq!(last_error(), "");
}

#[test]
fn pdf_conditional_mean_and_moment() {
    let m = model();
    let mut out = 0.0;
    unsafe {
        assert_eq!(ld_pdf(m.0, [0.0; 3].as_ptr(), 3, &mut out), LdStatus::Ok);
        assert!((out - 0.0806).abs() < 5e-5);
        assert_eq!(
            ld_conditional_mean(m.0, 0, [0.0; 2].as_ptr(), 2, &mut out),
            LdStatus::Ok
        );
        assert_eq!(out, 0.0);
        let idx = [0usize, 1];
        assert_eq!(
            ld_mixed_moment(m.0, idx.as_ptr(), 2, &mut out),
            LdStatus::Ok
        );
        assert!((out - 0.5).abs() < 1e-15);
        assert_eq!(ld_model_dim(m.0), 3);
    }
}

#[test]
fn json_constructor() {
    let json = CString::new(r#"{"mean":[1,2],"cov":[[2,0.5],[0.5,1]]}"#).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { ld_model_from_json(json.as_ptr(), &mut m) },
        LdStatus::Ok
    );
    let m = Handle(m);
    assert_eq!(unsafe { ld_model_dim(m.0) }, 2);

    let bad = CString::new(r#"{"mean":[0],"cov":[[1]],"extra":1}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { ld_model_from_json(bad.as_ptr(), &mut out) },
        LdStatus::InvalidInput
    );
    assert!(out.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn invalid_covariance_is_reported() {
    let cov = [1.0, 2.0, 2.0, 1.0];
    let mut m = ptr::null_mut();
    let status = unsafe { ld_model_new(2, [0.0; 2].as_ptr(), cov.as_ptr(), &mut m) };
    assert_eq!(status, LdStatus::InvalidInput);
    assert!(m.is_null());
    assert!(
        last_error().contains("positive definite"),
        "{}",
        last_error()
    );
}

#[test]
fn null_pointers_are_rejected() {
    let m = model();
    let mut h = 0.0;
    unsafe {
        assert_eq!(
            ld_eval(ptr::null(), [0.0; 3].as_ptr(), 3, &mut h, ptr::null_mut()),
            LdStatus::NullPointer
        );
        assert_eq!(
            ld_eval(m.0, ptr::null(), 3, &mut h, ptr::null_mut()),
            LdStatus::NullPointer
        );
        assert_eq!(
            ld_eval(m.0, [0.0; 3].as_ptr(), 3, ptr::null_mut(), ptr::null_mut()),
            LdStatus::NullPointer
        );
        assert_eq!(
            ld_model_new(3, MEAN.as_ptr(), COV.as_ptr(), ptr::null_mut()),
            LdStatus::NullPointer
        );
        assert_eq!(ld_model_dim(ptr::null()), 0);
        ld_model_free(ptr::null_mut());
    }
}

#[test]
fn dimension_mismatch() {
    let m = model();
    let mut h = 0.0;
    let status = unsafe { ld_eval(m.0, [0.0; 2].as_ptr(), 2, &mut h, ptr::null_mut()) };
    assert_eq!(status, LdStatus::InvalidInput);
}

#[test]
fn sweep_fills_row_major_buffer() {
    let m = model();
    let ranges = [
        LdRange {
            axis: 0,
            lo: -1.0,
            hi: 1.0,
            count: 3,
        },
        LdRange {
            axis: 2,
            lo: -1.0,
            hi: 1.0,
            count: 5,
        },
    ];
    let mut out = vec![f64::NAN; 15];
    let status = unsafe {
        ld_sweep(
            m.0,
            [1usize].as_ptr(),
            [0.0].as_ptr(),
            1,
            ranges.as_ptr(),
            2,
            out.as_mut_ptr(),
            15,
        )
    };
    assert_eq!(status, LdStatus::Ok);
    // Node (x, z) = (0, 1) is row 1, column 4.
    let mut h = 0.0;
    unsafe { ld_eval(m.0, [0.0, 0.0, 1.0].as_ptr(), 3, &mut h, ptr::null_mut()) };
    assert_eq!(out[5 + 4], h);
    assert!(out.iter().all(|v| v.is_finite()));

    let status = unsafe {
        ld_sweep(
            m.0,
            [1usize].as_ptr(),
            [0.0].as_ptr(),
            1,
            ranges.as_ptr(),
            2,
            out.as_mut_ptr(),
            14,
        )
    };
    assert_eq!(status, LdStatus::BufferTooSmall);
}

#[test]
fn reference_point_solver() {
    let mean = [1.0, -2.0, 0.5];
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { ld_model_new(3, mean.as_ptr(), COV.as_ptr(), &mut m) },
        LdStatus::Ok
    );
    let m = Handle(m);
    let mut p = [f64::NAN; 3];
    let mut h = f64::NAN;
    let status = unsafe {
        ld_solve_reference_point(
            m.0,
            [0.0; 3].as_ptr(),
            3,
            100,
            1e-10,
            p.as_mut_ptr(),
            &mut h,
        )
    };
    assert_eq!(status, LdStatus::Ok);
    for (a, b) in p.iter().zip(mean) {
        assert!((a - b).abs() < 1e-8);
    }
    assert!(h.abs() < 1e-9);

    let status = unsafe {
        ld_solve_reference_point(
            m.0,
            [5.0; 3].as_ptr(),
            3,
            0,
            1e-10,
            ptr::null_mut(),
            ptr::null_mut(),
        )
    };
    assert_eq!(status, LdStatus::NoConvergence);
}

#[test]
fn header_declares_the_api() {
    let header = include_str!("../include/localdep.h");
    for name in [
        "typedef struct LdModel LdModel;",
        "LD_STATUS_OK = 0",
        "LD_STATUS_NO_CONVERGENCE = 4",
        "ld_model_new(",
        "ld_model_from_json(",
        "ld_model_free(",
        "ld_eval(",
        "ld_sweep(",
        "ld_solve_reference_point(",
        "ld_last_error(void)",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}
