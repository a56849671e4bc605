use qostbc_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn build(name: &str) -> *mut QostbcCode {
    let n = CString::new(name).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { qostbc_code_build(n.as_ptr(), &mut h) }, QostbcStatus::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn build_dims_and_divprod() {
    let h = build("Q4_LT");
    let (mut t, mut nt, mut k) = (0, 0, 0);
    unsafe {
        assert_eq!(qostbc_code_dims(h, &mut t, &mut nt, &mut k), QostbcStatus::Ok);
        assert_eq!((t, nt, k), (4, 4, 4));
        let mut g = 0;
        assert_eq!(qostbc_code_group_size(h, &mut g), QostbcStatus::Ok);
        assert_eq!(g, 2);
        let (mut z, mut full) = (0.0, false);
        assert_eq!(qostbc_diversity_product(h, 4, &mut z, &mut full), QostbcStatus::Ok);
        assert!((z - 0.3344).abs() < 1e-3 && full);
        assert_eq!(qostbc_diversity_product(h, 8, &mut z, &mut full), QostbcStatus::UnsupportedModulation);
        assert!(!qostbc_last_error().is_null());
        qostbc_code_free(h);
    }
}

#[test]
fn unknown_code_sets_error() {
    let n = CString::new("Q5").unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(qostbc_code_build(n.as_ptr(), &mut h), QostbcStatus::UnknownCode);
        assert!(h.is_null());
        let msg = CStr::from_ptr(qostbc_last_error()).to_str().unwrap();
        assert!(msg.contains("Q5"), "{msg}");
        assert_eq!(qostbc_code_build(ptr::null(), &mut h), QostbcStatus::NullPointer);
    }
}

#[test]
fn json_round_trip() {
    let h = build("Q8_CR");
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(qostbc_code_to_json(h, &mut s), QostbcStatus::Ok);
        let mut h2 = ptr::null_mut();
        assert_eq!(qostbc_code_from_json(s, 1e-12, &mut h2), QostbcStatus::Ok);
        let mut g = 0;
        qostbc_code_group_size(h2, &mut g);
        assert_eq!(g, 4);
        qostbc_string_free(s);
        qostbc_code_free(h2);
        qostbc_code_free(h);
    }
}

#[test]
fn encode_alamouti_like_entries() {
    let h = build("Q4");
    let s = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let mut re = [0.0; 16];
    let mut im = [0.0; 16];
    unsafe {
        assert_eq!(
            qostbc_code_encode(h, s.as_ptr(), s.len(), re.as_mut_ptr(), im.as_mut_ptr(), 16),
            QostbcStatus::Ok
        );
        // x1 alone: scaled identity
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((re[4 * i + j] - want).abs() < 1e-12 && im[4 * i + j].abs() < 1e-12);
            }
        }
        assert_eq!(
            qostbc_code_encode(h, s.as_ptr(), 7, re.as_mut_ptr(), im.as_mut_ptr(), 16),
            QostbcStatus::Dimension
        );
        assert_eq!(
            qostbc_code_encode(h, s.as_ptr(), 8, re.as_mut_ptr(), im.as_mut_ptr(), 15),
            QostbcStatus::Dimension
        );
        qostbc_code_free(h);
        qostbc_code_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qostbc.h")).unwrap();
    for f in [
        "qostbc_code_build",
        "qostbc_code_free",
        "qostbc_code_dims",
        "qostbc_code_to_json",
        "qostbc_code_from_json",
        "qostbc_diversity_product",
        "qostbc_code_encode",
        "qostbc_string_free",
        "qostbc_last_error",
        "typedef struct QostbcCode QostbcCode",
    ] {
        assert!(header.contains(f), "missing {f}");
    }
}
