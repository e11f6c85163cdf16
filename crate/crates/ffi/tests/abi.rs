use std::ffi::{CStr, CString};
use std::ptr;

use hsdisp_ffi::*;

fn last_error() -> String {
    let p = hs_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn homogenize_through_handles() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(hs_profile_new(1.0, 2.0, 0.5, 2, &mut p), HsStatus::Ok);
        assert!(hs_last_error_message().is_null());
        let mut fc = HsFirstCorrector::default();
        assert_eq!(hs_homogenize(p, &mut fc), HsStatus::Ok);
        assert!((fc.m - 10.0 / 7.0).abs() < 1e-12);
        assert!((fc.b1t - 8.0 / 7.0).abs() < 1e-12);
        hs_profile_free(p);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(
            hs_profile_new(1.0, 2.0, 1.0, 2, &mut p),
            HsStatus::Degenerate
        );
        assert!(p.is_null());
        assert!(last_error().contains("theta"));

        assert_eq!(
            hs_profile_new(2.0, 1.0, 0.5, 2, &mut p),
            HsStatus::InvalidInput
        );
        assert_eq!(
            hs_profile_new(1.0, 2.0, 0.5, 2, ptr::null_mut()),
            HsStatus::NullPointer
        );
        assert_eq!(
            hs_homogenize(ptr::null(), ptr::null_mut()),
            HsStatus::NullPointer
        );

        let missing = CString::new("/nonexistent/packing.json").unwrap();
        let mut k = ptr::null_mut();
        assert_eq!(hs_packing_load(missing.as_ptr(), &mut k), HsStatus::Io);
        hs_profile_free(ptr::null_mut());
        hs_packing_free(ptr::null_mut());
    }
}

#[test]
fn packing_dispersion_and_file_round_trip() {
    unsafe {
        let mut k = ptr::null_mut();
        assert_eq!(hs_packing_apollonian(2, 6, &mut k), HsStatus::Ok);
        assert_eq!(hs_packing_len(k), 6);
        let mut r = 0.0;
        assert_eq!(hs_packing_radius(k, 0, &mut r), HsStatus::Ok);
        assert_eq!(r, 0.5);
        assert_eq!(hs_packing_radius(k, 6, &mut r), HsStatus::OutOfRange);

        let mut p = ptr::null_mut();
        assert_eq!(hs_profile_new(1.0, 2.0, 0.5, 2, &mut p), HsStatus::Ok);
        let (mut d, mut j) = (0.0, 0.0);
        assert_eq!(hs_dispersion(p, k, &mut d), HsStatus::Ok);
        assert_eq!(hs_dispersion_density(p, &mut j), HsStatus::Ok);
        assert!(d < 0.0 && j > 0.0);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("k.json").to_str().unwrap()).unwrap();
        assert_eq!(hs_packing_save(k, path.as_ptr()), HsStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(hs_packing_load(path.as_ptr(), &mut back), HsStatus::Ok);
        let mut d2 = 0.0;
        assert_eq!(hs_dispersion(p, back, &mut d2), HsStatus::Ok);
        assert_eq!(d, d2);

        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(hs_functional_bracket(back, &mut lo, &mut hi), HsStatus::Ok);
        assert!(lo <= hi && hi < 0.0);

        let mut p3 = ptr::null_mut();
        assert_eq!(hs_profile_new(1.0, 2.0, 0.5, 3, &mut p3), HsStatus::Ok);
        assert_eq!(hs_dispersion(p3, k, &mut d), HsStatus::InvalidInput);

        hs_packing_free(back);
        hs_packing_free(k);
        hs_profile_free(p);
        hs_profile_free(p3);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(hs_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
