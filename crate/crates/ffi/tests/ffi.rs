use std::ffi::{c_char, CString};
use std::ptr;

use accelscale_ffi::*;

fn last_error() -> String {
    let mut len = 0usize;
    unsafe {
        assert_eq!(as_last_error(ptr::null_mut(), 0, &mut len), AsStatus::BufferTooSmall);
        let mut buf = vec![0u8; len + 1];
        assert_eq!(as_last_error(buf.as_mut_ptr() as *mut c_char, buf.len(), &mut len), AsStatus::Ok);
        buf.truncate(len);
        String::from_utf8(buf).unwrap()
    }
}

fn profile(name: &str) -> *mut AsProfile {
    let n = CString::new(name).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { as_profile_builtin(n.as_ptr(), &mut p) }, AsStatus::Ok);
    p
}

fn model(name: &str) -> *mut AsModel {
    let n = CString::new(name).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { as_model_builtin(n.as_ptr(), &mut m) }, AsStatus::Ok);
    m
}

#[test]
fn cost_of_builtin_model() {
    let p = profile("tpu_v3_like");
    let m = model("x-b0");
    let mut s = AsCostSummary::default();
    unsafe {
        assert_eq!(as_model_cost(m, p, 1, &mut s), AsStatus::Ok);
        let mut f = 0.0;
        assert_eq!(as_model_flops_per_image(m, &mut f), AsStatus::Ok);
        assert_eq!(f, s.flops_per_image);
        assert!((f / 0.91e9 - 1.0).abs() < 0.05, "{f}");
        assert_eq!(s.depth, 16);
        assert_eq!(s.resolution, 224);
        assert!(s.latency_s > 0.0 && s.intensity > 0.0);
        as_model_free(m);
        as_profile_free(p);
    }
}

#[test]
fn scaled_model_round_trips_through_json() {
    let m = model("x-b0-gpu");
    unsafe {
        let mut big = ptr::null_mut();
        assert_eq!(as_model_scale(m, 1.28, 1.17, 1.07, 2.0, &mut big), AsStatus::Ok);
        let mut len = 0usize;
        assert_eq!(as_model_to_json(big, ptr::null_mut(), 0, &mut len), AsStatus::BufferTooSmall);
        let mut buf = vec![0u8; len + 1];
        assert_eq!(as_model_to_json(big, buf.as_mut_ptr() as *mut c_char, buf.len(), &mut len), AsStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(as_model_from_json(buf.as_ptr() as *const c_char, &mut back), AsStatus::Ok);
        let (mut a, mut b) = (0.0, 0.0);
        as_model_flops_per_image(big, &mut a);
        as_model_flops_per_image(back, &mut b);
        assert_eq!(a, b);
        for h in [m, big, back] {
            as_model_free(h);
        }
    }
}

#[test]
fn fit_phi_hits_twice_the_base_latency() {
    let p = profile("gpu_v100_like");
    let m = model("x-b0-gpu");
    unsafe {
        let mut base = AsCostSummary::default();
        as_model_cost(m, p, 128, &mut base);
        let mut phi = 0.0;
        assert_eq!(as_fit_phi(m, p, 1.28, 1.17, 1.07, 2.0 * base.latency_s, &mut phi), AsStatus::Ok);
        assert!(phi > 0.0 && phi < 4.0, "{phi}");
        assert_eq!(
            as_fit_phi(m, p, 1.28, 1.17, 1.07, 0.5 * base.latency_s, &mut phi),
            AsStatus::ComputeError
        );
        assert!(!last_error().is_empty());
        as_model_free(m);
        as_profile_free(p);
    }
}

#[test]
fn reward_and_ridge() {
    let mut r = 0.0;
    unsafe {
        assert_eq!(as_reward(0.77, 2.0, 1.0, -0.09, &mut r), AsStatus::Ok);
        assert!((r - 0.72339).abs() < 1e-4);
        assert_eq!(as_reward(0.8, 1.0, 1.0, -0.09, &mut r), AsStatus::Ok);
        assert_eq!(r, 0.8);
        assert_eq!(as_reward(0.8, 1.0, 1.0, 0.5, &mut r), AsStatus::InvalidInput);
    }
    let (tpu, cpu) = (profile("tpu_v3_like"), profile("cpu_like"));
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        as_profile_ridge_point(tpu, &mut a);
        as_profile_ridge_point(cpu, &mut b);
        as_profile_free(tpu);
        as_profile_free(cpu);
    }
    assert!(a > b);
}

#[test]
fn errors_are_reported() {
    let mut p = ptr::null_mut();
    let bad = CString::new("{\"name\": 3}").unwrap();
    unsafe {
        assert_eq!(as_profile_from_json(bad.as_ptr(), &mut p), AsStatus::ParseError);
        assert!(last_error().contains("profile"), "{}", last_error());
        assert_eq!(as_profile_builtin(ptr::null(), &mut p), AsStatus::NullPointer);
        let unknown = CString::new("abacus").unwrap();
        assert_eq!(as_model_builtin(unknown.as_ptr(), ptr::null_mut()), AsStatus::InvalidInput);
        let m = model("b0");
        assert_eq!(as_model_cost(m, ptr::null(), 1, ptr::null_mut()), AsStatus::NullPointer);
        let mut out = ptr::null_mut();
        assert_eq!(as_model_scale(m, 0.5, 1.0, 1.0, 1.0, &mut out), AsStatus::InvalidInput);
        as_model_free(m);
        as_model_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_export() {
    let h = include_str!("../include/accelscale.h");
    let src = include_str!("../src/lib.rs");
    let mut n = 0;
    for line in src.lines() {
        if let Some(rest) = line.strip_prefix("pub unsafe extern \"C\" fn ") {
            let name = &rest[..rest.find('(').unwrap()];
            assert!(h.contains(&format!("{name}(")), "{name} missing from header");
            n += 1;
        }
    }
    assert!(n >= 12, "{n}");
    assert!(h.contains("typedef struct AsModel AsModel;"));
}
