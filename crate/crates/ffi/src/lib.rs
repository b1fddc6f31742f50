//! C ABI over the accelscale library.
//!
//! Every function returns an [`AsStatus`]; results go through out-pointers. Handles
//! are heap objects owned by the caller and released with the matching `_free`.
//! On failure the message is kept per thread and read with [`as_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use accelscale::arch_ir::{
    apply_compound_scaling, builtin_model, count_total_depth, model_from_json, model_to_json,
    validate_model_with_batch, ModelSpec, RoundingPolicy, ScalingCoeffs,
};
use accelscale::cost_model::{flops_per_image, model_cost, HardwareProfile, Regime};
use accelscale::lacs::{fit_phi, reward, LacsError, RewardConfig};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidInput = 4,
    ComputeError = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque hardware profile.
pub struct AsProfile(HardwareProfile);

/// Opaque model description.
pub struct AsModel(ModelSpec);

/// Whole-model cost under one profile.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AsCostSummary {
    /// Multiply-adds for the batch.
    pub flops: f64,
    pub flops_per_image: f64,
    pub bytes: f64,
    /// Ops per byte.
    pub intensity: f64,
    pub latency_s: f64,
    pub achieved_efficiency: f64,
    /// Share of latency spent in memory-bound stages.
    pub memory_bound_share: f64,
    pub depth: u32,
    pub resolution: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: AsStatus, msg: impl Into<String>) -> AsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn guard(f: impl FnOnce() -> AsStatus) -> AsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(AsStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, AsStatus> {
    if p.is_null() {
        return Err(fail(AsStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(AsStatus::InvalidUtf8, e.to_string()))
}

macro_rules! deref {
    ($p:expr) => {
        match $p.as_ref() {
            Some(v) => v,
            None => return fail(AsStatus::NullPointer, concat!("null ", stringify!($p))),
        }
    };
}

macro_rules! out {
    ($p:expr, $v:expr) => {{
        if $p.is_null() {
            return fail(AsStatus::NullPointer, concat!("null ", stringify!($p)));
        }
        *$p = $v;
        AsStatus::Ok
    }};
}

macro_rules! try_str {
    ($p:expr) => {
        match read_str($p) {
            Ok(s) => s,
            Err(st) => return st,
        }
    };
}

fn lacs_status(e: &LacsError) -> AsStatus {
    match e {
        LacsError::Unreachable { .. }
        | LacsError::NonMonotone { .. }
        | LacsError::TargetBelowBase { .. }
        | LacsError::NoFeasibleTriplet(_)
        | LacsError::FamilyNotMonotone(_) => AsStatus::ComputeError,
        _ => AsStatus::InvalidInput,
    }
}

/// Copies the last error message of this thread into `buf` (NUL terminated) and
/// stores the full length, excluding the terminator, in `len`.
///
/// # Safety
/// `buf` must point to `cap` writable bytes or be null with `cap == 0`.
#[no_mangle]
pub unsafe extern "C" fn as_last_error(buf: *mut c_char, cap: usize, len: *mut usize) -> AsStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    copy_out(&msg, buf, cap, len)
}

unsafe fn copy_out(s: &str, buf: *mut c_char, cap: usize, len: *mut usize) -> AsStatus {
    if !len.is_null() {
        *len = s.len();
    }
    if cap < s.len() + 1 {
        return AsStatus::BufferTooSmall;
    }
    if buf.is_null() {
        return AsStatus::NullPointer;
    }
    std::ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    *buf.add(s.len()) = 0;
    AsStatus::Ok
}

/// # Safety
/// `name` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn as_profile_builtin(name: *const c_char, out: *mut *mut AsProfile) -> AsStatus {
    guard(|| {
        let name = try_str!(name);
        match HardwareProfile::builtin(name) {
            Some(p) => out!(out, Box::into_raw(Box::new(AsProfile(p)))),
            None => fail(AsStatus::InvalidInput, format!("unknown profile '{name}'")),
        }
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn as_profile_from_json(json: *const c_char, out: *mut *mut AsProfile) -> AsStatus {
    guard(|| {
        let text = try_str!(json);
        match HardwareProfile::from_json(text) {
            Ok(p) => out!(out, Box::into_raw(Box::new(AsProfile(p)))),
            Err(e) => fail(AsStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `p` must come from an `as_profile_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn as_profile_free(p: *mut AsProfile) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn as_profile_ridge_point(p: *const AsProfile, out: *mut f64) -> AsStatus {
    guard(|| {
        let p = deref!(p);
        out!(out, p.0.ridge_point())
    })
}

/// Looks up a reference network: `b0`, `x-b0`, `x-b0-gpu`, `plus-space-to-depth`, ...
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn as_model_builtin(name: *const c_char, out: *mut *mut AsModel) -> AsStatus {
    guard(|| {
        let name = try_str!(name);
        match builtin_model(name) {
            Some(m) => out!(out, Box::into_raw(Box::new(AsModel(m)))),
            None => fail(AsStatus::InvalidInput, format!("unknown model '{name}'")),
        }
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn as_model_from_json(json: *const c_char, out: *mut *mut AsModel) -> AsStatus {
    guard(|| {
        let text = try_str!(json);
        match model_from_json(text) {
            Ok(m) => out!(out, Box::into_raw(Box::new(AsModel(m)))),
            Err(e) => fail(AsStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `m` must come from an `as_model_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn as_model_free(m: *mut AsModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Writes the model JSON into `buf`; `len` receives the length without terminator.
///
/// # Safety
/// `buf` must point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn as_model_to_json(
    m: *const AsModel,
    buf: *mut c_char,
    cap: usize,
    len: *mut usize,
) -> AsStatus {
    guard(|| {
        let m = deref!(m);
        copy_out(&model_to_json(&m.0), buf, cap, len)
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn as_model_flops_per_image(m: *const AsModel, out: *mut f64) -> AsStatus {
    guard(|| {
        let m = deref!(m);
        match flops_per_image(&m.0) {
            Ok(f) => out!(out, f),
            Err(e) => fail(AsStatus::InvalidInput, e.to_string()),
        }
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn as_model_cost(
    m: *const AsModel,
    p: *const AsProfile,
    batch: u32,
    out: *mut AsCostSummary,
) -> AsStatus {
    guard(|| {
        let (m, p) = (deref!(m), deref!(p));
        let v = match validate_model_with_batch(&m.0, batch) {
            Ok(v) => v,
            Err(e) => return fail(AsStatus::InvalidInput, e.to_string()),
        };
        let c = model_cost(&v, &p.0);
        let mem: f64 = c
            .stages
            .iter()
            .filter(|s| s.cost.regime == Regime::MemoryBound)
            .map(|s| s.cost.latency)
            .sum();
        out!(
            out,
            AsCostSummary {
                flops: c.total_flops,
                flops_per_image: c.flops_per_image(),
                bytes: c.total_bytes,
                intensity: c.aggregate_intensity,
                latency_s: c.total_latency,
                achieved_efficiency: c.achieved_efficiency,
                memory_bound_share: if c.total_latency > 0.0 { mem / c.total_latency } else { 0.0 },
                depth: count_total_depth(&m.0),
                resolution: m.0.input_resolution,
            }
        )
    })
}

/// Compound-scaled copy of `m` with default rounding.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn as_model_scale(
    m: *const AsModel,
    alpha: f64,
    beta: f64,
    gamma: f64,
    phi: f64,
    out: *mut *mut AsModel,
) -> AsStatus {
    guard(|| {
        let m = deref!(m);
        let scaled = ScalingCoeffs::new(alpha, beta, gamma)
            .and_then(|c| apply_compound_scaling(&m.0, &c, phi, &RoundingPolicy::default()));
        match scaled {
            Ok(s) => out!(out, Box::into_raw(Box::new(AsModel(s)))),
            Err(e) => fail(AsStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Phi whose scaled model is closest to `target_latency_s` on `p`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn as_fit_phi(
    m: *const AsModel,
    p: *const AsProfile,
    alpha: f64,
    beta: f64,
    gamma: f64,
    target_latency_s: f64,
    out: *mut f64,
) -> AsStatus {
    guard(|| {
        let (m, p) = (deref!(m), deref!(p));
        let c = match ScalingCoeffs::new(alpha, beta, gamma) {
            Ok(c) => c,
            Err(e) => return fail(AsStatus::InvalidInput, e.to_string()),
        };
        match fit_phi(&m.0, &c, target_latency_s, &p.0) {
            Ok(phi) => out!(out, phi),
            Err(e) => fail(lacs_status(&e), e.to_string()),
        }
    })
}

/// `accuracy * (latency / target)^w`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn as_reward(
    accuracy: f64,
    latency_s: f64,
    target_latency_s: f64,
    w: f64,
    out: *mut f64,
) -> AsStatus {
    guard(|| match RewardConfig::new(w, target_latency_s) {
        Ok(cfg) if latency_s > 0.0 && latency_s.is_finite() => out!(out, reward(accuracy, latency_s, &cfg)),
        Ok(_) => fail(AsStatus::InvalidInput, format!("latency must be > 0, got {latency_s}")),
        Err(e) => fail(AsStatus::InvalidInput, e.to_string()),
    })
}
