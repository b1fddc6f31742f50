//! Solving for the phi that hits a latency target.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::LacsError;
use crate::arch_ir::{
    apply_compound_scaling, validate_model_with_batch, ModelSpec, RelaxedModel, RoundingPolicy,
    ScalingCoeffs, DEFAULT_BATCH,
};
use crate::cost_model::{model_cost, relaxed_cost, HardwareProfile};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub rounding: RoundingPolicy,
    pub batch: u32,
    /// Half-width of the rounded-model scan around the continuous solution.
    pub repair_window: f64,
    pub repair_step: f64,
    /// Phi beyond which the target is declared unreachable.
    pub max_phi: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            rounding: RoundingPolicy::default(),
            batch: DEFAULT_BATCH,
            repair_window: 0.5,
            repair_step: 0.01,
            max_phi: 256.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiFit {
    /// Phi whose rounded model is closest to the target.
    pub phi: f64,
    /// Solution of the unrounded problem.
    pub relaxed_phi: f64,
    /// Latency of the rounded model at `phi`.
    pub latency: f64,
}

pub fn relaxed_latency(
    base: &ModelSpec,
    coeffs: &ScalingCoeffs,
    phi: f64,
    profile: &HardwareProfile,
    batch: u32,
) -> Result<f64, LacsError> {
    let m = RelaxedModel::scaled(base, coeffs, phi)?;
    Ok(relaxed_cost(&m, profile, batch).total_latency)
}

pub fn rounded_model(
    base: &ModelSpec,
    coeffs: &ScalingCoeffs,
    phi: f64,
    rounding: &RoundingPolicy,
) -> Result<ModelSpec, LacsError> {
    Ok(apply_compound_scaling(base, coeffs, phi, rounding)?)
}

pub fn spec_latency(spec: &ModelSpec, profile: &HardwareProfile, batch: u32) -> Result<f64, LacsError> {
    let v = validate_model_with_batch(spec, batch)?;
    Ok(model_cost(&v, profile).total_latency)
}

/// Continuous solution of `latency(scale(base, coeffs, phi)) = T` by bisection.
pub fn fit_phi_relaxed(
    base: &ModelSpec,
    coeffs: &ScalingCoeffs,
    target_latency: f64,
    profile: &HardwareProfile,
    opts: &FitOptions,
) -> Result<f64, LacsError> {
    coeffs.check()?;
    if coeffs.is_identity() {
        return Err(LacsError::Unreachable {
            target: target_latency,
            reason: "coefficients (1, 1, 1) never grow the model".into(),
        });
    }
    let lat = |phi: f64| relaxed_latency(base, coeffs, phi, profile, opts.batch);
    if target_latency <= lat(0.0)? {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while lat(hi)? < target_latency {
        hi *= 2.0;
        if hi > opts.max_phi {
            return Err(LacsError::Unreachable {
                target: target_latency,
                reason: format!("latency stays below target up to phi = {}", opts.max_phi),
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if lat(mid)? < target_latency {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn rounding_key(spec: &ModelSpec) -> Vec<u32> {
    let mut k = vec![spec.input_resolution];
    for s in &spec.stages {
        k.push(s.repeats);
        k.push(s.op.out_channels(0));
        if let crate::arch_ir::OpKind::MbConv(p) | crate::arch_ir::OpKind::FusedMbConv(p) = s.op {
            k.push(p.expansion_base.unwrap_or(0));
        }
    }
    k
}

/// Phi whose rounded model best matches `target_latency`: continuous bisection, then a
/// scan of rounded models around that solution.
pub fn fit_phi_with(
    base: &ModelSpec,
    coeffs: &ScalingCoeffs,
    target_latency: f64,
    profile: &HardwareProfile,
    opts: &FitOptions,
) -> Result<PhiFit, LacsError> {
    if !(target_latency > 0.0 && target_latency.is_finite()) {
        return Err(LacsError::InvalidConfig(format!(
            "target latency must be > 0, got {target_latency}"
        )));
    }
    let base_latency = spec_latency(base, profile, opts.batch)?;
    if target_latency < base_latency {
        return Err(LacsError::TargetBelowBase {
            target: target_latency,
            base: base_latency,
        });
    }
    let relaxed_phi = fit_phi_relaxed(base, coeffs, target_latency, profile, opts)?;

    let start = (relaxed_phi - opts.repair_window).max(0.0);
    let steps = ((relaxed_phi + opts.repair_window - start) / opts.repair_step).floor() as usize;
    let mut candidates: Vec<f64> = (0..=steps).map(|k| start + k as f64 * opts.repair_step).collect();
    candidates.push(relaxed_phi);
    candidates.sort_by(f64::total_cmp);

    let mut cache: HashMap<Vec<u32>, f64> = HashMap::new();
    let mut scanned = Vec::with_capacity(candidates.len());
    for phi in candidates {
        let m = rounded_model(base, coeffs, phi, &opts.rounding)?;
        let key = rounding_key(&m);
        let lat = match cache.get(&key) {
            Some(l) => *l,
            None => {
                let l = spec_latency(&m, profile, opts.batch)?;
                cache.insert(key, l);
                l
            }
        };
        scanned.push((phi, lat));
    }
    if let Some(w) = scanned.windows(2).find(|w| w[1].1 < w[0].1 * (1.0 - 1e-9)) {
        return Err(LacsError::NonMonotone {
            phi: w[1].0,
            latency: w[1].1,
            previous: w[0].1,
        });
    }
    let (phi, latency) = scanned
        .into_iter()
        .min_by(|a, b| {
            let ea = (a.1 - target_latency).abs();
            let eb = (b.1 - target_latency).abs();
            ea.total_cmp(&eb)
                .then((a.0 - relaxed_phi).abs().total_cmp(&(b.0 - relaxed_phi).abs()))
                .then(a.0.total_cmp(&b.0))
        })
        .expect("scan is never empty");
    Ok(PhiFit {
        phi,
        relaxed_phi,
        latency,
    })
}

/// Phi at which the scaled model's latency is closest to `target_latency`.
pub fn fit_phi(
    base: &ModelSpec,
    coeffs: &ScalingCoeffs,
    target_latency: f64,
    profile: &HardwareProfile,
) -> Result<f64, LacsError> {
    Ok(fit_phi_with(base, coeffs, target_latency, profile, &FitOptions::default())?.phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch_ir::{
        build_efficientnet_x_b0, count_total_depth, ActivationKind, OpKind, Stage, Target,
    };

    /// Negligible stem followed by one heavy dense conv stage.
    fn depth_bound_toy() -> ModelSpec {
        ModelSpec::new(
            "toy",
            32,
            vec![
                Stage::new(OpKind::Stem { kernel: 1, stride: 1, out_c: 8 }, 1, ActivationKind::Relu),
                Stage::new(OpKind::Conv { kernel: 3, stride: 1, out_c: 512 }, 1, ActivationKind::Relu),
                Stage::new(OpKind::Conv { kernel: 3, stride: 1, out_c: 512 }, 4, ActivationKind::Relu)
                    .scalable(),
            ],
        )
    }

    #[test]
    fn doubling_depth_doubles_latency() {
        let base = depth_bound_toy();
        let p = HardwareProfile::tpu_v3_like();
        // Latency of the scalable stage alone, doubled, plus the fixed part once.
        let l0 = spec_latency(&base, &p, 128).unwrap();
        let fixed = spec_latency(&ModelSpec::new("f", 32, base.stages[..2].to_vec()), &p, 128).unwrap();
        let t = 2.0 * l0 - fixed;
        let c = ScalingCoeffs::new(2.0, 1.0, 1.0).unwrap();
        let fit = fit_phi_with(&base, &c, t, &p, &FitOptions::default()).unwrap();
        assert!((fit.relaxed_phi - 1.0).abs() < 1e-9, "{fit:?}");
        assert!((fit.latency / t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identity_coeffs_are_unreachable() {
        let base = build_efficientnet_x_b0(Target::Tpu);
        let p = HardwareProfile::tpu_v3_like();
        let l0 = spec_latency(&base, &p, 128).unwrap();
        let err = fit_phi(&base, &ScalingCoeffs::identity(), 2.0 * l0, &p).unwrap_err();
        assert!(matches!(err, LacsError::Unreachable { .. }));
    }

    #[test]
    fn target_below_base_is_rejected() {
        let base = build_efficientnet_x_b0(Target::Tpu);
        let p = HardwareProfile::tpu_v3_like();
        let l0 = spec_latency(&base, &p, 128).unwrap();
        let c = ScalingCoeffs::new(1.2, 1.1, 1.15).unwrap();
        assert!(matches!(fit_phi(&base, &c, 0.5 * l0, &p), Err(LacsError::TargetBelowBase { .. })));
        assert_eq!(fit_phi(&base, &c, l0, &p).unwrap(), 0.0);
    }

    #[test]
    fn relaxed_round_trip() {
        let base = build_efficientnet_x_b0(Target::Gpu);
        let p = HardwareProfile::gpu_v100_like();
        let c = ScalingCoeffs::new(1.28, 1.17, 1.07).unwrap();
        let l0 = relaxed_latency(&base, &c, 0.0, &p, 128).unwrap();
        for k in [1.3, 4.0, 25.0] {
            let phi = fit_phi_relaxed(&base, &c, k * l0, &p, &FitOptions::default()).unwrap();
            let l = relaxed_latency(&base, &c, phi, &p, 128).unwrap();
            assert!((l / (k * l0) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn b7_dimensions_invert_to_phi_near_seven() {
        let base = build_efficientnet_x_b0(Target::Gpu);
        let p = HardwareProfile::gpu_v100_like();
        let c = ScalingCoeffs::new(1.28, 1.17, 1.07).unwrap();
        // Published B7 size: depth 79 from the 14 scalable layers, resolution 368.
        let d = 1.28f64.powf(7.0);
        let mut m = apply_compound_scaling(&base, &c, 7.0, &RoundingPolicy::default()).unwrap();
        m.input_resolution = 368;
        assert!((count_total_depth(&m) as i64 - 79).abs() <= 2, "{}", count_total_depth(&m));
        let t = spec_latency(&m, &p, 128).unwrap();
        let phi = fit_phi(&base, &c, t, &p).unwrap();
        assert!((phi - 7.0).abs() <= 0.5, "{phi} (d = {d})");
        let fitted = apply_compound_scaling(&base, &c, phi, &RoundingPolicy::default()).unwrap();
        assert!((count_total_depth(&fitted) as i64 - 79).abs() <= 2);
    }
}
