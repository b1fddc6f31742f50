//! Scaled model families, schedule fitting and family comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::fit::{fit_phi_with, rounded_model, FitOptions};
use super::schedule::{LevelTarget, PhiLevel, PhiSchedule};
use super::LacsError;
use crate::arch_ir::{
    count_total_depth, validate_model_with_batch, ModelSpec, RoundingPolicy, ScalingCoeffs,
};
use crate::cost_model::{model_cost, HardwareProfile, ModelCost};

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyMember {
    pub level: String,
    pub phi: f64,
    pub width_mult: f64,
    pub spec: ModelSpec,
    pub cost: ModelCost,
}

impl FamilyMember {
    pub fn depth(&self) -> u32 {
        count_total_depth(&self.spec)
    }

    pub fn resolution(&self) -> u32 {
        self.spec.input_resolution
    }

    pub fn row(&self) -> FamilyRow {
        FamilyRow {
            level: self.level.clone(),
            phi: self.phi,
            depth: self.depth(),
            resolution: self.resolution(),
            width_mult: self.width_mult,
            flops: self.cost.flops_per_image().round() as u64,
            intensity: self.cost.aggregate_intensity,
            latency_s: self.cost.total_latency,
        }
    }
}

/// Flat per-level summary used by reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub level: String,
    pub phi: f64,
    pub depth: u32,
    pub resolution: u32,
    pub width_mult: f64,
    /// Multiply-adds per image.
    pub flops: u64,
    pub intensity: f64,
    pub latency_s: f64,
}

pub fn scale_family(
    base: &ModelSpec,
    coeffs: &ScalingCoeffs,
    schedule: &PhiSchedule,
    profile: &HardwareProfile,
) -> Result<Vec<FamilyMember>, LacsError> {
    scale_family_with(base, coeffs, schedule, profile, &FitOptions::default())
}

pub fn scale_family_with(
    base: &ModelSpec,
    coeffs: &ScalingCoeffs,
    schedule: &PhiSchedule,
    profile: &HardwareProfile,
    opts: &FitOptions,
) -> Result<Vec<FamilyMember>, LacsError> {
    schedule.validate()?;
    coeffs.check()?;
    let mut out: Vec<FamilyMember> = Vec::with_capacity(schedule.levels.len());
    for lvl in &schedule.levels {
        let phi = match lvl.target {
            LevelTarget::Phi { phi } => phi,
            LevelTarget::Latency { latency_target_s } => {
                fit_phi_with(base, coeffs, latency_target_s, profile, opts)?.phi
            }
        };
        let spec = rounded_model(base, coeffs, phi, &opts.rounding)?
            .with_name(format!("{}-{}", base.name, lvl.name));
        let cost = model_cost(&validate_model_with_batch(&spec, opts.batch)?, profile);
        let m = FamilyMember {
            level: lvl.name.clone(),
            phi,
            width_mult: coeffs.beta.powf(phi),
            spec,
            cost,
        };
        if let Some(prev) = out.last() {
            if m.depth() < prev.depth() || m.cost.total_latency < prev.cost.total_latency {
                return Err(LacsError::FamilyNotMonotone(m.level));
            }
        }
        out.push(m);
    }
    Ok(out)
}

/// Target `(depth, resolution)` pairs for a family and the coefficients they were
/// produced with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFamily {
    pub coeffs: [f64; 3],
    pub levels: Vec<String>,
    pub dims: Vec<(u32, u32)>,
}

const REFERENCE_DIMS: &str = include_str!("../../data/reference_dims.json");

/// Reference dimensions shipped with the crate: `lacs_gpu`, `lacs_tpu`, `single_objective`.
pub fn reference_family(name: &str) -> Option<ReferenceFamily> {
    let all: BTreeMap<String, ReferenceFamily> =
        serde_json::from_str(REFERENCE_DIMS).expect("shipped reference data parses");
    all.get(name).cloned()
}

/// Least-squares phi per level against target dimensions, weighting depth by 1/2 layer
/// and resolution by 1/8 px. Phi is scanned on a 0.0005 lattice over (0, `max_phi`]; the
/// middle of the first best run is kept.
pub fn fit_schedule_to_dims(
    base: &ModelSpec,
    coeffs: &ScalingCoeffs,
    levels: &[String],
    dims: &[(u32, u32)],
    rounding: &RoundingPolicy,
    max_phi: f64,
) -> Result<PhiSchedule, LacsError> {
    if levels.len() != dims.len() || levels.is_empty() {
        return Err(LacsError::InvalidConfig("levels and dims must be non-empty and of equal length".into()));
    }
    const STEP: f64 = 0.0005;
    let n = (max_phi / STEP).round() as usize;
    let samples: Vec<(u32, u32)> = (1..=n)
        .map(|i| {
            let m = rounded_model(base, coeffs, i as f64 * STEP, rounding)?;
            Ok((count_total_depth(&m), m.input_resolution))
        })
        .collect::<Result<_, LacsError>>()?;
    let mut out = vec![PhiLevel {
        name: levels[0].clone(),
        target: LevelTarget::Phi { phi: 0.0 },
    }];
    for (name, &(d_t, r_t)) in levels.iter().zip(dims).skip(1) {
        let err = |&(d, r): &(u32, u32)| {
            let dd = (d as f64 - d_t as f64) / 2.0;
            let dr = (r as f64 - r_t as f64) / 8.0;
            dd * dd + dr * dr
        };
        let errs: Vec<f64> = samples.iter().map(err).collect();
        let best = errs.iter().copied().fold(f64::INFINITY, f64::min);
        let first = errs.iter().position(|e| *e == best).expect("non-empty scan");
        let last = first + errs[first..].iter().take_while(|e| **e == best).count() - 1;
        let idx = (first + last) / 2;
        out.push(PhiLevel {
            name: name.clone(),
            target: LevelTarget::Phi {
                phi: ((idx + 1) as f64 * STEP * 1e4).round() / 1e4,
            },
        });
    }
    let s = PhiSchedule { levels: out };
    s.validate()?;
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub level: String,
    pub a: FamilyRow,
    pub b: FamilyRow,
    /// `(latency_b - latency_a) / latency_a`.
    pub latency_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub label_a: String,
    pub label_b: String,
    pub rows: Vec<ComparisonRow>,
}

/// Builds both families on the same schedule and lines them up per level.
pub fn compare_scaling(
    base: &ModelSpec,
    lacs: &ScalingCoeffs,
    single_objective: &ScalingCoeffs,
    schedule: &PhiSchedule,
    profile: &HardwareProfile,
) -> Result<ComparisonReport, LacsError> {
    let fa = scale_family(base, lacs, schedule, profile)?;
    let fb = scale_family(base, single_objective, schedule, profile)?;
    let rows = fa
        .iter()
        .zip(&fb)
        .map(|(a, b)| {
            let (ra, rb) = (a.row(), b.row());
            ComparisonRow {
                level: a.level.clone(),
                latency_delta: (rb.latency_s - ra.latency_s) / ra.latency_s,
                a: ra,
                b: rb,
            }
        })
        .collect();
    Ok(ComparisonReport {
        label_a: "lacs".into(),
        label_b: "single_objective".into(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub level: String,
    pub latency_a_s: f64,
    pub latency_b_s: f64,
    /// `latency_b / latency_a`; above 1 means family A is faster.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupSummary {
    pub rows: Vec<SpeedupRow>,
    pub geomean: f64,
}

/// Per-level latency ratios of two families with identical level names.
pub fn speedup(a: &[FamilyRow], b: &[FamilyRow]) -> Result<SpeedupSummary, LacsError> {
    let names = |f: &[FamilyRow]| f.iter().map(|r| r.level.clone()).collect::<Vec<_>>();
    if names(a) != names(b) || a.is_empty() {
        return Err(LacsError::LevelMismatch {
            a: names(a),
            b: names(b),
        });
    }
    let rows: Vec<SpeedupRow> = a
        .iter()
        .zip(b)
        .map(|(x, y)| SpeedupRow {
            level: x.level.clone(),
            latency_a_s: x.latency_s,
            latency_b_s: y.latency_s,
            ratio: y.latency_s / x.latency_s,
        })
        .collect();
    let geomean = (rows.iter().map(|r| r.ratio.ln()).sum::<f64>() / rows.len() as f64).exp();
    Ok(SpeedupSummary { rows, geomean })
}
