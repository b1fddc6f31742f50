//! Accuracy predictors used in place of trained ImageNet accuracy.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::LacsError;
use crate::arch_ir::{count_total_depth, ActivationKind, ModelSpec, OpKind};
use crate::cost_model::flops_per_image;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SurrogateTag {
    /// Closed-form stand-in; not a measured accuracy.
    Synthetic,
    /// Looked up from user-supplied numbers.
    Table,
}

impl fmt::Display for SurrogateTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurrogateTag::Synthetic => "SYNTHETIC",
            SurrogateTag::Table => "TABLE",
        })
    }
}

/// Deterministic map from an architecture to a predicted accuracy in (0, 1).
pub trait AccuracySurrogate: Send + Sync {
    fn tag(&self) -> SurrogateTag;
    fn predict(&self, spec: &ModelSpec) -> Result<f64, LacsError>;
}

/// Sum of channel counts that scale with width.
fn width_sum(spec: &ModelSpec) -> f64 {
    spec.stages
        .iter()
        .filter_map(|s| match s.op {
            OpKind::Stem { out_c, .. }
            | OpKind::Conv { out_c, .. }
            | OpKind::DepthwiseSepConv { out_c, .. }
            | OpKind::Head { out_c } => Some(out_c as f64),
            OpKind::MbConv(p) | OpKind::FusedMbConv(p) => Some(p.out_c as f64),
            _ => None,
        })
        .sum()
}

/// Share of block layers that use swish.
fn swish_fraction(spec: &ModelSpec) -> f64 {
    let (mut swish, mut all) = (0u32, 0u32);
    for s in spec.stages.iter().filter(|s| s.op.counts_toward_depth()) {
        all += s.repeats;
        if s.activation == ActivationKind::Swish {
            swish += s.repeats;
        }
    }
    if all == 0 {
        0.0
    } else {
        swish as f64 / all as f64
    }
}

/// Capacity-style synthetic accuracy:
///
/// `acc = 1 - (1 - a0) * exp(-cap)` with
/// `cap = kappa * ln(F / F0) - mu * imbalance + swish_bonus * (swish share - reference share)`.
///
/// `imbalance` is the squared distance of the log-growth split
/// `(ln d, 2 ln w, 2 ln r)` from `preferred` times its sum, so growth spread over
/// depth, width and resolution beats pushing one axis alone. The reference model
/// scores exactly `a0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSurrogate {
    pub base_accuracy: f64,
    pub kappa: f64,
    pub mu: f64,
    pub swish_bonus: f64,
    /// Preferred shares of log-FLOPs growth for depth, width and resolution.
    pub preferred: [f64; 3],
    reference_flops: f64,
    reference_depth: f64,
    reference_width: f64,
    reference_resolution: f64,
    reference_swish: f64,
}

pub const DEFAULT_BASE_ACCURACY: f64 = 0.77;
pub const DEFAULT_KAPPA: f64 = 0.0928;
pub const DEFAULT_MU: f64 = 0.2;
pub const DEFAULT_SWISH_BONUS: f64 = 0.011;

/// Growth split of the accuracy-only reference triplet (1.2, 1.1, 1.15).
pub fn default_preferred_shares() -> [f64; 3] {
    let s = [1.2f64.ln(), 2.0 * 1.1f64.ln(), 2.0 * 1.15f64.ln()];
    let t: f64 = s.iter().sum();
    [s[0] / t, s[1] / t, s[2] / t]
}

impl SyntheticSurrogate {
    pub fn new(reference: &ModelSpec) -> Result<Self, LacsError> {
        Ok(Self {
            base_accuracy: DEFAULT_BASE_ACCURACY,
            kappa: DEFAULT_KAPPA,
            mu: DEFAULT_MU,
            swish_bonus: DEFAULT_SWISH_BONUS,
            preferred: default_preferred_shares(),
            reference_flops: flops_per_image(reference)?,
            reference_depth: count_total_depth(reference).max(1) as f64,
            reference_width: width_sum(reference).max(1.0),
            reference_resolution: reference.input_resolution.max(1) as f64,
            reference_swish: swish_fraction(reference),
        })
    }

    /// Pure FLOPs capacity: no shape balance term and no activation term.
    pub fn flops_only(reference: &ModelSpec) -> Result<Self, LacsError> {
        Ok(Self {
            mu: 0.0,
            swish_bonus: 0.0,
            ..Self::new(reference)?
        })
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_swish_bonus(mut self, bonus: f64) -> Self {
        self.swish_bonus = bonus;
        self
    }

    pub fn imbalance(&self, d: f64, w: f64, r: f64) -> f64 {
        let s = [d.ln(), 2.0 * w.ln(), 2.0 * r.ln()];
        let t: f64 = s.iter().sum();
        s.iter()
            .zip(self.preferred)
            .map(|(si, p)| (si - p * t).powi(2))
            .sum()
    }

    pub fn from_parts(&self, flops: f64, d: f64, w: f64, r: f64, swish: f64) -> f64 {
        let cap = self.kappa * (flops / self.reference_flops).ln() - self.mu * self.imbalance(d, w, r)
            + self.swish_bonus * (swish - self.reference_swish);
        (1.0 - (1.0 - self.base_accuracy) * (-cap).exp()).clamp(1e-6, 1.0 - 1e-12)
    }
}

impl AccuracySurrogate for SyntheticSurrogate {
    fn tag(&self) -> SurrogateTag {
        SurrogateTag::Synthetic
    }

    fn predict(&self, spec: &ModelSpec) -> Result<f64, LacsError> {
        let flops = flops_per_image(spec)?;
        let d = count_total_depth(spec).max(1) as f64 / self.reference_depth;
        let w = width_sum(spec).max(1.0) / self.reference_width;
        let r = spec.input_resolution as f64 / self.reference_resolution;
        Ok(self.from_parts(flops, d, w, r, swish_fraction(spec)))
    }
}

/// Accuracy looked up by model name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TableSurrogate {
    pub entries: BTreeMap<String, f64>,
}

impl TableSurrogate {
    pub fn new(entries: impl IntoIterator<Item = (String, f64)>) -> Result<Self, LacsError> {
        let entries: BTreeMap<String, f64> = entries.into_iter().collect();
        if let Some((k, v)) = entries.iter().find(|(_, v)| !(**v > 0.0 && **v <= 1.0)) {
            return Err(LacsError::InvalidConfig(format!(
                "table accuracy for '{k}' must lie in (0, 1], got {v}"
            )));
        }
        Ok(Self { entries })
    }
}

impl AccuracySurrogate for TableSurrogate {
    fn tag(&self) -> SurrogateTag {
        SurrogateTag::Table
    }

    fn predict(&self, spec: &ModelSpec) -> Result<f64, LacsError> {
        self.entries
            .get(&spec.name)
            .copied()
            .ok_or_else(|| LacsError::SurrogateMiss(spec.name.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch_ir::{
        apply_compound_scaling, build_efficientnet_x_b0, RoundingPolicy, ScalingCoeffs, Target,
    };

    fn base() -> ModelSpec {
        build_efficientnet_x_b0(Target::Tpu)
    }

    #[test]
    fn reference_scores_base_accuracy() {
        let s = SyntheticSurrogate::new(&base()).unwrap();
        assert!((s.predict(&base()).unwrap() - 0.77).abs() < 1e-12);
        assert_eq!(s.tag(), SurrogateTag::Synthetic);
    }

    #[test]
    fn preferred_shares_sum_to_one() {
        let p = default_preferred_shares();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[2] - 0.428).abs() < 1e-3);
    }

    #[test]
    fn hundredfold_flops_reaches_mid_eighties() {
        let s = SyntheticSurrogate::new(&base()).unwrap();
        let f0 = flops_per_image(&base()).unwrap();
        let a = s.from_parts(100.0 * f0, 1.0, 1.0, 1.0, s.reference_swish);
        assert!((a - 0.85).abs() < 0.005, "{a}");
    }

    #[test]
    fn balanced_growth_is_neutral() {
        let s = SyntheticSurrogate::new(&base()).unwrap();
        let c = ScalingCoeffs::new(1.2, 1.1, 1.15).unwrap();
        let d = c.dims(3.0);
        assert!(s.imbalance(d.d, d.w_mult, d.r) < 1e-20);
        assert!(s.imbalance(2.0, 1.0, 1.0) > 0.0);
    }

    #[test]
    fn deterministic_and_monotone_in_phi() {
        let s = SyntheticSurrogate::new(&base()).unwrap();
        let c = ScalingCoeffs::new(1.2, 1.1, 1.15).unwrap();
        let accs: Vec<f64> = [0.0, 1.0, 2.0, 4.0, 7.0]
            .iter()
            .map(|&phi| {
                let m = apply_compound_scaling(&base(), &c, phi, &RoundingPolicy::default()).unwrap();
                assert_eq!(s.predict(&m).unwrap(), s.predict(&m).unwrap());
                s.predict(&m).unwrap()
            })
            .collect();
        assert!(accs.windows(2).all(|w| w[1] > w[0]), "{accs:?}");
        assert!(accs.iter().all(|a| *a > 0.0 && *a < 1.0));
    }

    #[test]
    fn swish_is_rewarded() {
        let s = SyntheticSurrogate::new(&base()).unwrap();
        let gpu = build_efficientnet_x_b0(Target::Gpu);
        assert!(s.predict(&base()).unwrap() > s.predict(&gpu).unwrap());
    }

    #[test]
    fn table_lookup() {
        let t = TableSurrogate::new([("efficientnet-x-b0-tpu".to_string(), 0.774)]).unwrap();
        assert_eq!(t.predict(&base()).unwrap(), 0.774);
        assert_eq!(t.tag(), SurrogateTag::Table);
        let gpu = build_efficientnet_x_b0(Target::Gpu);
        assert!(matches!(t.predict(&gpu), Err(LacsError::SurrogateMiss(_))));
        assert!(TableSurrogate::new([("x".to_string(), 1.5)]).is_err());
    }
}
