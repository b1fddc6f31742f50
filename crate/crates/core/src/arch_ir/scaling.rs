use serde::{Deserialize, Serialize};

use super::types::{ActivationKind, ModelSpec, OpKind, ScaledDims, ScalingCoeffs};
use super::IrError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthRounding {
    /// Round half up, minimum 1.
    #[default]
    Nearest,
    Ceil,
}

/// How continuous multipliers become integer dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundingPolicy {
    pub depth: DepthRounding,
    /// Channels snap to the nearest multiple of this (also the minimum).
    pub width_multiple: u32,
    /// Input resolution snaps to the nearest multiple of this (also the minimum).
    pub resolution_multiple: u32,
}

impl Default for RoundingPolicy {
    fn default() -> Self {
        Self {
            depth: DepthRounding::Nearest,
            width_multiple: 8,
            resolution_multiple: 8,
        }
    }
}

impl RoundingPolicy {
    pub fn ceil_depth() -> Self {
        Self {
            depth: DepthRounding::Ceil,
            ..Self::default()
        }
    }

    pub fn round_repeats(&self, repeats: u32, d: f64) -> u32 {
        if d == 1.0 {
            return repeats;
        }
        let x = repeats as f64 * d;
        let r = match self.depth {
            DepthRounding::Nearest => (x + 0.5).floor(),
            DepthRounding::Ceil => (x - 1e-9).ceil(),
        };
        (r as u32).max(1)
    }

    pub fn round_channels(&self, c: u32, w: f64) -> u32 {
        if w == 1.0 {
            return c;
        }
        round_to_multiple(c as f64 * w, self.width_multiple)
    }

    pub fn round_resolution(&self, res: u32, r: f64) -> u32 {
        if r == 1.0 {
            return res;
        }
        round_to_multiple(res as f64 * r, self.resolution_multiple)
    }
}

fn round_to_multiple(x: f64, m: u32) -> u32 {
    let m = m.max(1);
    let k = (x / m as f64 + 0.5).floor() as u32;
    k.max(1) * m
}

fn check_phi(phi: f64) -> Result<(), IrError> {
    if phi.is_finite() && phi >= 0.0 {
        Ok(())
    } else {
        Err(IrError::InvalidPhi(phi))
    }
}

fn scale_op(op: OpKind, w: f64, rounding: &RoundingPolicy) -> OpKind {
    let ch = |c: u32| rounding.round_channels(c, w);
    match op {
        OpKind::Stem { kernel, stride, out_c } => OpKind::Stem { kernel, stride, out_c: ch(out_c) },
        OpKind::Conv { kernel, stride, out_c } => OpKind::Conv { kernel, stride, out_c: ch(out_c) },
        OpKind::DepthwiseSepConv { kernel, stride, out_c } => {
            OpKind::DepthwiseSepConv { kernel, stride, out_c: ch(out_c) }
        }
        OpKind::MbConv(mut p) => {
            p.out_c = ch(p.out_c);
            p.expansion_base = p.expansion_base.map(ch);
            OpKind::MbConv(p)
        }
        OpKind::FusedMbConv(mut p) => {
            p.out_c = ch(p.out_c);
            p.expansion_base = p.expansion_base.map(ch);
            OpKind::FusedMbConv(p)
        }
        OpKind::Head { out_c } => OpKind::Head { out_c: ch(out_c) },
        // Reshaping output follows its input; classifier width is fixed.
        OpKind::SpaceToDepthConv { .. } | OpKind::Pool | OpKind::Fc { .. } => op,
    }
}

/// Scales depth, width and resolution by `coeffs^phi` and rounds per `rounding`.
/// SE ratios and activations are kept.
pub fn apply_compound_scaling(
    spec: &ModelSpec,
    coeffs: &ScalingCoeffs,
    phi: f64,
    rounding: &RoundingPolicy,
) -> Result<ModelSpec, IrError> {
    check_phi(phi)?;
    coeffs.check()?;
    let dims = coeffs.dims(phi);
    Ok(apply_dims(spec, &dims, rounding))
}

/// Same as [`apply_compound_scaling`] with precomputed multipliers.
pub fn apply_dims(spec: &ModelSpec, dims: &ScaledDims, rounding: &RoundingPolicy) -> ModelSpec {
    let stages = spec
        .stages
        .iter()
        .map(|st| {
            let mut st = st.clone();
            if st.scalable {
                st.repeats = rounding.round_repeats(st.repeats, dims.d);
            }
            st.op = scale_op(st.op, dims.w_mult, rounding);
            st
        })
        .collect();
    ModelSpec {
        name: spec.name.clone(),
        input_resolution: rounding.round_resolution(spec.input_resolution, dims.r),
        stages,
    }
}

/// Layer count over block stages. Stem, reshaping conv and head are not counted.
pub fn count_total_depth(spec: &ModelSpec) -> u32 {
    spec.stages
        .iter()
        .filter(|s| s.op.counts_toward_depth())
        .map(|s| s.repeats)
        .sum()
}

/// One stage of a [`RelaxedModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxedStage {
    /// Base op; channel counts are multiplied by `width` when costed.
    pub op: OpKind,
    pub repeats: f64,
    pub activation: ActivationKind,
    pub width: f64,
}

/// A model scaled with continuous multipliers and no rounding.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxedModel {
    pub base: ModelSpec,
    pub dims: ScaledDims,
}

impl RelaxedModel {
    pub fn new(base: ModelSpec) -> Self {
        Self {
            base,
            dims: ScaledDims::identity(),
        }
    }

    pub fn scaled(base: &ModelSpec, coeffs: &ScalingCoeffs, phi: f64) -> Result<Self, IrError> {
        check_phi(phi)?;
        coeffs.check()?;
        Ok(Self {
            base: base.clone(),
            dims: coeffs.dims(phi),
        })
    }

    /// Scales further; multipliers compose.
    pub fn scale(&self, coeffs: &ScalingCoeffs, phi: f64) -> Result<Self, IrError> {
        check_phi(phi)?;
        coeffs.check()?;
        Ok(Self {
            base: self.base.clone(),
            dims: self.dims.compose(&coeffs.dims(phi)),
        })
    }

    pub fn resolution(&self) -> f64 {
        self.base.input_resolution as f64 * self.dims.r
    }

    pub fn stages(&self) -> Vec<RelaxedStage> {
        self.base
            .stages
            .iter()
            .map(|st| RelaxedStage {
                op: st.op,
                repeats: if st.scalable {
                    st.repeats as f64 * self.dims.d
                } else {
                    st.repeats as f64
                },
                activation: st.activation,
                width: self.dims.w_mult,
            })
            .collect()
    }

    pub fn depth(&self) -> f64 {
        self.stages()
            .iter()
            .filter(|s| s.op.counts_toward_depth())
            .map(|s| s.repeats)
            .sum()
    }
}
