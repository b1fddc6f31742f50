//! Reference networks shipped with the toolkit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::types::{ActivationKind, BlockParams, ModelSpec, OpKind, Stage};

/// Accelerator family the activation column of X-B0 is chosen for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Tpu,
    Gpu,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Tpu => "tpu",
            Target::Gpu => "gpu",
        })
    }
}

impl FromStr for Target {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tpu" => Ok(Target::Tpu),
            "gpu" => Ok(Target::Gpu),
            other => Err(format!("unknown target '{other}', expected tpu or gpu")),
        }
    }
}

use ActivationKind::{Relu, Swish};

fn mb(k: u32, e: u32, se: f64, s: u32, oc: u32) -> OpKind {
    OpKind::MbConv(BlockParams::new(k, e, se, s, oc))
}

fn fused(k: u32, e: u32, se: f64, s: u32, oc: u32) -> OpKind {
    OpKind::FusedMbConv(BlockParams::new(k, e, se, s, oc))
}

fn with_base(op: OpKind, base: u32) -> OpKind {
    match op {
        OpKind::MbConv(p) => OpKind::MbConv(p.with_expansion_base(base)),
        OpKind::FusedMbConv(p) => OpKind::FusedMbConv(p.with_expansion_base(base)),
        other => other,
    }
}

/// X-B0 stage list with the given op for stages 4-5 and per-stage activations.
fn x_b0_like(name: &str, fused_45: bool, act: [ActivationKind; 10]) -> ModelSpec {
    let block45 = if fused_45 { fused } else { mb };
    let stages = vec![
        Stage::new(OpKind::Stem { kernel: 3, stride: 2, out_c: 32 }, 1, act[0]),
        Stage::new(OpKind::SpaceToDepthConv { block: 2 }, 1, act[1]),
        Stage::new(mb(3, 1, 1.0, 1, 64), 1, act[2]),
        // Expansion of the first block is taken on the nominal 16-channel input.
        Stage::new(with_base(block45(3, 6, 0.5, 1, 24), 16), 2, act[3]).scalable(),
        Stage::new(block45(5, 6, 0.25, 2, 40), 2, act[4]).scalable(),
        Stage::new(mb(3, 6, 0.25, 2, 80), 3, act[5]).scalable(),
        Stage::new(mb(5, 6, 0.25, 1, 112), 3, act[6]).scalable(),
        Stage::new(mb(5, 6, 0.25, 2, 192), 4, act[7]).scalable(),
        Stage::new(mb(3, 6, 0.25, 1, 320), 1, act[8]),
        Stage::new(OpKind::Head { out_c: 1280 }, 1, act[9]),
    ];
    ModelSpec::new(name, 224, stages)
}

const TPU_ACTS: [ActivationKind; 10] = [
    Swish, Relu, Relu, Swish, Swish, Relu, Relu, Relu, Relu, Relu,
];

/// The searched accelerator-optimized base network.
pub fn build_efficientnet_x_b0(target: Target) -> ModelSpec {
    match target {
        Target::Tpu => x_b0_like("efficientnet-x-b0-tpu", true, TPU_ACTS),
        Target::Gpu => x_b0_like("efficientnet-x-b0-gpu", true, [Relu; 10]),
    }
}

/// EfficientNet-B0 from its published stage table.
///
/// SE ratios are stored relative to the expanded width, hence `0.25 / 6` on the
/// expansion-6 stages.
pub fn efficientnet_b0() -> ModelSpec {
    let q = 0.25 / 6.0;
    let stages = vec![
        Stage::new(OpKind::Stem { kernel: 3, stride: 2, out_c: 32 }, 1, Swish),
        Stage::new(mb(3, 1, 0.25, 1, 16), 1, Swish).scalable(),
        Stage::new(mb(3, 6, q, 2, 24), 2, Swish).scalable(),
        Stage::new(mb(5, 6, q, 2, 40), 2, Swish).scalable(),
        Stage::new(mb(3, 6, q, 2, 80), 3, Swish).scalable(),
        Stage::new(mb(5, 6, q, 1, 112), 3, Swish).scalable(),
        Stage::new(mb(5, 6, q, 2, 192), 4, Swish).scalable(),
        Stage::new(mb(3, 6, q, 1, 320), 1, Swish).scalable(),
        Stage::new(OpKind::Head { out_c: 1280 }, 1, Swish),
    ];
    ModelSpec::new("efficientnet-b0", 224, stages)
}

/// Baseline, +SpaceToDepth, +FusedConv and the full X-B0 (TPU activations), in that order.
pub fn build_breakdown_variants() -> Vec<ModelSpec> {
    vec![
        efficientnet_b0(),
        x_b0_like("plus-space-to-depth", false, [Swish; 10]),
        x_b0_like("plus-fused-conv", true, [Swish; 10]),
        build_efficientnet_x_b0(Target::Tpu),
    ]
}

/// Names accepted by [`builtin_model`].
pub const BUILTIN_MODELS: [&str; 6] = [
    "b0",
    "x-b0",
    "x-b0-tpu",
    "x-b0-gpu",
    "plus-space-to-depth",
    "plus-fused-conv",
];

/// Looks up a reference network by short or full name; `x-b0` is the TPU variant.
pub fn builtin_model(name: &str) -> Option<ModelSpec> {
    match name.to_ascii_lowercase().as_str() {
        "b0" | "efficientnet-b0" => Some(efficientnet_b0()),
        "x-b0" | "x-b0-tpu" | "efficientnet-x-b0-tpu" => Some(build_efficientnet_x_b0(Target::Tpu)),
        "x-b0-gpu" | "efficientnet-x-b0-gpu" => Some(build_efficientnet_x_b0(Target::Gpu)),
        "plus-space-to-depth" => Some(build_breakdown_variants().swap_remove(1)),
        "plus-fused-conv" => Some(build_breakdown_variants().swap_remove(2)),
        _ => None,
    }
}
