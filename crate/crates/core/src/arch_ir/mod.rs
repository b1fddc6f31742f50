//! Architecture IR: stage-level model descriptions, shape propagation,
//! the builtin reference networks and compound scaling.

mod builtin;
mod scaling;
mod types;
mod validate;
mod wire;

pub use builtin::{
    build_breakdown_variants, build_efficientnet_x_b0, builtin_model, efficientnet_b0, Target,
    BUILTIN_MODELS,
};
pub use scaling::{
    apply_compound_scaling, apply_dims, count_total_depth, DepthRounding, RelaxedModel, RelaxedStage,
    RoundingPolicy,
};
pub use types::{
    ActivationKind, BlockParams, ModelSpec, OpKind, ScaledDims, ScalingCoeffs, Stage,
    TensorShape, DEFAULT_BATCH, HEAD_CLASSES, INPUT_CHANNELS,
};
pub use validate::{
    propagate_shape, validate_fragment, validate_model, validate_model_with_batch, RepeatShape,
    ValidatedModel, ValidatedStage,
};
pub use wire::{model_from_json, model_to_json, StageRecord, WireModel};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrError {
    #[error("model has no stages")]
    EmptyModel,
    #[error("stage {stage}: {dim} {size} is not divisible by stride {stride}")]
    NonDivisibleStride {
        stage: usize,
        dim: &'static str,
        size: u32,
        stride: u32,
    },
    #[error("first stage must be a stem, found {found}")]
    FirstStageNotStem { found: &'static str },
    #[error("stage {stage}: {reason}")]
    InvalidStage { stage: usize, reason: String },
    #[error("stage {stage} ({op}) is not depth-scalable and must have repeats = 1, found {repeats}")]
    FixedStageRepeats {
        stage: usize,
        op: &'static str,
        repeats: u32,
    },
    #[error("invalid input shape {0}")]
    InvalidShape(TensorShape),
    #[error("invalid input resolution {0}")]
    InvalidResolution(u32),
    #[error("phi must be finite and >= 0, got {0}")]
    InvalidPhi(f64),
    #[error("invalid scaling coefficients: {0}")]
    InvalidCoeffs(String),
    #[error("model JSON: {0}")]
    Parse(String),
}
