//! Roofline latency model, closed-form layer counts and per-model costing.

pub mod formulas;
mod model;
mod op;
mod profile;
mod roofline;

pub use formulas::{
    conv_flops, conv_intensity, conv_mem_elems, dwsep_flops, dwsep_intensity, dwsep_mem_elems,
    Ratio,
};
pub use model::{flops_per_image, model_cost, relaxed_cost, ModelCost, StageCost};
pub use op::{op_class, op_cost, OpCost, Regime};
pub use profile::{Efficiency, HardwareProfile, OpClass, BUILTIN_PROFILES};
pub use roofline::{ridge_point, roofline_curve, roofline_latency};

use thiserror::Error;

use crate::arch_ir::IrError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("unsupported op {op}: {reason}")]
    UnsupportedOp { op: String, reason: String },
    #[error("bad roofline range: need 0 < i_min < i_max and n_points >= 2, got [{i_min}, {i_max}] with {n_points} points")]
    BadRange {
        i_min: f64,
        i_max: f64,
        n_points: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("integer overflow in closed-form count")]
    Overflow,
    #[error("invalid hardware profile {0}")]
    InvalidProfile(String),
    #[error("hardware profile: {0}")]
    ProfileParse(String),
    #[error(transparent)]
    Ir(#[from] IrError),
}
