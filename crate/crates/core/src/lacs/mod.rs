//! Latency-aware compound scaling: reward, accuracy surrogates, phi fitting,
//! coefficient search and model families.

mod family;
mod fit;
mod grid;
mod reward;
mod schedule;
mod surrogate;

pub use family::{
    compare_scaling, fit_schedule_to_dims, reference_family, scale_family, scale_family_with,
    speedup, ComparisonReport, ComparisonRow, FamilyMember, FamilyRow, ReferenceFamily,
    SpeedupRow, SpeedupSummary,
};
pub use fit::{
    fit_phi, fit_phi_relaxed, fit_phi_with, relaxed_latency, rounded_model, spec_latency,
    FitOptions, PhiFit,
};
pub use grid::{
    best_of, evaluate_triplet, grid_search_coeffs, grid_search_coeffs_with, preference,
    single_objective_coeffs, single_objective_coeffs_with, AxisRange, CoeffSearchResult,
    EvalStatus, Evaluation, GridSpec,
};
pub use reward::{reward, RewardConfig, DEFAULT_REWARD_EXPONENT};
pub use schedule::{LevelTarget, PhiLevel, PhiSchedule};
pub use surrogate::{
    default_preferred_shares, AccuracySurrogate, SurrogateTag, SyntheticSurrogate,
    TableSurrogate, DEFAULT_BASE_ACCURACY, DEFAULT_KAPPA, DEFAULT_MU, DEFAULT_SWISH_BONUS,
};

use thiserror::Error;

use crate::arch_ir::IrError;
use crate::cost_model::CostError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LacsError {
    #[error("latency target {target} s is unreachable: {reason}")]
    Unreachable { target: f64, reason: String },
    #[error("rounded latency drops from {previous} s to {latency} s at phi = {phi}")]
    NonMonotone {
        phi: f64,
        latency: f64,
        previous: f64,
    },
    #[error("latency target {target} s is below the base model latency {base} s")]
    TargetBelowBase { target: f64, base: f64 },
    #[error("coefficient grid is empty")]
    EmptyGrid,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("none of the {0} evaluated triplets was feasible")]
    NoFeasibleTriplet(usize),
    #[error("invalid phi schedule: {0}")]
    InvalidSchedule(String),
    #[error("family is not monotone at level '{0}'")]
    FamilyNotMonotone(String),
    #[error("families have different levels: {a:?} vs {b:?}")]
    LevelMismatch { a: Vec<String>, b: Vec<String> },
    #[error("no table accuracy for model '{0}'")]
    SurrogateMiss(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Cost(#[from] CostError),
}
