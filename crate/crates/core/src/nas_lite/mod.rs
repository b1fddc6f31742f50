//! Small architecture search over per-stage block choices on a fixed skeleton.

mod archive;
mod search;
mod space;

pub use archive::{dominates, ArchiveEntry, ParetoArchive};
pub use search::{
    evolutionary_search, exhaustive_search, write_log, EvalRecord, EvolutionParams, Scorer,
    SearchResult, DEFAULT_MAX_SPACE, DEFAULT_POPULATION, DEFAULT_SAMPLES,
};
pub use space::{
    mutate, mutate_with, sample, sample_with, Candidate, ChoiceSets, ConvType, MutationSite,
    Skeleton, SkeletonStage, SpaceConfig, StageChoice, STAGE_FIELDS,
};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arch_ir::{validate_model, IrError};
use crate::cost_model::{model_cost, CostError, HardwareProfile};
use crate::lacs::{LacsError, RewardConfig, DEFAULT_REWARD_EXPONENT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NasError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("candidate does not belong to the space: {0}")]
    InvalidCandidate(String),
    #[error("every field has a single option; nothing to mutate")]
    NoMutationPossible,
    #[error("search space has {size} candidates, above the cap of {cap}")]
    SpaceTooLarge { size: u128, cap: u128 },
    #[error("budget {budget} is below the population size {population}")]
    BudgetTooSmall { budget: usize, population: usize },
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Lacs(#[from] LacsError),
}

fn default_population() -> usize {
    DEFAULT_POPULATION
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_budget() -> usize {
    500
}

fn default_w() -> f64 {
    DEFAULT_REWARD_EXPONENT
}

/// On-disk search configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    #[serde(default)]
    pub skeleton: Skeleton,
    #[serde(default)]
    pub choices: ChoiceSets,
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to the latency of [`SpaceConfig::first_candidate`] on the chosen profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_latency_s: Option<f64>,
    #[serde(default = "default_w")]
    pub reward_w: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            skeleton: Skeleton::default(),
            choices: ChoiceSets::default(),
            population: DEFAULT_POPULATION,
            samples: DEFAULT_SAMPLES,
            budget: default_budget(),
            seed: 0,
            target_latency_s: None,
            reward_w: DEFAULT_REWARD_EXPONENT,
        }
    }
}

impl SearchConfig {
    pub fn space(&self) -> SpaceConfig {
        SpaceConfig {
            skeleton: self.skeleton.clone(),
            choices: self.choices.clone(),
        }
    }

    pub fn params(&self) -> EvolutionParams {
        EvolutionParams {
            population: self.population,
            samples: self.samples,
            budget: self.budget,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<(), NasError> {
        self.space().validate()?;
        self.params().check()?;
        if let Some(t) = self.target_latency_s {
            RewardConfig::new(self.reward_w, t)?;
        } else if !(self.reward_w < 0.0 && self.reward_w.is_finite()) {
            return Err(NasError::InvalidConfig(format!("reward_w must be < 0, got {}", self.reward_w)));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, NasError> {
        let c: SearchConfig =
            serde_json::from_str(text).map_err(|e| NasError::InvalidConfig(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, NasError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NasError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            NasError::InvalidConfig(m) => NasError::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Reward settings, resolving the default target against `profile`.
    pub fn reward_config(&self, profile: &HardwareProfile) -> Result<RewardConfig, NasError> {
        let space = self.space();
        let t = match self.target_latency_s {
            Some(t) => t,
            None => {
                let spec = space.to_spec(&space.first_candidate(), "reference")?;
                model_cost(&validate_model(&spec)?, profile).total_latency
            }
        };
        Ok(RewardConfig::new(self.reward_w, t)?)
    }
}
