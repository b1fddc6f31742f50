use serde::{Deserialize, Serialize};

use super::LacsError;

pub const DEFAULT_REWARD_EXPONENT: f64 = -0.09;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub w: f64,
    /// Seconds.
    pub target_latency: f64,
}

impl RewardConfig {
    pub fn new(w: f64, target_latency: f64) -> Result<Self, LacsError> {
        let cfg = Self { w, target_latency };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn with_target(target_latency: f64) -> Result<Self, LacsError> {
        Self::new(DEFAULT_REWARD_EXPONENT, target_latency)
    }

    pub fn check(&self) -> Result<(), LacsError> {
        if !(self.w < 0.0 && self.w.is_finite()) {
            return Err(LacsError::InvalidConfig(format!("reward exponent w must be < 0, got {}", self.w)));
        }
        if !(self.target_latency > 0.0 && self.target_latency.is_finite()) {
            return Err(LacsError::InvalidConfig(format!(
                "target latency must be > 0, got {}",
                self.target_latency
            )));
        }
        Ok(())
    }
}

/// `accuracy * (latency / T)^w`.
pub fn reward(accuracy: f64, latency: f64, cfg: &RewardConfig) -> f64 {
    let ratio = latency / cfg.target_latency;
    if ratio == 1.0 {
        accuracy
    } else {
        accuracy * ratio.powf(cfg.w)
    }
}
