use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LacsError;

/// How one family level is sized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelTarget {
    Phi { phi: f64 },
    Latency { latency_target_s: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiLevel {
    pub name: String,
    #[serde(flatten)]
    pub target: LevelTarget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSchedule {
    pub levels: Vec<PhiLevel>,
}

const GPU_FITTED: &str = include_str!("../../data/schedules/lacs_gpu.json");
const TPU_FITTED: &str = include_str!("../../data/schedules/lacs_tpu.json");
const SINGLE_FITTED: &str = include_str!("../../data/schedules/single_objective.json");

impl PhiSchedule {
    pub fn from_phis(names_and_phis: &[(&str, f64)]) -> Result<Self, LacsError> {
        let s = PhiSchedule {
            levels: names_and_phis
                .iter()
                .map(|(n, phi)| PhiLevel {
                    name: n.to_string(),
                    target: LevelTarget::Phi { phi: *phi },
                })
                .collect(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Level 0 at phi = 0 followed by latency targets.
    pub fn from_latency_targets(base_name: &str, targets: &[(&str, f64)]) -> Result<Self, LacsError> {
        let mut levels = vec![PhiLevel {
            name: base_name.to_string(),
            target: LevelTarget::Phi { phi: 0.0 },
        }];
        levels.extend(targets.iter().map(|(n, t)| PhiLevel {
            name: n.to_string(),
            target: LevelTarget::Latency {
                latency_target_s: *t,
            },
        }));
        let s = PhiSchedule { levels };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), LacsError> {
        let bad = |m: String| Err(LacsError::InvalidSchedule(m));
        let Some(first) = self.levels.first() else {
            return bad("schedule has no levels".into());
        };
        if first.target != (LevelTarget::Phi { phi: 0.0 }) {
            return bad(format!("level 0 ('{}') must have phi = 0", first.name));
        }
        let (mut last_phi, mut last_t) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (i, lvl) in self.levels.iter().enumerate() {
            if lvl.name.is_empty() {
                return bad(format!("level {i} has an empty name"));
            }
            if self.levels[..i].iter().any(|l| l.name == lvl.name) {
                return bad(format!("duplicate level name '{}'", lvl.name));
            }
            match lvl.target {
                LevelTarget::Phi { phi } => {
                    if !(phi.is_finite() && phi > last_phi) {
                        return bad(format!("phi must be finite and strictly increasing at level '{}'", lvl.name));
                    }
                    last_phi = phi;
                }
                LevelTarget::Latency { latency_target_s: t } => {
                    if !(t.is_finite() && t > 0.0 && t > last_t) {
                        return bad(format!(
                            "latency targets must be positive and strictly increasing at level '{}'",
                            lvl.name
                        ));
                    }
                    last_t = t;
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, LacsError> {
        let s: PhiSchedule =
            serde_json::from_str(text).map_err(|e| LacsError::InvalidSchedule(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn load(path: &Path) -> Result<Self, LacsError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LacsError::InvalidSchedule(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            LacsError::InvalidSchedule(m) => LacsError::InvalidSchedule(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Shipped schedules fitted to the published family dimensions:
    /// `lacs_gpu`, `lacs_tpu`, `single_objective`.
    pub fn builtin(name: &str) -> Option<Self> {
        let text = match name {
            "lacs_gpu" => GPU_FITTED,
            "lacs_tpu" => TPU_FITTED,
            "single_objective" => SINGLE_FITTED,
            _ => return None,
        };
        Some(Self::from_json(text).expect("shipped schedule is valid"))
    }

    pub fn names(&self) -> Vec<&str> {
        self.levels.iter().map(|l| l.name.as_str()).collect()
    }
}
