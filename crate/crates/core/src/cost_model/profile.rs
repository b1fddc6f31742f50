use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CostError;
use crate::arch_ir::ActivationKind;

/// Op class used to pick an execution efficiency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpClass {
    Dense,
    Depthwise,
    Elementwise,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Efficiency {
    pub dense: f64,
    pub depthwise: f64,
    pub elementwise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareProfile {
    pub name: String,
    /// Matrix-unit multiply-adds per second.
    pub peak_matrix_ops: f64,
    /// Vector-unit operations per second.
    pub peak_vector_ops: f64,
    pub mem_bandwidth_bytes: f64,
    pub bytes_per_element: u32,
    pub fused_activations: BTreeSet<ActivationKind>,
    pub efficiency: Efficiency,
}

pub const BUILTIN_PROFILES: [&str; 3] = ["tpu_v3_like", "gpu_v100_like", "cpu_like"];

impl HardwareProfile {
    pub fn validate(&self) -> Result<(), CostError> {
        let bad = |m: String| Err(CostError::InvalidProfile(format!("{}: {m}", self.name)));
        for (field, v) in [
            ("peak_matrix_ops", self.peak_matrix_ops),
            ("peak_vector_ops", self.peak_vector_ops),
            ("mem_bandwidth_bytes", self.mem_bandwidth_bytes),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{field} must be > 0, got {v}"));
            }
        }
        if !matches!(self.bytes_per_element, 1 | 2 | 4) {
            return bad(format!(
                "bytes_per_element must be 1, 2 or 4, got {}",
                self.bytes_per_element
            ));
        }
        let e = &self.efficiency;
        for (field, v) in [
            ("efficiency.dense", e.dense),
            ("efficiency.depthwise", e.depthwise),
            ("efficiency.elementwise", e.elementwise),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{field} must lie in (0, 1], got {v}"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CostError> {
        let p: HardwareProfile =
            serde_json::from_str(text).map_err(|e| CostError::ProfileParse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CostError> {
        let text = std::fs::read_to_string(path).map_err(|e| CostError::ProfileParse(format!(
            "{}: {e}",
            path.display()
        )))?;
        Self::from_json(&text).map_err(|e| match e {
            CostError::ProfileParse(m) => CostError::ProfileParse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "tpu_v3_like" => Some(Self::tpu_v3_like()),
            "gpu_v100_like" => Some(Self::gpu_v100_like()),
            "cpu_like" => Some(Self::cpu_like()),
            _ => None,
        }
    }

    /// Systolic matrix units with a comparatively narrow vector unit; both
    /// activations fuse into the producing op.
    pub fn tpu_v3_like() -> Self {
        Self {
            name: "tpu_v3_like".into(),
            peak_matrix_ops: 61.5e12,
            peak_vector_ops: 1.0e12,
            mem_bandwidth_bytes: 900e9,
            bytes_per_element: 2,
            fused_activations: [ActivationKind::Relu, ActivationKind::Swish].into(),
            efficiency: Efficiency {
                dense: 0.55,
                depthwise: 0.35,
                elementwise: 0.5,
            },
        }
    }

    /// Tensor cores plus wide SIMT lanes; only relu fuses.
    pub fn gpu_v100_like() -> Self {
        Self {
            name: "gpu_v100_like".into(),
            peak_matrix_ops: 62.5e12,
            peak_vector_ops: 15.0e12,
            mem_bandwidth_bytes: 900e9,
            bytes_per_element: 2,
            fused_activations: [ActivationKind::Relu].into(),
            efficiency: Efficiency {
                dense: 0.55,
                depthwise: 0.35,
                elementwise: 0.5,
            },
        }
    }

    /// FP32 server CPU; matrix and vector work share the same SIMD units.
    pub fn cpu_like() -> Self {
        Self {
            name: "cpu_like".into(),
            peak_matrix_ops: 1.5e12,
            peak_vector_ops: 1.5e12,
            mem_bandwidth_bytes: 128e9,
            bytes_per_element: 4,
            fused_activations: [ActivationKind::Relu].into(),
            efficiency: Efficiency {
                dense: 0.55,
                depthwise: 0.35,
                elementwise: 0.5,
            },
        }
    }

    pub fn efficiency_of(&self, class: OpClass) -> f64 {
        match class {
            OpClass::Dense => self.efficiency.dense,
            OpClass::Depthwise => self.efficiency.depthwise,
            OpClass::Elementwise => self.efficiency.elementwise,
        }
    }

    pub fn is_fused(&self, act: ActivationKind) -> bool {
        self.fused_activations.contains(&act)
    }

    /// Intensity (ops/byte) where the roofline turns flat.
    pub fn ridge_point(&self) -> f64 {
        self.peak_matrix_ops / self.mem_bandwidth_bytes
    }

    /// Roofline-ideal rate at intensity `i`.
    pub fn attainable(&self, i: f64) -> f64 {
        if i >= self.ridge_point() {
            self.peak_matrix_ops
        } else {
            i * self.mem_bandwidth_bytes
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate_and_round_trip() {
        for name in BUILTIN_PROFILES {
            let p = HardwareProfile::builtin(name).unwrap();
            p.validate().unwrap();
            assert_eq!(HardwareProfile::from_json(&p.to_json()).unwrap(), p);
        }
        assert!(HardwareProfile::builtin("abacus").is_none());
    }

    #[test]
    fn shipped_profile_files_match_builtins() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/profiles");
        for name in BUILTIN_PROFILES {
            let p = HardwareProfile::load(&dir.join(format!("{name}.json"))).unwrap();
            assert_eq!(p, HardwareProfile::builtin(name).unwrap());
        }
    }

    #[test]
    fn rejects_bad_values() {
        let mut p = HardwareProfile::cpu_like();
        p.bytes_per_element = 3;
        assert!(p.validate().is_err());
        let mut p = HardwareProfile::cpu_like();
        p.efficiency.dense = 0.0;
        assert!(p.validate().is_err());
        let mut p = HardwareProfile::cpu_like();
        p.mem_bandwidth_bytes = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn rejects_unknown_fields() {
        let mut v: serde_json::Value = serde_json::from_str(&HardwareProfile::cpu_like().to_json()).unwrap();
        v["l3_cache"] = 1.into();
        assert!(HardwareProfile::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn ridge_point_is_a_division() {
        let mut p = HardwareProfile::cpu_like();
        p.peak_matrix_ops = 1e12;
        p.mem_bandwidth_bytes = 1e10;
        assert_eq!(p.ridge_point(), 100.0);
        p.mem_bandwidth_bytes = 2e10;
        assert_eq!(p.ridge_point(), 50.0);
    }

    #[test]
    fn accelerators_have_higher_ridge_than_cpu() {
        let cpu = HardwareProfile::cpu_like().ridge_point();
        assert!(HardwareProfile::tpu_v3_like().ridge_point() > cpu);
        assert!(HardwareProfile::gpu_v100_like().ridge_point() > cpu);
    }
}
