//! JSON wire format for [`ModelSpec`].

use serde::{Deserialize, Serialize};

use super::types::{ActivationKind, BlockParams, ModelSpec, OpKind, Stage};
use super::IrError;

/// One stage as it appears on disk. Fields that do not apply to an op kind are omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageRecord {
    pub op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_c: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se_ratio: Option<f64>,
    #[serde(default = "one")]
    pub repeats: u32,
    pub activation: ActivationKind,
    #[serde(default)]
    pub scalable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion_base: Option<u32>,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireModel {
    pub name: String,
    pub input_resolution: u32,
    pub stages: Vec<StageRecord>,
}

fn need<T>(v: Option<T>, idx: usize, field: &str, op: &str) -> Result<T, IrError> {
    v.ok_or_else(|| IrError::Parse(format!("stages[{idx}]: op '{op}' requires field '{field}'")))
}

fn forbid<T>(v: &Option<T>, idx: usize, field: &str, op: &str) -> Result<(), IrError> {
    if v.is_some() {
        Err(IrError::Parse(format!(
            "stages[{idx}]: field '{field}' does not apply to op '{op}'"
        )))
    } else {
        Ok(())
    }
}

impl StageRecord {
    pub fn to_stage(&self, idx: usize) -> Result<Stage, IrError> {
        let op = self.op.as_str();
        let kind = match op {
            "stem" | "conv" | "dwsep" => {
                forbid(&self.expansion, idx, "expansion", op)?;
                forbid(&self.se_ratio, idx, "se_ratio", op)?;
                forbid(&self.expansion_base, idx, "expansion_base", op)?;
                let kernel = need(self.kernel, idx, "kernel", op)?;
                let stride = self.stride.unwrap_or(1);
                let out_c = need(self.out_c, idx, "out_c", op)?;
                match op {
                    "stem" => OpKind::Stem { kernel, stride, out_c },
                    "conv" => OpKind::Conv { kernel, stride, out_c },
                    _ => OpKind::DepthwiseSepConv { kernel, stride, out_c },
                }
            }
            "mbconv" | "fused_mbconv" => {
                let mut p = BlockParams::new(
                    need(self.kernel, idx, "kernel", op)?,
                    need(self.expansion, idx, "expansion", op)?,
                    self.se_ratio.unwrap_or(0.0),
                    self.stride.unwrap_or(1),
                    need(self.out_c, idx, "out_c", op)?,
                );
                p.expansion_base = self.expansion_base;
                if op == "mbconv" {
                    OpKind::MbConv(p)
                } else {
                    OpKind::FusedMbConv(p)
                }
            }
            "space_to_depth" => {
                forbid(&self.expansion, idx, "expansion", op)?;
                forbid(&self.se_ratio, idx, "se_ratio", op)?;
                forbid(&self.out_c, idx, "out_c", op)?;
                let block = need(self.kernel, idx, "kernel", op)?;
                if let Some(s) = self.stride {
                    if s != block {
                        return Err(IrError::Parse(format!(
                            "stages[{idx}]: space_to_depth stride {s} must equal kernel {block}"
                        )));
                    }
                }
                OpKind::SpaceToDepthConv { block }
            }
            "pool" => OpKind::Pool,
            "fc" => OpKind::Fc {
                out_features: need(self.out_c, idx, "out_c", op)?,
            },
            "head" => OpKind::Head {
                out_c: need(self.out_c, idx, "out_c", op)?,
            },
            other => {
                return Err(IrError::Parse(format!(
                    "stages[{idx}].op: unknown op '{other}'"
                )))
            }
        };
        Ok(Stage {
            op: kind,
            repeats: self.repeats,
            activation: self.activation,
            scalable: self.scalable,
        })
    }

    pub fn from_stage(stage: &Stage) -> Self {
        let mut r = StageRecord {
            op: stage.op.wire_name().to_string(),
            kernel: None,
            stride: None,
            out_c: None,
            expansion: None,
            se_ratio: None,
            repeats: stage.repeats,
            activation: stage.activation,
            scalable: stage.scalable,
            expansion_base: None,
        };
        match stage.op {
            OpKind::Stem { kernel, stride, out_c }
            | OpKind::Conv { kernel, stride, out_c }
            | OpKind::DepthwiseSepConv { kernel, stride, out_c } => {
                r.kernel = Some(kernel);
                r.stride = Some(stride);
                r.out_c = Some(out_c);
            }
            OpKind::MbConv(p) | OpKind::FusedMbConv(p) => {
                r.kernel = Some(p.kernel);
                r.stride = Some(p.stride);
                r.out_c = Some(p.out_c);
                r.expansion = Some(p.expansion);
                r.se_ratio = Some(p.se_ratio);
                r.expansion_base = p.expansion_base;
            }
            OpKind::SpaceToDepthConv { block } => {
                r.kernel = Some(block);
                r.stride = Some(block);
            }
            OpKind::Pool => {}
            OpKind::Fc { out_features } => r.out_c = Some(out_features),
            OpKind::Head { out_c } => r.out_c = Some(out_c),
        }
        r
    }
}

impl WireModel {
    pub fn into_spec(self) -> Result<ModelSpec, IrError> {
        let stages = self
            .stages
            .iter()
            .enumerate()
            .map(|(i, s)| s.to_stage(i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ModelSpec {
            name: self.name,
            input_resolution: self.input_resolution,
            stages,
        })
    }

    pub fn from_spec(spec: &ModelSpec) -> Self {
        WireModel {
            name: spec.name.clone(),
            input_resolution: spec.input_resolution,
            stages: spec.stages.iter().map(StageRecord::from_stage).collect(),
        }
    }
}

/// Parses a model document. Syntax errors carry serde's line/column position.
pub fn model_from_json(text: &str) -> Result<ModelSpec, IrError> {
    let wire: WireModel = serde_json::from_str(text).map_err(|e| IrError::Parse(e.to_string()))?;
    wire.into_spec()
}

pub fn model_to_json(spec: &ModelSpec) -> String {
    serde_json::to_string_pretty(&WireModel::from_spec(spec)).expect("model serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch_ir::{build_efficientnet_x_b0, efficientnet_b0, Target};

    #[test]
    fn builtin_models_round_trip() {
        for spec in [
            build_efficientnet_x_b0(Target::Tpu),
            build_efficientnet_x_b0(Target::Gpu),
            efficientnet_b0(),
        ] {
            let text = model_to_json(&spec);
            assert_eq!(model_from_json(&text).unwrap(), spec);
        }
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = r#"{"name":"m","input_resolution":8,"stages":[
            {"op":"stem","kernel":3,"stride":1,"out_c":8,"activation":"relu","colour":1}]}"#;
        let err = model_from_json(text).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn missing_field_names_the_stage() {
        let text = r#"{"name":"m","input_resolution":8,"stages":[
            {"op":"mbconv","kernel":3,"out_c":8,"activation":"relu"}]}"#;
        let err = model_from_json(text).unwrap_err().to_string();
        assert!(err.contains("stages[0]") && err.contains("expansion"), "{err}");
    }

    #[test]
    fn unknown_op_is_rejected() {
        let text = r#"{"name":"m","input_resolution":8,"stages":[
            {"op":"transformer","activation":"relu"}]}"#;
        assert!(matches!(model_from_json(text), Err(IrError::Parse(_))));
    }
}
