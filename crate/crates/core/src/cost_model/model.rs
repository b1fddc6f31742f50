use serde::Serialize;

use super::op::{accumulate, cost_from_work, op_class, Geo, Mode, OpCost};
use super::profile::HardwareProfile;
use crate::arch_ir::{
    validate_model_with_batch, IrError, ModelSpec, RelaxedModel, ValidatedModel, INPUT_CHANNELS,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageCost {
    pub index: usize,
    pub label: String,
    pub op: &'static str,
    pub repeats: u32,
    /// Summed over all repeats.
    pub cost: OpCost,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelCost {
    pub name: String,
    pub profile: String,
    pub batch: u32,
    pub stages: Vec<StageCost>,
    pub total_flops: f64,
    pub total_bytes: f64,
    pub aggregate_intensity: f64,
    /// Seconds for the whole batch.
    pub total_latency: f64,
    /// Achieved rate over the roofline-ideal rate at the aggregate intensity.
    pub achieved_efficiency: f64,
}

impl ModelCost {
    pub fn flops_per_image(&self) -> f64 {
        if self.batch == 0 {
            0.0
        } else {
            self.total_flops / self.batch as f64
        }
    }

    /// Achieved multiply-adds per second.
    pub fn achieved_rate(&self) -> f64 {
        if self.total_latency > 0.0 {
            self.total_flops / self.total_latency
        } else {
            0.0
        }
    }

    pub fn total(&self) -> OpCost {
        OpCost::sum(self.stages.iter().map(|s| (&s.cost, 1.0)))
    }

    fn from_stages(name: String, profile: &HardwareProfile, batch: u32, stages: Vec<StageCost>) -> Self {
        let total = OpCost::sum(stages.iter().map(|s| (&s.cost, 1.0)));
        let aggregate_intensity = total.intensity;
        let achieved_efficiency = if total.latency > 0.0 && aggregate_intensity > 0.0 {
            total.flops / (total.latency * profile.attainable(aggregate_intensity))
        } else {
            0.0
        };
        ModelCost {
            name,
            profile: profile.name.clone(),
            batch,
            stages,
            total_flops: total.flops,
            total_bytes: total.mem_bytes,
            aggregate_intensity,
            total_latency: total.latency,
            achieved_efficiency,
        }
    }
}

/// Per-stage roofline cost of a validated model; ops execute back to back.
pub fn model_cost(model: &ValidatedModel, profile: &HardwareProfile) -> ModelCost {
    let stages = model
        .stages
        .iter()
        .map(|vs| {
            let spec_stage = &model.spec.stages[vs.index];
            let costs: Vec<OpCost> = vs
                .repeats
                .iter()
                .map(|r| {
                    let (work, _) = accumulate(
                        &r.op,
                        Geo::from_shape(r.input),
                        1.0,
                        spec_stage.activation,
                        Mode::Exact,
                        profile,
                    );
                    cost_from_work(&work, op_class(&r.op), profile)
                })
                .collect();
            StageCost {
                index: vs.index,
                label: spec_stage.op.label(),
                op: spec_stage.op.wire_name(),
                repeats: vs.repeats.len() as u32,
                cost: OpCost::sum(costs.iter().map(|c| (c, 1.0))),
            }
        })
        .collect();
    ModelCost::from_stages(model.spec.name.clone(), profile, model.batch(), stages)
}

/// Multiply-adds per image; independent of any hardware profile.
pub fn flops_per_image(spec: &ModelSpec) -> Result<f64, IrError> {
    let v = validate_model_with_batch(spec, 1)?;
    // Fusion only affects traffic, so any profile gives the same count.
    let p = HardwareProfile::cpu_like();
    Ok(v.stages
        .iter()
        .flat_map(|s| {
            let act = spec.stages[s.index].activation;
            s.repeats.iter().map(move |r| (r, act))
        })
        .map(|(r, act)| accumulate(&r.op, Geo::from_shape(r.input), 1.0, act, Mode::Exact, &p).0)
        .map(|w| w.mat + w.dw)
        .sum())
}

/// Cost of a continuously scaled model: fractional resolution, widths and repeats.
pub fn relaxed_cost(model: &RelaxedModel, profile: &HardwareProfile, batch: u32) -> ModelCost {
    let r = model.resolution();
    let mut g = Geo {
        n: batch as f64,
        h: r,
        w: r,
        c: INPUT_CHANNELS as f64,
    };
    let mut stages = Vec::new();
    for (index, st) in model.stages().into_iter().enumerate() {
        let (w1, g1) = accumulate(&st.op, g, st.width, st.activation, Mode::Relaxed, profile);
        let class = op_class(&st.op);
        let first = cost_from_work(&w1, class, profile);
        g = g1;
        let cost = if st.repeats > 1.0 {
            let rest_op = st.op.without_stride();
            let (w2, g2) = accumulate(&rest_op, g, st.width, st.activation, Mode::Relaxed, profile);
            g = g2;
            let rest = cost_from_work(&w2, class, profile);
            OpCost::sum([(&first, 1.0), (&rest, st.repeats - 1.0)])
        } else {
            first
        };
        stages.push(StageCost {
            index,
            label: st.op.label(),
            op: st.op.wire_name(),
            repeats: st.repeats.round() as u32,
            cost,
        });
    }
    ModelCost::from_stages(model.base.name.clone(), profile, batch, stages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch_ir::{
        build_breakdown_variants, build_efficientnet_x_b0, validate_model, ModelSpec, Target,
        TensorShape,
    };

    #[test]
    fn flops_anchors() {
        let p = HardwareProfile::tpu_v3_like();
        let per_image: Vec<f64> = build_breakdown_variants()
            .iter()
            .map(|m| model_cost(&validate_model(m).unwrap(), &p).flops_per_image())
            .collect();
        assert!((per_image[0] / 0.39e9 - 1.0).abs() < 0.03, "{}", per_image[0]);
        assert!((per_image[1] / 0.47e9 - 1.0).abs() < 0.05, "{}", per_image[1]);
        assert!((per_image[3] / 0.91e9 - 1.0).abs() < 0.05, "{}", per_image[3]);
    }

    #[test]
    fn totals_are_sums_of_stages() {
        let p = HardwareProfile::gpu_v100_like();
        let c = model_cost(&validate_model(&build_efficientnet_x_b0(Target::Gpu)).unwrap(), &p);
        let w: f64 = c.stages.iter().map(|s| s.cost.flops).sum();
        let l: f64 = c.stages.iter().map(|s| s.cost.latency).sum();
        assert!((w / c.total_flops - 1.0).abs() < 1e-12);
        assert!((l / c.total_latency - 1.0).abs() < 1e-12);
        assert!(c.aggregate_intensity > 0.0);
        assert!(c.achieved_efficiency > 0.0 && c.achieved_efficiency <= 1.0);
    }

    #[test]
    fn per_image_flops_matches_batched_cost() {
        let spec = build_efficientnet_x_b0(Target::Tpu);
        let c = model_cost(&validate_model(&spec).unwrap(), &HardwareProfile::tpu_v3_like());
        assert!((flops_per_image(&spec).unwrap() / c.flops_per_image() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_model_costs_nothing() {
        let v = ValidatedModel {
            spec: ModelSpec::new("empty", 8, vec![]),
            input: TensorShape::new(1, 8, 8, 3),
            stages: vec![],
        };
        let c = model_cost(&v, &HardwareProfile::cpu_like());
        assert_eq!((c.total_flops, c.total_bytes, c.total_latency), (0.0, 0.0, 0.0));
    }

    #[test]
    fn relaxed_matches_exact_at_identity() {
        let p = HardwareProfile::tpu_v3_like();
        let spec = build_efficientnet_x_b0(Target::Tpu);
        let exact = model_cost(&validate_model(&spec).unwrap(), &p);
        let relaxed = relaxed_cost(&RelaxedModel::new(spec), &p, 128);
        assert!((exact.total_flops / relaxed.total_flops - 1.0).abs() < 1e-12);
        assert!((exact.total_latency / relaxed.total_latency - 1.0).abs() < 1e-12);
    }
}
