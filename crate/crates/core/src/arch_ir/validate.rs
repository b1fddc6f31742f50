use super::types::{ModelSpec, OpKind, TensorShape, DEFAULT_BATCH, INPUT_CHANNELS};
use super::IrError;

/// Shapes seen by one repeat of a stage.
#[derive(Clone, Debug, PartialEq)]
pub struct RepeatShape {
    /// The op as executed by this repeat (stride 1 after the first).
    pub op: OpKind,
    pub input: TensorShape,
    pub output: TensorShape,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedStage {
    pub index: usize,
    pub input: TensorShape,
    pub output: TensorShape,
    pub repeats: Vec<RepeatShape>,
}

/// A spec whose shape propagation succeeded.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedModel {
    pub spec: ModelSpec,
    pub input: TensorShape,
    pub stages: Vec<ValidatedStage>,
}

impl ValidatedModel {
    pub fn output(&self) -> TensorShape {
        self.stages.last().map(|s| s.output).unwrap_or(self.input)
    }

    pub fn batch(&self) -> u32 {
        self.input.n
    }
}

fn ceil_div(a: u32, b: u32) -> u32 {
    a.div_ceil(b)
}

/// Output shape of `op` applied to `input`. Strided convolutions pad ("SAME"),
/// so only space-to-depth requires exact divisibility.
pub fn propagate_shape(op: &OpKind, input: TensorShape, stage: usize) -> Result<TensorShape, IrError> {
    let TensorShape { n, h, w, c } = input;
    let out = match *op {
        OpKind::Stem { stride, out_c, .. }
        | OpKind::Conv { stride, out_c, .. }
        | OpKind::DepthwiseSepConv { stride, out_c, .. } => {
            TensorShape::new(n, ceil_div(h, stride), ceil_div(w, stride), out_c)
        }
        OpKind::MbConv(p) | OpKind::FusedMbConv(p) => {
            TensorShape::new(n, ceil_div(h, p.stride), ceil_div(w, p.stride), p.out_c)
        }
        OpKind::SpaceToDepthConv { block } => {
            for (dim, size) in [("height", h), ("width", w)] {
                if size % block != 0 {
                    return Err(IrError::NonDivisibleStride {
                        stage,
                        dim,
                        size,
                        stride: block,
                    });
                }
            }
            TensorShape::new(n, h / block, w / block, c * block * block)
        }
        OpKind::Pool => TensorShape::new(n, 1, 1, c),
        OpKind::Fc { out_features } => {
            if h != 1 || w != 1 {
                return Err(IrError::InvalidStage {
                    stage,
                    reason: format!("fc expects a pooled 1x1 input, got {h}x{w}"),
                });
            }
            TensorShape::new(n, 1, 1, out_features)
        }
        OpKind::Head { .. } => TensorShape::new(n, 1, 1, op.out_channels(c)),
    };
    Ok(out)
}

fn check_stage_rules(spec: &ModelSpec) -> Result<(), IrError> {
    for (i, st) in spec.stages.iter().enumerate() {
        st.op
            .check_params()
            .map_err(|reason| IrError::InvalidStage { stage: i, reason })?;
        if i > 0 && matches!(st.op, OpKind::Stem { .. }) {
            return Err(IrError::InvalidStage {
                stage: i,
                reason: "stem is only allowed as the first stage".into(),
            });
        }
        if st.repeats == 0 {
            return Err(IrError::InvalidStage {
                stage: i,
                reason: "repeats must be >= 1".into(),
            });
        }
        if st.scalable && st.op.is_fixed_single() {
            return Err(IrError::InvalidStage {
                stage: i,
                reason: format!("op '{}' cannot be depth-scalable", st.op.wire_name()),
            });
        }
        if !st.scalable && st.repeats != 1 {
            return Err(IrError::FixedStageRepeats {
                stage: i,
                op: st.op.wire_name(),
                repeats: st.repeats,
            });
        }
    }
    Ok(())
}

fn propagate(spec: &ModelSpec, input: TensorShape) -> Result<ValidatedModel, IrError> {
    if spec.stages.is_empty() {
        return Err(IrError::EmptyModel);
    }
    if !input.is_valid() {
        return Err(IrError::InvalidShape(input));
    }
    check_stage_rules(spec)?;
    let mut cur = input;
    let mut stages = Vec::with_capacity(spec.stages.len());
    for (i, st) in spec.stages.iter().enumerate() {
        let stage_in = cur;
        let mut reps = Vec::with_capacity(st.repeats as usize);
        for r in 0..st.repeats {
            let op = if r == 0 { st.op } else { st.op.without_stride() };
            let out = propagate_shape(&op, cur, i)?;
            reps.push(RepeatShape {
                op,
                input: cur,
                output: out,
            });
            cur = out;
        }
        stages.push(ValidatedStage {
            index: i,
            input: stage_in,
            output: cur,
            repeats: reps,
        });
    }
    Ok(ValidatedModel {
        spec: spec.clone(),
        input,
        stages,
    })
}

/// Validates a full network (stem first) at the default batch of 128.
pub fn validate_model(spec: &ModelSpec) -> Result<ValidatedModel, IrError> {
    validate_model_with_batch(spec, DEFAULT_BATCH)
}

pub fn validate_model_with_batch(spec: &ModelSpec, batch: u32) -> Result<ValidatedModel, IrError> {
    if spec.stages.is_empty() {
        return Err(IrError::EmptyModel);
    }
    if spec.input_resolution == 0 {
        return Err(IrError::InvalidResolution(0));
    }
    if !matches!(spec.stages[0].op, OpKind::Stem { .. }) {
        return Err(IrError::FirstStageNotStem {
            found: spec.stages[0].op.wire_name(),
        });
    }
    let r = spec.input_resolution;
    propagate(spec, TensorShape::new(batch, r, r, INPUT_CHANNELS))
}

/// Validates a stage list starting from an arbitrary input shape. No stem is required,
/// `input_resolution` is ignored.
pub fn validate_fragment(spec: &ModelSpec, input: TensorShape) -> Result<ValidatedModel, IrError> {
    propagate(spec, input)
}
