use std::fmt;

use serde::{Deserialize, Serialize};

use super::IrError;

/// Channel count of the network input (RGB).
pub const INPUT_CHANNELS: u32 = 3;

/// Output width of the classifier inside a [`OpKind::Head`] stage.
pub const HEAD_CLASSES: u32 = 1000;

/// Batch size used for latency evaluation unless a caller overrides it.
pub const DEFAULT_BATCH: u32 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    Swish,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 2] = [ActivationKind::Relu, ActivationKind::Swish];

    /// Vector-unit operations per activated element.
    pub fn ops_per_element(self) -> f64 {
        match self {
            ActivationKind::Relu => 1.0,
            ActivationKind::Swish => 4.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Swish => "swish",
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// NHWC activation tensor shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorShape {
    pub n: u32,
    pub h: u32,
    pub w: u32,
    pub c: u32,
}

impl TensorShape {
    pub fn new(n: u32, h: u32, w: u32, c: u32) -> Self {
        Self { n, h, w, c }
    }

    pub fn elements(&self) -> u64 {
        self.n as u64 * self.h as u64 * self.w as u64 * self.c as u64
    }

    pub fn is_valid(&self) -> bool {
        self.n >= 1 && self.h >= 1 && self.w >= 1 && self.c >= 1
    }
}

impl fmt::Display for TensorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}x{}", self.n, self.h, self.w, self.c)
    }
}

/// Parameters shared by the two inverted-bottleneck block flavours.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub kernel: u32,
    pub expansion: u32,
    pub se_ratio: f64,
    pub stride: u32,
    pub out_c: u32,
    /// Channel count the expansion ratio multiplies on the first repeat.
    /// `None` means the actual incoming channel count.
    pub expansion_base: Option<u32>,
}

impl BlockParams {
    pub fn new(kernel: u32, expansion: u32, se_ratio: f64, stride: u32, out_c: u32) -> Self {
        Self {
            kernel,
            expansion,
            se_ratio,
            stride,
            out_c,
            expansion_base: None,
        }
    }

    pub fn with_expansion_base(mut self, base: u32) -> Self {
        self.expansion_base = Some(base);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OpKind {
    Stem { kernel: u32, stride: u32, out_c: u32 },
    Conv { kernel: u32, stride: u32, out_c: u32 },
    DepthwiseSepConv { kernel: u32, stride: u32, out_c: u32 },
    MbConv(BlockParams),
    FusedMbConv(BlockParams),
    /// n x n convolution with stride n: H x W x C -> H/n x W/n x C*n^2.
    SpaceToDepthConv { block: u32 },
    /// Global average pool.
    Pool,
    Fc { out_features: u32 },
    /// 1x1 conv, global pool and a [`HEAD_CLASSES`]-way classifier.
    Head { out_c: u32 },
}

impl OpKind {
    pub fn wire_name(&self) -> &'static str {
        match self {
            OpKind::Stem { .. } => "stem",
            OpKind::Conv { .. } => "conv",
            OpKind::DepthwiseSepConv { .. } => "dwsep",
            OpKind::MbConv(_) => "mbconv",
            OpKind::FusedMbConv(_) => "fused_mbconv",
            OpKind::SpaceToDepthConv { .. } => "space_to_depth",
            OpKind::Pool => "pool",
            OpKind::Fc { .. } => "fc",
            OpKind::Head { .. } => "head",
        }
    }

    /// Short human label, e.g. `MBConv6 k5x5`.
    pub fn label(&self) -> String {
        match self {
            OpKind::Stem { kernel, .. } => format!("Stem k{kernel}x{kernel}"),
            OpKind::Conv { kernel, .. } => format!("Conv{kernel}x{kernel}"),
            OpKind::DepthwiseSepConv { kernel, .. } => format!("DWSep k{kernel}x{kernel}"),
            OpKind::MbConv(p) => format!("MBConv{} k{}x{}", p.expansion, p.kernel, p.kernel),
            OpKind::FusedMbConv(p) => {
                format!("FusedMBConv{} k{}x{}", p.expansion, p.kernel, p.kernel)
            }
            OpKind::SpaceToDepthConv { block } => format!("SpaceToDepth{block}x{block}"),
            OpKind::Pool => "Pool".to_string(),
            OpKind::Fc { .. } => "FC".to_string(),
            OpKind::Head { .. } => "Conv1x1&Pool&FC".to_string(),
        }
    }

    pub fn stride(&self) -> u32 {
        match *self {
            OpKind::Stem { stride, .. }
            | OpKind::Conv { stride, .. }
            | OpKind::DepthwiseSepConv { stride, .. } => stride,
            OpKind::MbConv(p) | OpKind::FusedMbConv(p) => p.stride,
            OpKind::SpaceToDepthConv { block } => block,
            OpKind::Pool | OpKind::Fc { .. } | OpKind::Head { .. } => 1,
        }
    }

    /// Same op with the spatial stride forced to 1, used for repeats after the first.
    pub fn without_stride(&self) -> OpKind {
        match *self {
            OpKind::Stem { kernel, out_c, .. } => OpKind::Stem { kernel, stride: 1, out_c },
            OpKind::Conv { kernel, out_c, .. } => OpKind::Conv { kernel, stride: 1, out_c },
            OpKind::DepthwiseSepConv { kernel, out_c, .. } => {
                OpKind::DepthwiseSepConv { kernel, stride: 1, out_c }
            }
            OpKind::MbConv(p) => OpKind::MbConv(BlockParams {
                stride: 1,
                expansion_base: None,
                ..p
            }),
            OpKind::FusedMbConv(p) => OpKind::FusedMbConv(BlockParams {
                stride: 1,
                expansion_base: None,
                ..p
            }),
            other => other,
        }
    }

    /// Output channels given the incoming channel count.
    pub fn out_channels(&self, in_c: u32) -> u32 {
        match *self {
            OpKind::Stem { out_c, .. }
            | OpKind::Conv { out_c, .. }
            | OpKind::DepthwiseSepConv { out_c, .. } => out_c,
            OpKind::Head { .. } => HEAD_CLASSES,
            OpKind::MbConv(p) | OpKind::FusedMbConv(p) => p.out_c,
            OpKind::SpaceToDepthConv { block } => in_c * block * block,
            OpKind::Pool => in_c,
            OpKind::Fc { out_features } => out_features,
        }
    }

    /// Layers of this kind contribute to the reported network depth.
    pub fn counts_toward_depth(&self) -> bool {
        !matches!(
            self,
            OpKind::Stem { .. }
                | OpKind::SpaceToDepthConv { .. }
                | OpKind::Head { .. }
                | OpKind::Pool
                | OpKind::Fc { .. }
        )
    }

    /// Stem, head and reshaping stages never repeat and never scale in depth.
    pub fn is_fixed_single(&self) -> bool {
        !self.counts_toward_depth()
    }

    pub(crate) fn check_params(&self) -> Result<(), String> {
        fn kernel_ok(k: u32) -> Result<(), String> {
            if matches!(k, 1 | 2 | 3 | 5) {
                Ok(())
            } else {
                Err(format!("kernel {k} not in {{1,2,3,5}}"))
            }
        }
        fn stride_ok(s: u32) -> Result<(), String> {
            if s >= 1 {
                Ok(())
            } else {
                Err("stride must be >= 1".into())
            }
        }
        fn chan_ok(c: u32) -> Result<(), String> {
            if c >= 1 {
                Ok(())
            } else {
                Err("channel count must be >= 1".into())
            }
        }
        match *self {
            OpKind::Stem { kernel, stride, out_c }
            | OpKind::Conv { kernel, stride, out_c }
            | OpKind::DepthwiseSepConv { kernel, stride, out_c } => {
                kernel_ok(kernel)?;
                stride_ok(stride)?;
                chan_ok(out_c)
            }
            OpKind::MbConv(p) | OpKind::FusedMbConv(p) => {
                kernel_ok(p.kernel)?;
                stride_ok(p.stride)?;
                chan_ok(p.out_c)?;
                if !matches!(p.expansion, 1 | 6) {
                    return Err(format!("expansion {} not in {{1,6}}", p.expansion));
                }
                if !(0.0..=1.0).contains(&p.se_ratio) {
                    return Err(format!("se_ratio {} outside [0,1]", p.se_ratio));
                }
                if let Some(b) = p.expansion_base {
                    chan_ok(b)?;
                }
                Ok(())
            }
            OpKind::SpaceToDepthConv { block } => {
                if block >= 2 {
                    Ok(())
                } else {
                    Err(format!("space-to-depth block {block} must be >= 2"))
                }
            }
            OpKind::Pool => Ok(()),
            OpKind::Fc { out_features } => chan_ok(out_features),
            OpKind::Head { out_c } => chan_ok(out_c),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub op: OpKind,
    pub repeats: u32,
    pub activation: ActivationKind,
    /// Whether `repeats` participates in depth scaling.
    pub scalable: bool,
}

impl Stage {
    pub fn new(op: OpKind, repeats: u32, activation: ActivationKind) -> Self {
        Self {
            op,
            repeats,
            activation,
            scalable: false,
        }
    }

    pub fn scalable(mut self) -> Self {
        self.scalable = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub input_resolution: u32,
    pub stages: Vec<Stage>,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>, input_resolution: u32, stages: Vec<Stage>) -> Self {
        Self {
            name: name.into(),
            input_resolution,
            stages,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn scalable_mask(&self) -> Vec<bool> {
        self.stages.iter().map(|s| s.scalable).collect()
    }
}

/// Depth, width and resolution bases of a compound-scaled family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ScalingCoeffs {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, IrError> {
        let c = Self { alpha, beta, gamma };
        c.check()?;
        Ok(c)
    }

    pub(crate) fn check(&self) -> Result<(), IrError> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !v.is_finite() || v < 1.0 {
                return Err(IrError::InvalidCoeffs(format!("{name} = {v} must be >= 1")));
            }
        }
        Ok(())
    }

    pub fn identity() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.alpha == 1.0 && self.beta == 1.0 && self.gamma == 1.0
    }

    pub fn dims(&self, phi: f64) -> ScaledDims {
        ScaledDims {
            d: self.alpha.powf(phi),
            w_mult: self.beta.powf(phi),
            r: self.gamma.powf(phi),
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    /// Total-FLOPs growth factor of one unit of phi: alpha * beta^2 * gamma^2.
    pub fn flops_factor(&self) -> f64 {
        self.alpha * self.beta * self.beta * self.gamma * self.gamma
    }
}

impl fmt::Display for ScalingCoeffs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.alpha, self.beta, self.gamma)
    }
}

/// Multipliers produced by a coefficient triplet at a particular phi.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledDims {
    pub d: f64,
    pub w_mult: f64,
    pub r: f64,
}

impl ScaledDims {
    pub fn identity() -> Self {
        Self {
            d: 1.0,
            w_mult: 1.0,
            r: 1.0,
        }
    }

    pub fn compose(&self, other: &ScaledDims) -> ScaledDims {
        ScaledDims {
            d: self.d * other.d,
            w_mult: self.w_mult * other.w_mult,
            r: self.r * other.r,
        }
    }
}
