use serde::{Deserialize, Serialize};

use super::profile::{HardwareProfile, OpClass};
use super::CostError;
use crate::arch_ir::{propagate_shape, ActivationKind, OpKind, TensorShape, HEAD_CLASSES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    ComputeBound,
    MemoryBound,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::ComputeBound => "compute_bound",
            Regime::MemoryBound => "memory_bound",
        }
    }
}

/// Cost of one op (or a sum of ops) under a profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OpCost {
    /// Multiply-adds, matrix and depthwise.
    pub flops: f64,
    pub matrix_flops: f64,
    pub depthwise_flops: f64,
    /// Activation, pooling and excite operations on the vector unit.
    pub elementwise_ops: f64,
    pub mem_elems: f64,
    pub mem_bytes: f64,
    /// Ops per byte.
    pub intensity: f64,
    /// Ops per element.
    pub intensity_elems: f64,
    pub matrix_time: f64,
    pub vector_time: f64,
    pub mem_time: f64,
    pub latency: f64,
    pub regime: Regime,
}

impl OpCost {
    pub fn zero() -> Self {
        OpCost {
            flops: 0.0,
            matrix_flops: 0.0,
            depthwise_flops: 0.0,
            elementwise_ops: 0.0,
            mem_elems: 0.0,
            mem_bytes: 0.0,
            intensity: 0.0,
            intensity_elems: 0.0,
            matrix_time: 0.0,
            vector_time: 0.0,
            mem_time: 0.0,
            latency: 0.0,
            regime: Regime::ComputeBound,
        }
    }

    /// Sum of sequentially executed ops; `(cost, count)` pairs. The regime is the
    /// one that accounts for the larger share of latency.
    pub fn sum<'a>(parts: impl IntoIterator<Item = (&'a OpCost, f64)>) -> OpCost {
        let mut t = OpCost::zero();
        let mut mem_bound = 0.0;
        for (c, k) in parts {
            t.flops += c.flops * k;
            t.matrix_flops += c.matrix_flops * k;
            t.depthwise_flops += c.depthwise_flops * k;
            t.elementwise_ops += c.elementwise_ops * k;
            t.mem_elems += c.mem_elems * k;
            t.mem_bytes += c.mem_bytes * k;
            t.matrix_time += c.matrix_time * k;
            t.vector_time += c.vector_time * k;
            t.mem_time += c.mem_time * k;
            t.latency += c.latency * k;
            if c.regime == Regime::MemoryBound {
                mem_bound += c.latency * k;
            }
        }
        if t.mem_bytes > 0.0 {
            t.intensity = t.flops / t.mem_bytes;
            t.intensity_elems = t.flops / t.mem_elems;
        }
        if mem_bound * 2.0 > t.latency {
            t.regime = Regime::MemoryBound;
        }
        t
    }
}

/// Raw work tallies before they are turned into times.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Work {
    pub mat: f64,
    pub dw: f64,
    pub ew: f64,
    pub q: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Integer shapes: padded strides, integer SE width.
    Exact,
    /// Continuous shapes for unrounded scaling.
    Relaxed,
}

impl Mode {
    fn spatial(self, x: f64, s: f64) -> f64 {
        match self {
            Mode::Exact => (x / s).ceil(),
            Mode::Relaxed => x / s,
        }
    }

    fn squeeze(self, ratio: f64, c: f64) -> f64 {
        match self {
            Mode::Exact => (ratio * c - 1e-9).ceil().max(1.0),
            Mode::Relaxed => ratio * c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Geo {
    pub n: f64,
    pub h: f64,
    pub w: f64,
    pub c: f64,
}

impl Geo {
    pub fn from_shape(s: TensorShape) -> Self {
        Geo {
            n: s.n as f64,
            h: s.h as f64,
            w: s.w as f64,
            c: s.c as f64,
        }
    }

    fn plane(&self) -> f64 {
        self.n * self.h * self.w
    }

    fn elems(&self) -> f64 {
        self.plane() * self.c
    }
}

struct Acc<'a> {
    work: Work,
    mode: Mode,
    profile: &'a HardwareProfile,
    act: ActivationKind,
}

impl Acc<'_> {
    fn conv(&mut self, g: Geo, cout: f64, k: f64, s: f64) -> Geo {
        let o = Geo {
            n: g.n,
            h: self.mode.spatial(g.h, s),
            w: self.mode.spatial(g.w, s),
            c: cout,
        };
        self.work.mat += o.plane() * g.c * cout * k * k;
        self.work.q += g.elems() + o.elems() + g.c * cout * k * k;
        o
    }

    fn depthwise(&mut self, g: Geo, k: f64, s: f64) -> Geo {
        let o = Geo {
            n: g.n,
            h: self.mode.spatial(g.h, s),
            w: self.mode.spatial(g.w, s),
            c: g.c,
        };
        self.work.dw += o.plane() * g.c * k * k;
        self.work.q += g.elems() + o.elems() + g.c * k * k;
        o
    }

    fn activate(&mut self, g: Geo) {
        let elems = g.elems();
        self.work.ew += elems * self.act.ops_per_element();
        if !self.profile.is_fused(self.act) {
            self.work.q += 2.0 * elems;
        }
    }

    /// Squeeze-and-excite on `g`: pool, two FCs, channel-wise multiply.
    fn squeeze_excite(&mut self, g: Geo, ratio: f64) {
        if ratio <= 0.0 {
            return;
        }
        let cse = self.mode.squeeze(ratio, g.c);
        self.work.mat += g.n * 2.0 * g.c * cse;
        self.work.q += g.elems() + 2.0 * g.c * cse;
        self.work.ew += 2.0 * g.elems();
    }

    fn global_pool(&mut self, g: Geo) -> Geo {
        self.work.q += g.elems() + g.n * g.c;
        self.work.ew += g.elems();
        Geo { h: 1.0, w: 1.0, ..g }
    }

    fn fc(&mut self, g: Geo, out: f64) -> Geo {
        self.work.mat += g.n * g.c * out;
        self.work.q += g.c * out + g.n * g.c + g.n * out;
        Geo {
            n: g.n,
            h: 1.0,
            w: 1.0,
            c: out,
        }
    }
}

/// Adds the work of `op` on input `g`, channel counts multiplied by `width`.
pub(crate) fn accumulate(
    op: &OpKind,
    g: Geo,
    width: f64,
    act: ActivationKind,
    mode: Mode,
    profile: &HardwareProfile,
) -> (Work, Geo) {
    let mut a = Acc {
        work: Work::default(),
        mode,
        profile,
        act,
    };
    let ch = |c: u32| c as f64 * width;
    let out = match *op {
        OpKind::Stem { kernel, stride, out_c } | OpKind::Conv { kernel, stride, out_c } => {
            let o = a.conv(g, ch(out_c), kernel as f64, stride as f64);
            a.activate(o);
            o
        }
        OpKind::DepthwiseSepConv { kernel, stride, out_c } => {
            let m = a.depthwise(g, kernel as f64, stride as f64);
            a.activate(m);
            let o = a.conv(m, ch(out_c), 1.0, 1.0);
            a.activate(o);
            o
        }
        OpKind::MbConv(p) => {
            let (k, s) = (p.kernel as f64, p.stride as f64);
            let mid = if p.expansion == 1 {
                g
            } else {
                let base = p.expansion_base.map(ch).unwrap_or(g.c);
                let e = a.conv(g, base * p.expansion as f64, 1.0, 1.0);
                a.activate(e);
                e
            };
            let d = a.depthwise(mid, k, s);
            a.activate(d);
            a.squeeze_excite(d, p.se_ratio);
            a.conv(d, ch(p.out_c), 1.0, 1.0)
        }
        OpKind::FusedMbConv(p) => {
            let (k, s) = (p.kernel as f64, p.stride as f64);
            if p.expansion == 1 {
                let o = a.conv(g, ch(p.out_c), k, s);
                a.activate(o);
                a.squeeze_excite(o, p.se_ratio);
                o
            } else {
                let base = p.expansion_base.map(ch).unwrap_or(g.c);
                let e = a.conv(g, base * p.expansion as f64, k, s);
                a.activate(e);
                a.squeeze_excite(e, p.se_ratio);
                a.conv(e, ch(p.out_c), 1.0, 1.0)
            }
        }
        OpKind::SpaceToDepthConv { block } => {
            let n = block as f64;
            let o = a.conv(g, g.c * n * n, n, n);
            a.activate(o);
            o
        }
        OpKind::Pool => a.global_pool(g),
        OpKind::Fc { out_features } => a.fc(g, out_features as f64),
        OpKind::Head { out_c } => {
            let o = a.conv(g, ch(out_c), 1.0, 1.0);
            a.activate(o);
            let p = a.global_pool(o);
            a.fc(p, HEAD_CLASSES as f64)
        }
    };
    (a.work, out)
}

/// Efficiency class that scales the memory term of an op.
pub fn op_class(op: &OpKind) -> OpClass {
    match op {
        OpKind::MbConv(_) | OpKind::DepthwiseSepConv { .. } => OpClass::Depthwise,
        OpKind::Pool => OpClass::Elementwise,
        _ => OpClass::Dense,
    }
}

pub(crate) fn cost_from_work(w: &Work, class: OpClass, profile: &HardwareProfile) -> OpCost {
    let e = &profile.efficiency;
    let bytes = w.q * profile.bytes_per_element as f64;
    let flops = w.mat + w.dw;
    let matrix_time = w.mat / (profile.peak_matrix_ops * e.dense);
    let vector_time = w.dw / (profile.peak_vector_ops * e.depthwise)
        + w.ew / (profile.peak_vector_ops * e.elementwise);
    let mem_time = bytes / (profile.mem_bandwidth_bytes * profile.efficiency_of(class));
    let compute = matrix_time.max(vector_time);
    let latency = compute.max(mem_time);
    OpCost {
        flops,
        matrix_flops: w.mat,
        depthwise_flops: w.dw,
        elementwise_ops: w.ew,
        mem_elems: w.q,
        mem_bytes: bytes,
        intensity: if bytes > 0.0 { flops / bytes } else { 0.0 },
        intensity_elems: if w.q > 0.0 { flops / w.q } else { 0.0 },
        matrix_time,
        vector_time,
        mem_time,
        latency,
        regime: if mem_time > compute {
            Regime::MemoryBound
        } else {
            Regime::ComputeBound
        },
    }
}

/// Cost of a single op on `in_shape` with the stage activation `act`.
pub fn op_cost(
    op: &OpKind,
    in_shape: TensorShape,
    act: ActivationKind,
    profile: &HardwareProfile,
) -> Result<OpCost, CostError> {
    let unsupported = |reason: String| CostError::UnsupportedOp {
        op: op.label(),
        reason,
    };
    if !in_shape.is_valid() {
        return Err(unsupported(format!("invalid input shape {in_shape}")));
    }
    op.check_params().map_err(unsupported)?;
    propagate_shape(op, in_shape, 0).map_err(|e| unsupported(e.to_string()))?;
    let (work, _) = accumulate(op, Geo::from_shape(in_shape), 1.0, act, Mode::Exact, profile);
    Ok(cost_from_work(&work, op_class(op), profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch_ir::BlockParams;
    use crate::cost_model::formulas;

    fn toy_profile(c_max: f64, b: f64, e: f64) -> HardwareProfile {
        let mut p = HardwareProfile::cpu_like();
        p.peak_matrix_ops = c_max;
        p.peak_vector_ops = c_max;
        p.mem_bandwidth_bytes = b;
        p.bytes_per_element = 1;
        p.efficiency.dense = e;
        p
    }

    #[test]
    fn hand_evaluated_memory_bound_op() {
        let p = toy_profile(100.0, 10.0, 0.5);
        let w = Work { mat: 1000.0, q: 500.0, ..Work::default() };
        let c = cost_from_work(&w, OpClass::Dense, &p);
        assert_eq!(c.intensity, 2.0);
        assert_eq!(c.matrix_time, 20.0);
        assert_eq!(c.mem_time, 100.0);
        assert_eq!(c.latency, 100.0);
        assert_eq!(c.regime, Regime::MemoryBound);
    }

    #[test]
    fn hand_evaluated_compute_bound_op() {
        let p = toy_profile(100.0, 1000.0, 0.5);
        let w = Work { mat: 1000.0, q: 500.0, ..Work::default() };
        let c = cost_from_work(&w, OpClass::Dense, &p);
        assert_eq!(c.mem_time, 1.0);
        assert_eq!(c.latency, 20.0);
        assert_eq!(c.regime, Regime::ComputeBound);
    }

    #[test]
    fn same_channel_conv_reduces_to_closed_form() {
        let p = HardwareProfile::tpu_v3_like();
        for (n, h, c, k) in [(1u32, 7u32, 8u32, 3u32), (2, 4, 16, 1), (4, 7, 2, 5)] {
            let op = OpKind::Conv { kernel: k, stride: 1, out_c: c };
            let cost = op_cost(&op, TensorShape::new(n, h, h, c), ActivationKind::Relu, &p).unwrap();
            let (n, h, c, k) = (n as u64, h as u64, c as u64, k as u64);
            assert_eq!(cost.flops as u128, formulas::conv_flops(n, h, h, c, k).unwrap());
            assert_eq!(cost.mem_elems as u128, formulas::conv_mem_elems(n, h, h, c, k).unwrap());
        }
    }

    #[test]
    fn same_channel_dwsep_reduces_to_closed_form() {
        let p = HardwareProfile::tpu_v3_like();
        let op = OpKind::DepthwiseSepConv { kernel: 3, stride: 1, out_c: 8 };
        let cost = op_cost(&op, TensorShape::new(1, 7, 7, 8), ActivationKind::Relu, &p).unwrap();
        assert_eq!(cost.flops, 6664.0);
        assert_eq!(cost.mem_elems, 1704.0);
    }

    #[test]
    fn fused_activation_adds_no_traffic() {
        let gpu = HardwareProfile::gpu_v100_like();
        let op = OpKind::Conv { kernel: 3, stride: 1, out_c: 32 };
        let s = TensorShape::new(8, 14, 14, 32);
        let relu = op_cost(&op, s, ActivationKind::Relu, &gpu).unwrap();
        let swish = op_cost(&op, s, ActivationKind::Swish, &gpu).unwrap();
        let bare = formulas::conv_mem_elems(8, 14, 14, 32, 3).unwrap() as f64;
        assert_eq!(relu.mem_elems, bare);
        assert_eq!(swish.mem_elems, bare + 2.0 * s.elements() as f64);
        assert_eq!(relu.flops, swish.flops);
    }

    #[test]
    fn swish_costs_four_times_relu_on_vector_unit() {
        let tpu = HardwareProfile::tpu_v3_like();
        let op = OpKind::Conv { kernel: 1, stride: 1, out_c: 16 };
        let s = TensorShape::new(1, 4, 4, 16);
        let r = op_cost(&op, s, ActivationKind::Relu, &tpu).unwrap();
        let w = op_cost(&op, s, ActivationKind::Swish, &tpu).unwrap();
        assert_eq!(w.elementwise_ops, 4.0 * r.elementwise_ops);
    }

    #[test]
    fn flops_and_latency_are_not_proportional() {
        let tpu = HardwareProfile::tpu_v3_like();
        let dw = OpKind::MbConv(BlockParams::new(5, 1, 0.0, 1, 32));
        let dense = OpKind::Conv { kernel: 3, stride: 1, out_c: 256 };
        let a = op_cost(&dw, TensorShape::new(128, 112, 112, 32), ActivationKind::Swish, &tpu).unwrap();
        let b = op_cost(&dense, TensorShape::new(128, 14, 14, 256), ActivationKind::Relu, &tpu).unwrap();
        assert!(a.flops < b.flops);
        assert!(a.latency > b.latency);
    }

    #[test]
    fn unsupported_op_is_reported() {
        let p = HardwareProfile::cpu_like();
        let op = OpKind::SpaceToDepthConv { block: 2 };
        let err = op_cost(&op, TensorShape::new(1, 7, 7, 3), ActivationKind::Relu, &p).unwrap_err();
        assert!(matches!(err, CostError::UnsupportedOp { .. }));
    }

    #[test]
    fn sum_recomputes_intensity() {
        let p = HardwareProfile::cpu_like();
        let op = OpKind::Conv { kernel: 3, stride: 1, out_c: 8 };
        let c = op_cost(&op, TensorShape::new(1, 7, 7, 8), ActivationKind::Relu, &p).unwrap();
        let s = OpCost::sum([(&c, 3.0)]);
        assert!((s.intensity - c.intensity).abs() < 1e-12);
        assert_eq!(s.latency, 3.0 * c.latency);
    }
}
