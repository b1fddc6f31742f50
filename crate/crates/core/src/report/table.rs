use serde_json::{Map, Number, Value};

use crate::cost_model::ModelCost;
use crate::lacs::{CoeffSearchResult, EvalStatus, FamilyRow, SpeedupSummary};
use crate::nas_lite::{ArchiveEntry, Candidate, EvalRecord};

/// Rounds to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

/// Shortest text that parses back to `sig6(x)`.
pub fn fmt6(x: f64) -> String {
    let v = sig6(x);
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => fmt6(*v),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Num(v) => Number::from_f64(sig6(*v)).map(Value::Number).unwrap_or(Value::Null),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map(Into::into).unwrap_or(Cell::Empty)
    }
}

/// Rows rendered identically to CSV and JSON; numbers carry 6 significant digits
/// in both, counts stay integers.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn to_json_value(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let m: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect();
                    Value::Object(m)
                })
                .collect(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("json value serializes") + "\n"
    }
}

/// Per-stage costs: W and Q summed over repeats.
pub fn stage_table(cost: &ModelCost) -> Table {
    let mut t = Table::new(&["stage", "op", "repeats", "W", "Q_bytes", "I", "regime", "latency_s"]);
    for s in &cost.stages {
        t.push(vec![
            s.index.into(),
            s.label.clone().into(),
            s.repeats.into(),
            (s.cost.flops.round() as u64).into(),
            (s.cost.mem_bytes.round() as u64).into(),
            s.cost.intensity.into(),
            s.cost.regime.as_str().into(),
            s.cost.latency.into(),
        ]);
    }
    t
}

/// One-row model summary.
pub fn summary_table(cost: &ModelCost) -> Table {
    let mut t = Table::new(&[
        "model",
        "profile",
        "batch",
        "flops_per_image",
        "W",
        "Q_bytes",
        "I",
        "memory_bound_share",
        "latency_s",
        "achieved_efficiency",
    ]);
    let mem: f64 = cost
        .stages
        .iter()
        .filter(|s| s.cost.regime == crate::cost_model::Regime::MemoryBound)
        .map(|s| s.cost.latency)
        .sum();
    t.push(vec![
        cost.name.clone().into(),
        cost.profile.clone().into(),
        cost.batch.into(),
        (cost.flops_per_image().round() as u64).into(),
        (cost.total_flops.round() as u64).into(),
        (cost.total_bytes.round() as u64).into(),
        cost.aggregate_intensity.into(),
        (if cost.total_latency > 0.0 { mem / cost.total_latency } else { 0.0 }).into(),
        cost.total_latency.into(),
        cost.achieved_efficiency.into(),
    ]);
    t
}

pub fn family_table(rows: &[FamilyRow]) -> Table {
    let mut t = Table::new(&["level", "phi", "depth", "resolution", "width_mult", "flops", "I", "latency_s"]);
    for r in rows {
        t.push(vec![
            r.level.clone().into(),
            r.phi.into(),
            r.depth.into(),
            r.resolution.into(),
            r.width_mult.into(),
            r.flops.into(),
            r.intensity.into(),
            r.latency_s.into(),
        ]);
    }
    t
}

/// Every evaluated triplet of a coefficient search.
pub fn search_table(res: &CoeffSearchResult) -> Table {
    let mut t = Table::new(&[
        "round", "alpha", "beta", "gamma", "phi", "accuracy", "latency_s", "reward", "status",
    ]);
    for e in &res.evaluated {
        let status = match &e.status {
            EvalStatus::Ok => "ok".to_string(),
            EvalStatus::Skipped(why) => format!("skipped: {why}"),
        };
        t.push(vec![
            e.round.into(),
            e.coeffs.alpha.into(),
            e.coeffs.beta.into(),
            e.coeffs.gamma.into(),
            e.phi.into(),
            e.accuracy.into(),
            e.latency.into(),
            e.reward.into(),
            status.into(),
        ]);
    }
    t
}

pub fn speedup_table(s: &SpeedupSummary) -> Table {
    let mut t = Table::new(&["level", "latency_a_s", "latency_b_s", "ratio"]);
    for r in &s.rows {
        t.push(vec![
            r.level.clone().into(),
            r.latency_a_s.into(),
            r.latency_b_s.into(),
            r.ratio.into(),
        ]);
    }
    t
}

/// Compact text form, e.g. `F/swish/k3/e6/se0.25 M/relu/...|s2d=1`.
pub fn candidate_code(c: &Candidate) -> String {
    let stages: Vec<String> = c
        .stages
        .iter()
        .map(|s| {
            let kind = match s.conv_type {
                crate::nas_lite::ConvType::Mbconv => "M",
                crate::nas_lite::ConvType::FusedMbconv => "F",
            };
            format!("{kind}/{}/k{}/e{}/se{}", s.activation.as_str(), s.kernel, s.expansion, s.se_ratio)
        })
        .collect();
    let s2d = c.s2d_position.map(|p| p.to_string()).unwrap_or_else(|| "none".into());
    format!("{}|s2d={s2d}", stages.join(" "))
}

/// The front as printed: points that become dominated or tied once rounded to 6
/// significant digits are dropped, so the rows stay mutually nondominated.
pub fn pareto_table(front: &[ArchiveEntry]) -> Table {
    let mut t = Table::new(&["accuracy", "latency_s", "candidate"]);
    let pts: Vec<(f64, f64)> = front.iter().map(|e| (sig6(e.accuracy), sig6(e.latency_s))).collect();
    for (i, e) in front.iter().enumerate() {
        let hidden = pts.iter().enumerate().any(|(j, &q)| {
            j != i && (crate::nas_lite::dominates(q, pts[i]) || (q == pts[i] && j < i))
        });
        if hidden {
            continue;
        }
        t.push(vec![e.accuracy.into(), e.latency_s.into(), candidate_code(&e.candidate).into()]);
    }
    t
}

pub fn eval_table(log: &[EvalRecord]) -> Table {
    let mut t = Table::new(&["index", "accuracy", "latency_s", "reward", "candidate"]);
    for r in log {
        t.push(vec![
            r.index.into(),
            r.accuracy.into(),
            r.latency_s.into(),
            r.reward.into(),
            candidate_code(&r.candidate).into(),
        ]);
    }
    t
}
