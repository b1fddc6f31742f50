//! Coefficient search over a lattice with local refinement.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_phi_with, rounded_model, spec_latency, FitOptions};
use super::reward::{reward, RewardConfig};
use super::surrogate::AccuracySurrogate;
use super::LacsError;
use crate::arch_ir::{ModelSpec, RoundingPolicy, ScalingCoeffs};
use crate::cost_model::{flops_per_image, HardwareProfile};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, step: f64) -> Self {
        Self { min, max, step }
    }

    pub fn single(v: f64) -> Self {
        Self { min: v, max: v, step: 1.0 }
    }

    fn check(&self, axis: &str) -> Result<(), LacsError> {
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return Err(LacsError::InvalidGrid(format!("{axis}: non-finite bound")));
        }
        if self.min < 1.0 {
            return Err(LacsError::InvalidGrid(format!("{axis}: min {} is below 1", self.min)));
        }
        if self.step <= 0.0 {
            return Err(LacsError::InvalidGrid(format!("{axis}: step must be > 0")));
        }
        if self.max < self.min {
            return Err(LacsError::EmptyGrid);
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| snap(self.min + i as f64 * self.step)).collect()
    }
}

/// Lattice values are kept on a 1e-9 grid so that refinement reproduces earlier points.
fn snap(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alpha: AxisRange,
    pub beta: AxisRange,
    pub gamma: AxisRange,
    /// Rounds of 3x3x3 search at half the previous step around the incumbent.
    pub refinement_rounds: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            alpha: AxisRange::new(1.0, 1.5, 0.05),
            beta: AxisRange::new(1.0, 1.5, 0.05),
            gamma: AxisRange::new(1.0, 1.3, 0.05),
            refinement_rounds: 2,
        }
    }
}

impl GridSpec {
    pub fn singleton(c: ScalingCoeffs) -> Self {
        Self {
            alpha: AxisRange::single(c.alpha),
            beta: AxisRange::single(c.beta),
            gamma: AxisRange::single(c.gamma),
            refinement_rounds: 0,
        }
    }

    pub fn coarse_only(mut self) -> Self {
        self.refinement_rounds = 0;
        self
    }

    pub fn check(&self) -> Result<(), LacsError> {
        self.alpha.check("alpha")?;
        self.beta.check("beta")?;
        self.gamma.check("gamma")
    }

    /// Phase-1 lattice in lexicographic order.
    pub fn lattice(&self) -> Result<Vec<ScalingCoeffs>, LacsError> {
        self.check()?;
        let mut out = Vec::new();
        for &a in &self.alpha.points() {
            for &b in &self.beta.points() {
                for &g in &self.gamma.points() {
                    out.push(ScalingCoeffs { alpha: a, beta: b, gamma: g });
                }
            }
        }
        if out.is_empty() {
            return Err(LacsError::EmptyGrid);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "reason")]
pub enum EvalStatus {
    Ok,
    Skipped(String),
}

/// One scored triplet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub coeffs: ScalingCoeffs,
    /// 0 for the coarse lattice, k for the k-th refinement round.
    pub round: u32,
    pub phi: Option<f64>,
    pub accuracy: Option<f64>,
    pub latency: Option<f64>,
    pub reward: Option<f64>,
    pub status: EvalStatus,
}

impl Evaluation {
    fn skipped(coeffs: ScalingCoeffs, round: u32, reason: String) -> Self {
        Self {
            coeffs,
            round,
            phi: None,
            accuracy: None,
            latency: None,
            reward: None,
            status: EvalStatus::Skipped(reason),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == EvalStatus::Ok
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffSearchResult {
    pub best: ScalingCoeffs,
    pub reward: f64,
    pub accuracy: f64,
    pub latency: Option<f64>,
    pub phi: f64,
    /// Every evaluation, ordered by round and then lexicographically by triplet.
    pub evaluated: Vec<Evaluation>,
}

fn lex(a: &ScalingCoeffs, b: &ScalingCoeffs) -> Ordering {
    a.alpha
        .total_cmp(&b.alpha)
        .then(a.beta.total_cmp(&b.beta))
        .then(a.gamma.total_cmp(&b.gamma))
}

/// `Less` when `a` should win: higher reward, then higher accuracy, then lower
/// latency, then the lexicographically smaller triplet.
pub fn preference(a: &Evaluation, b: &Evaluation) -> Ordering {
    let key = |e: &Evaluation| (e.reward.unwrap_or(f64::NEG_INFINITY), e.accuracy.unwrap_or(f64::NEG_INFINITY));
    let (ra, aa) = key(a);
    let (rb, ab) = key(b);
    rb.total_cmp(&ra)
        .then(ab.total_cmp(&aa))
        .then(
            a.latency
                .unwrap_or(f64::INFINITY)
                .total_cmp(&b.latency.unwrap_or(f64::INFINITY)),
        )
        .then(lex(&a.coeffs, &b.coeffs))
}

pub fn best_of(evals: &[Evaluation]) -> Option<&Evaluation> {
    evals.iter().filter(|e| e.is_ok()).min_by(|a, b| preference(a, b))
}

fn key(c: &ScalingCoeffs) -> (i64, i64, i64) {
    let k = |x: f64| (x * 1e9).round() as i64;
    (k(c.alpha), k(c.beta), k(c.gamma))
}

/// Shared phase-1 / phase-2 driver. `eval` scores a triplet.
fn search<F>(grid: &GridSpec, eval: F) -> Result<CoeffSearchResult, LacsError>
where
    F: Fn(&ScalingCoeffs, u32) -> Result<Evaluation, LacsError> + Sync,
{
    let lattice = grid.lattice()?;
    let mut seen: BTreeSet<(i64, i64, i64)> = BTreeSet::new();
    let mut log: Vec<Evaluation> = Vec::new();

    let run = |points: Vec<ScalingCoeffs>, round: u32| -> Result<Vec<Evaluation>, LacsError> {
        let mut evals = points
            .par_iter()
            .map(|c| eval(c, round))
            .collect::<Result<Vec<_>, _>>()?;
        evals.sort_by(|a, b| lex(&a.coeffs, &b.coeffs));
        Ok(evals)
    };

    for c in &lattice {
        seen.insert(key(c));
    }
    log.extend(run(lattice, 0)?);

    let (mut sa, mut sb, mut sg) = (grid.alpha.step, grid.beta.step, grid.gamma.step);
    for round in 1..=grid.refinement_rounds {
        let Some(center) = best_of(&log).map(|e| e.coeffs) else {
            break;
        };
        sa *= 0.5;
        sb *= 0.5;
        sg *= 0.5;
        let axis = |c: f64, s: f64, r: &AxisRange| -> Vec<f64> {
            [c - s, c, c + s]
                .into_iter()
                .map(snap)
                .filter(|v| *v >= r.min - 1e-12 && *v <= r.max + 1e-12)
                .collect()
        };
        let mut pts = Vec::new();
        for a in axis(center.alpha, sa, &grid.alpha) {
            for b in axis(center.beta, sb, &grid.beta) {
                for g in axis(center.gamma, sg, &grid.gamma) {
                    let c = ScalingCoeffs { alpha: a, beta: b, gamma: g };
                    if seen.insert(key(&c)) {
                        pts.push(c);
                    }
                }
            }
        }
        log.extend(run(pts, round)?);
    }

    let best = best_of(&log).ok_or_else(|| LacsError::NoFeasibleTriplet(log.len()))?.clone();
    Ok(CoeffSearchResult {
        best: best.coeffs,
        reward: best.reward.expect("ok entries carry a reward"),
        accuracy: best.accuracy.expect("ok entries carry an accuracy"),
        latency: best.latency,
        phi: best.phi.unwrap_or(0.0),
        evaluated: log,
    })
}

/// Scores one triplet: fit phi to the target, round, then reward the scaled model.
pub fn evaluate_triplet(
    base: &ModelSpec,
    coeffs: &ScalingCoeffs,
    profile: &HardwareProfile,
    surrogate: &dyn AccuracySurrogate,
    cfg: &RewardConfig,
    opts: &FitOptions,
    round: u32,
) -> Result<Evaluation, LacsError> {
    let fit = match fit_phi_with(base, coeffs, cfg.target_latency, profile, opts) {
        Ok(f) => f,
        Err(e @ (LacsError::Unreachable { .. } | LacsError::NonMonotone { .. })) => {
            return Ok(Evaluation::skipped(*coeffs, round, e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let m = rounded_model(base, coeffs, fit.phi, &opts.rounding)?;
    let acc = surrogate.predict(&m)?;
    Ok(Evaluation {
        coeffs: *coeffs,
        round,
        phi: Some(fit.phi),
        accuracy: Some(acc),
        latency: Some(fit.latency),
        reward: Some(reward(acc, fit.latency, cfg)),
        status: EvalStatus::Ok,
    })
}

/// Latency-aware coefficient search: every triplet is grown to the target latency
/// and scored by the accuracy-latency reward.
pub fn grid_search_coeffs(
    base: &ModelSpec,
    profile: &HardwareProfile,
    surrogate: &dyn AccuracySurrogate,
    cfg: &RewardConfig,
    grid: &GridSpec,
) -> Result<CoeffSearchResult, LacsError> {
    grid_search_coeffs_with(base, profile, surrogate, cfg, grid, &FitOptions::default())
}

pub fn grid_search_coeffs_with(
    base: &ModelSpec,
    profile: &HardwareProfile,
    surrogate: &dyn AccuracySurrogate,
    cfg: &RewardConfig,
    grid: &GridSpec,
    opts: &FitOptions,
) -> Result<CoeffSearchResult, LacsError> {
    cfg.check()?;
    grid.check()?;
    let base_latency = spec_latency(base, profile, opts.batch)?;
    if cfg.target_latency < base_latency {
        return Err(LacsError::TargetBelowBase {
            target: cfg.target_latency,
            base: base_latency,
        });
    }
    search(grid, |c, round| evaluate_triplet(base, c, profile, surrogate, cfg, opts, round))
}

/// Accuracy-only comparator: maximize predicted accuracy of the phi = 1 model subject
/// to its FLOPs staying within `flops_budget_ratio` times the base.
pub fn single_objective_coeffs(
    base: &ModelSpec,
    surrogate: &dyn AccuracySurrogate,
    flops_budget_ratio: f64,
    grid: &GridSpec,
) -> Result<CoeffSearchResult, LacsError> {
    single_objective_coeffs_with(base, surrogate, flops_budget_ratio, grid, &RoundingPolicy::default())
}

pub fn single_objective_coeffs_with(
    base: &ModelSpec,
    surrogate: &dyn AccuracySurrogate,
    flops_budget_ratio: f64,
    grid: &GridSpec,
    rounding: &RoundingPolicy,
) -> Result<CoeffSearchResult, LacsError> {
    if !(flops_budget_ratio > 1.0 && flops_budget_ratio.is_finite()) {
        return Err(LacsError::InvalidConfig(format!(
            "FLOPs budget ratio must be > 1, got {flops_budget_ratio}"
        )));
    }
    let budget = flops_per_image(base)? * flops_budget_ratio;
    search(grid, |c, round| {
        let m = rounded_model(base, c, 1.0, rounding)?;
        let flops = flops_per_image(&m)?;
        if flops > budget * (1.0 + 1e-12) {
            return Ok(Evaluation::skipped(
                *c,
                round,
                format!("{flops:.4e} MACs exceeds budget {budget:.4e}"),
            ));
        }
        let acc = surrogate.predict(&m)?;
        Ok(Evaluation {
            coeffs: *c,
            round,
            phi: Some(1.0),
            accuracy: Some(acc),
            latency: None,
            reward: Some(acc),
            status: EvalStatus::Ok,
        })
    })
}
