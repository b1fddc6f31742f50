//! Closed-form multiply-add and traffic counts for square, stride-1 layers with
//! equal input and output channels, in exact integer arithmetic.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use super::CostError;

/// Exact non-negative rational `num / den`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Ratio {
    pub num: u128,
    pub den: u128,
}

impl Ratio {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        // Widen through u128 pairs: a/b vs c/d compares a*d against c*b.
        let lhs = self.num.checked_mul(other.den);
        let rhs = other.num.checked_mul(self.den);
        match (lhs, rhs) {
            (Some(l), Some(r)) => l.cmp(&r),
            _ => self.value().total_cmp(&other.value()),
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn args(n: u64, h: u64, w: u64, c: u64, k: u64) -> Result<[u128; 5], CostError> {
    if [n, h, w, c, k].contains(&0) {
        return Err(CostError::InvalidArgument(format!(
            "all of n, h, w, c, k must be >= 1, got ({n}, {h}, {w}, {c}, {k})"
        )));
    }
    Ok([n as u128, h as u128, w as u128, c as u128, k as u128])
}

fn mul(xs: &[u128]) -> Result<u128, CostError> {
    xs.iter()
        .try_fold(1u128, |acc, &x| acc.checked_mul(x))
        .ok_or(CostError::Overflow)
}

fn add(xs: &[u128]) -> Result<u128, CostError> {
    xs.iter()
        .try_fold(0u128, |acc, &x| acc.checked_add(x))
        .ok_or(CostError::Overflow)
}

/// N*H*W*C^2*K^2 multiply-adds.
pub fn conv_flops(n: u64, h: u64, w: u64, c: u64, k: u64) -> Result<u128, CostError> {
    let [n, h, w, c, k] = args(n, h, w, c, k)?;
    mul(&[n, h, w, c, c, k, k])
}

/// Input plus output activations plus weights: 2*N*H*W*C + C^2*K^2 elements.
pub fn conv_mem_elems(n: u64, h: u64, w: u64, c: u64, k: u64) -> Result<u128, CostError> {
    let [n, h, w, c, k] = args(n, h, w, c, k)?;
    add(&[mul(&[2, n, h, w, c])?, mul(&[c, c, k, k])?])
}

pub fn conv_intensity(n: u64, h: u64, w: u64, c: u64, k: u64) -> Result<Ratio, CostError> {
    Ok(Ratio {
        num: conv_flops(n, h, w, c, k)?,
        den: conv_mem_elems(n, h, w, c, k)?,
    })
}

/// Depthwise (K^2 per element) plus pointwise (C per element): N*H*W*C*(C + K^2).
pub fn dwsep_flops(n: u64, h: u64, w: u64, c: u64, k: u64) -> Result<u128, CostError> {
    let [n, h, w, c, k] = args(n, h, w, c, k)?;
    mul(&[n, h, w, c, add(&[c, mul(&[k, k])?])?])
}

/// Two layers of input plus output activations plus both weight tensors:
/// 4*N*H*W*C + C*K^2 + C^2 elements.
pub fn dwsep_mem_elems(n: u64, h: u64, w: u64, c: u64, k: u64) -> Result<u128, CostError> {
    let [n, h, w, c, k] = args(n, h, w, c, k)?;
    add(&[mul(&[4, n, h, w, c])?, mul(&[c, k, k])?, mul(&[c, c])?])
}

pub fn dwsep_intensity(n: u64, h: u64, w: u64, c: u64, k: u64) -> Result<Ratio, CostError> {
    Ok(Ratio {
        num: dwsep_flops(n, h, w, c, k)?,
        den: dwsep_mem_elems(n, h, w, c, k)?,
    })
}
