use super::profile::HardwareProfile;
use super::CostError;

pub fn ridge_point(profile: &HardwareProfile) -> f64 {
    profile.ridge_point()
}

/// `n_points` log-spaced samples of `min(I * b, C_max)` over `[i_min, i_max]`.
pub fn roofline_curve(
    profile: &HardwareProfile,
    i_min: f64,
    i_max: f64,
    n_points: usize,
) -> Result<Vec<(f64, f64)>, CostError> {
    if !(i_min > 0.0 && i_min < i_max && i_max.is_finite()) || n_points < 2 {
        return Err(CostError::BadRange {
            i_min,
            i_max,
            n_points,
        });
    }
    let (lo, hi) = (i_min.ln(), i_max.ln());
    let step = (hi - lo) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|k| {
            let i = if k + 1 == n_points {
                i_max
            } else {
                (lo + step * k as f64).exp()
            };
            (i, profile.attainable(i))
        })
        .collect())
}

/// Latency of `w` multiply-adds moving `q_bytes` at efficiency `e` on the roofline.
pub fn roofline_latency(profile: &HardwareProfile, w: f64, q_bytes: f64, e: f64) -> f64 {
    let compute = w / (profile.peak_matrix_ops * e);
    let memory = q_bytes / (profile.mem_bandwidth_bytes * e);
    compute.max(memory)
}
