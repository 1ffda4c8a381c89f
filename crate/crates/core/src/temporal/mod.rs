//! Temporal discriminability (TDScore), the composite objective `K` and the
//! grid search for HiDi quantizer parameters over a trajectory of temporal
//! features.

mod search;
mod trajectory;

pub use search::{
    hidi_roundtrip, s_grid, beta_grid, search_hidi_params, HtdqCandidate, HtdqSearch, HtdqSearchConfig,
};
pub use trajectory::{load_trajectory, save_trajectory, TemporalTrajectory, TrajectoryManifest};

use crate::error::{QvdError, Result};
use crate::tensor::{cosine_similarity, stats::cosine_slices, stats::sse_slices, Tensor};

/// Default adjacency window for TDScore.
pub const DEFAULT_WINDOW: usize = 5;
/// Default zero guard inside the log transform and the scale bound.
pub const DEFAULT_EPS: f64 = 1e-12;

#[inline]
fn log_transform_value(v: f32, eps: f64) -> f32 {
    let m = (v as f64).abs().max(eps);
    let mag = m.log2().abs();
    if v > 0.0 {
        mag as f32
    } else if v < 0.0 {
        -mag as f32
    } else {
        0.0
    }
}

/// `sign(x) * |log2(max(|x|, eps))|`, element-wise.
pub fn log_transform(x: &Tensor, eps: f64) -> Result<Tensor> {
    x.map(|v| log_transform_value(v, eps))
}

/// Mean cosine similarity between the log-transformed step `t` (1-based)
/// and its successors `t+1 ..= min(t+n, T)`. Lower means more discriminable.
pub fn tdscore(traj: &TemporalTrajectory, t: usize, n: usize, eps: f64) -> Result<f64> {
    let steps = traj.len();
    if n == 0 {
        return Err(QvdError::arg("TDScore window must be at least 1"));
    }
    if t == 0 || t >= steps {
        return Err(QvdError::arg(format!(
            "TDScore step {t} has no successors in a {steps}-step trajectory"
        )));
    }
    let base = log_transform(traj.step(t), eps)?;
    let last = (t + n).min(steps);
    let mut sum = 0.0;
    for i in t + 1..=last {
        sum += cosine_similarity(&base, &log_transform(traj.step(i), eps)?)?;
    }
    Ok(sum / (last - t) as f64)
}

/// TDScore for every step that has a successor (`t = 1 ..= T-1`).
pub fn tdscores(traj: &TemporalTrajectory, n: usize, eps: f64) -> Result<Vec<f64>> {
    tdscores_flat(&traj.flatten(), traj.len(), traj.step_len(), n, eps)
}

pub(crate) fn tdscores_flat(flat: &[f32], steps: usize, dim: usize, n: usize, eps: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(QvdError::arg("TDScore window must be at least 1"));
    }
    let logs: Vec<f32> = flat.iter().map(|&v| log_transform_value(v, eps)).collect();
    let step = |t: usize| &logs[(t - 1) * dim..t * dim];
    (1..steps)
        .map(|t| {
            let last = (t + n).min(steps);
            let mut sum = 0.0;
            for i in t + 1..=last {
                sum += cosine_slices(step(t), step(i))?;
            }
            Ok(sum / (last - t) as f64)
        })
        .collect()
}

/// `sum_t TDScore_t(traj_hat) + sum_t sum_j (traj - traj_hat)^2`.
///
/// The TDScore sum runs over `t = 1 ..= T-1` and is taken on the
/// reconstructed trajectory; the error term is a sum, not a mean.
pub fn composite_k(
    traj: &TemporalTrajectory,
    traj_hat: &TemporalTrajectory,
    n: usize,
    eps: f64,
) -> Result<f64> {
    if traj.len() != traj_hat.len() || traj.step_shape() != traj_hat.step_shape() {
        return Err(QvdError::arg("trajectories differ in length or step shape"));
    }
    composite_k_flat(
        &traj.flatten(),
        &traj_hat.flatten(),
        traj.len(),
        traj.step_len(),
        n,
        eps,
    )
}

pub(crate) fn composite_k_flat(
    orig: &[f32],
    hat: &[f32],
    steps: usize,
    dim: usize,
    n: usize,
    eps: f64,
) -> Result<f64> {
    let td: f64 = tdscores_flat(hat, steps, dim, n, eps)?.iter().sum();
    Ok(td + sse_slices(orig, hat))
}
