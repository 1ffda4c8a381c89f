use crate::error::Result;
use crate::temporal::TemporalTrajectory;
use crate::tensor::Tensor;

use super::{stream, uniform_in};

/// Outlier noise multipliers are drawn from `[-NOISE_HALFWIDTH, NOISE_HALFWIDTH]`.
pub const NOISE_HALFWIDTH: f64 = 1.5;

fn min_max(x: &Tensor) -> (f32, f32) {
    x.data()
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// `[-0.5 |min|, 0.5 max]` of one step.
pub fn zero_interval(step: &Tensor) -> (f32, f32) {
    let (lo, hi) = min_max(step);
    (-0.5 * lo.abs(), 0.5 * hi)
}

/// `[0.9 max, max]` of one step.
pub fn outlier_interval(step: &Tensor) -> (f32, f32) {
    let (_, hi) = min_max(step);
    (0.9 * hi, hi)
}

/// Zeroes every value inside the step's [`zero_interval`].
pub fn perturb_zero_interval_step(step: &Tensor) -> Result<Tensor> {
    let (lo, hi) = zero_interval(step);
    step.map(|v| if lo <= v && v <= hi { 0.0 } else { v })
}

pub fn perturb_zero_interval(traj: &TemporalTrajectory) -> Result<TemporalTrajectory> {
    traj.map_steps(|_, s| perturb_zero_interval_step(s))
}

/// Multiplies every value inside the step's [`outlier_interval`] by
/// `noise(index)`.
pub fn perturb_outliers_with(step: &Tensor, noise: impl Fn(usize) -> f64) -> Result<Tensor> {
    let (lo, hi) = outlier_interval(step);
    let data = step
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| if lo <= v && v <= hi { (v as f64 * noise(i)) as f32 } else { v })
        .collect();
    step.with_data(data)
}

/// Outlier perturbation of step `t` (1-based), noise addressed by
/// `(seed, t, element)`.
pub fn perturb_outliers_step(step: &Tensor, t: usize, seed: u64) -> Result<Tensor> {
    perturb_outliers_with(step, |i| {
        uniform_in(seed, stream::at(stream::NOISE, t), i as u64, -NOISE_HALFWIDTH, NOISE_HALFWIDTH)
    })
}

pub fn perturb_outliers(traj: &TemporalTrajectory, seed: u64) -> Result<TemporalTrajectory> {
    traj.map_steps(|t, s| perturb_outliers_step(s, t, seed))
}
