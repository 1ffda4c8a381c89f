use crate::error::{QvdError, Result};

use super::Tensor;

/// Per-channel min, max and absolute max, plus the global extremes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub min: Vec<f32>,
    pub max: Vec<f32>,
    pub absmax: Vec<f32>,
    pub global_min: f32,
    pub global_max: f32,
}

impl ChannelStats {
    pub fn channels(&self) -> usize {
        self.min.len()
    }
}

/// Reduces over every axis except `axis`, visiting elements in ascending flat
/// index order.
pub fn channel_stats(x: &Tensor, axis: usize) -> Result<ChannelStats> {
    x.check_axis(axis)?;
    if x.is_empty() {
        return Err(QvdError::arg("empty tensor"));
    }
    let c = x.shape()[axis];
    let channel = x.channel_of(axis);
    let mut min = vec![f32::INFINITY; c];
    let mut max = vec![f32::NEG_INFINITY; c];
    for (i, &v) in x.data().iter().enumerate() {
        let ch = channel(i);
        if v < min[ch] {
            min[ch] = v;
        }
        if v > max[ch] {
            max[ch] = v;
        }
    }
    let absmax = min
        .iter()
        .zip(&max)
        .map(|(lo, hi)| lo.abs().max(hi.abs()))
        .collect();
    let global_min = min.iter().copied().fold(f32::INFINITY, f32::min);
    let global_max = max.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    Ok(ChannelStats {
        min,
        max,
        absmax,
        global_min,
        global_max,
    })
}

/// Fraction of the global range spanned by each channel.
pub fn coverage_ratio(x: &Tensor, axis: usize) -> Result<Vec<f64>> {
    let stats = channel_stats(x, axis)?;
    let global = stats.global_max as f64 - stats.global_min as f64;
    if global <= 0.0 {
        return Err(QvdError::DegenerateRange(format!(
            "global range is empty (min = max = {})",
            stats.global_min
        )));
    }
    Ok(stats
        .min
        .iter()
        .zip(&stats.max)
        .map(|(&lo, &hi)| (hi as f64 - lo as f64) / global)
        .collect())
}

pub fn cosine_similarity(a: &Tensor, b: &Tensor) -> Result<f64> {
    a.same_shape(b)?;
    cosine_slices(a.data(), b.data())
}

pub(crate) fn cosine_slices(a: &[f32], b: &[f32]) -> Result<f64> {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(QvdError::DegenerateInput(
            "cosine similarity of a zero-norm vector".into(),
        ));
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Sum of squared element-wise differences.
pub fn sse(a: &Tensor, b: &Tensor) -> Result<f64> {
    a.same_shape(b)?;
    Ok(sse_slices(a.data(), b.data()))
}

pub(crate) fn sse_slices(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

pub fn mse(a: &Tensor, b: &Tensor) -> Result<f64> {
    Ok(sse(a, b)? / a.len() as f64)
}
