//! Scattered channel range integration.
//!
//! Activations after a normalization layer are divided per channel by
//! `s[c] = X_cmax[c] / t`, which stretches narrow channels toward a common
//! top value `t`. The division is folded into the normalization gain/bias
//! and the following linear layer's input columns, so the float network is
//! unchanged. `t` is picked by a grid search over `[min X_cmax, max X_cmax]`
//! against the block-output MSE of the quantized block.

mod block;

pub use block::{AffineBlock, AffineBlockJson, LAYER_NORM_EPS};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QvdError, Result};
use crate::quant::{calibrate_minmax, calibrate_mse_uniform, fake_quant, Granularity, QuantParams};
use crate::tensor::{channel_stats, mse, Tensor};

/// Floor for channel maxima that are zero or negative.
pub const EPS_CHANNEL: f64 = 1e-6;
pub const DEFAULT_GRID_SIZE: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriScale {
    pub t: f64,
    pub axis: usize,
    pub s: Vec<f64>,
}

impl ScriScale {
    pub fn ones(channels: usize, axis: usize) -> Self {
        ScriScale {
            t: 1.0,
            axis,
            s: vec![1.0; channels],
        }
    }
}

/// Raw per-channel maxima with the [`EPS_CHANNEL`] floor applied.
pub fn channel_max(calib: &Tensor, axis: usize) -> Result<Vec<f64>> {
    Ok(channel_stats(calib, axis)?
        .max
        .iter()
        .map(|&m| (m as f64).max(EPS_CHANNEL))
        .collect())
}

/// `s[c] = max(X_cmax[c], eps) / t`.
pub fn compute_scri_scale(calib: &Tensor, axis: usize, t: f64) -> Result<ScriScale> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(QvdError::arg(format!("t must be positive, got {t}")));
    }
    Ok(scale_from_max(&channel_max(calib, axis)?, axis, t))
}

fn scale_from_max(cmax: &[f64], axis: usize, t: f64) -> ScriScale {
    ScriScale {
        t,
        axis,
        s: cmax.iter().map(|m| m / t).collect(),
    }
}

/// Divides every channel `c` of `x` by `s[c]`.
pub fn apply_scri(x: &Tensor, scale: &ScriScale) -> Result<Tensor> {
    x.check_axis(scale.axis)?;
    if x.shape()[scale.axis] != scale.s.len() {
        return Err(QvdError::arg(format!(
            "scale has {} channels, tensor axis {} has {}",
            scale.s.len(),
            scale.axis,
            x.shape()[scale.axis]
        )));
    }
    let channel = x.channel_of(scale.axis);
    let data = x
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| (v as f64 / scale.s[channel(i)]) as f32)
        .collect();
    x.with_data(data)
}

/// Absorbs the scale: `gain / s`, `norm_bias / s`, `weight[:, c] * s[c]`.
pub fn fold_scri(block: &AffineBlock, scale: &ScriScale) -> Result<AffineBlock> {
    let c = block.channels();
    if scale.s.len() != c {
        return Err(QvdError::arg(format!(
            "scale has {} channels, block has {c}",
            scale.s.len()
        )));
    }
    let div = |v: &[f32]| -> Vec<f32> {
        v.iter().zip(&scale.s).map(|(&g, &s)| (g as f64 / s) as f32).collect()
    };
    let w = block.weight.data();
    let weight: Vec<f32> = w
        .iter()
        .enumerate()
        .map(|(i, &v)| (v as f64 * scale.s[i % c]) as f32)
        .collect();
    AffineBlock::new(
        div(&block.norm_gain),
        div(&block.norm_bias),
        block.weight.with_data(weight)?,
        block.bias.clone(),
    )
}

/// Bit-widths for the quantized block forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockQuantConfig {
    /// Per-tensor MSE-calibrated uniform activations.
    pub act_bits: u32,
    /// Per-output-channel MinMax uniform weights.
    pub weight_bits: u32,
}

impl Default for BlockQuantConfig {
    fn default() -> Self {
        BlockQuantConfig {
            act_bits: 8,
            weight_bits: 8,
        }
    }
}

/// Linear layer output for already-normalized activations, with both
/// operands fake-quantized per `cfg`.
pub fn quantized_linear(block: &AffineBlock, acts: &Tensor, cfg: &BlockQuantConfig) -> Result<Tensor> {
    let act_params = QuantParams::Uniform(calibrate_mse_uniform(acts, cfg.act_bits)?.params);
    let acts_q = fake_quant(acts, &act_params)?;
    let w_params = calibrate_minmax(&block.weight, cfg.weight_bits, Granularity::Channel(0))?;
    let w_q = fake_quant(&block.weight, &w_params)?;
    block.linear_with(&acts_q, &w_q)
}

/// `F_Q(W, X; t)`: normalize with the folded block, then quantized linear.
pub fn quantized_forward(block: &AffineBlock, x: &Tensor, cfg: &BlockQuantConfig) -> Result<Tensor> {
    quantized_linear(block, &block.normalize(x)?, cfg)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScriCandidate {
    pub index: usize,
    pub t: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct ScriSearch {
    pub scale: ScriScale,
    pub objective: f64,
    pub folded: AffineBlock,
    pub trace: Vec<ScriCandidate>,
}

/// Evenly spaced `t` values over `[min X_cmax, max X_cmax]`, inclusive.
pub fn t_grid(cmax: &[f64], grid_size: usize) -> Result<Vec<f64>> {
    if grid_size < 2 {
        return Err(QvdError::arg("grid_size must be at least 2"));
    }
    let lo = cmax.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cmax.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(QvdError::DegenerateRange(format!(
            "all channel maxima equal ({lo}); nothing to search"
        )));
    }
    let last = (grid_size - 1) as f64;
    Ok((0..grid_size)
        .map(|i| if i + 1 == grid_size { hi } else { lo + (hi - lo) * i as f64 / last })
        .collect())
}

/// Grid search for `t` minimizing `mse(F(W, X), F_Q(W, X; t))` on the
/// calibration input `calib` (rows = tokens/frames, columns = channels).
/// `X_cmax` is taken from the block's normalized activations. Ties go to the
/// lowest grid index.
pub fn search_t(
    block: &AffineBlock,
    calib: &Tensor,
    cfg: &BlockQuantConfig,
    grid_size: usize,
) -> Result<ScriSearch> {
    let reference = block.forward(calib)?;
    let acts = block.normalize(calib)?;
    let cmax = channel_max(&acts, 1)?;
    let grid = t_grid(&cmax, grid_size)?;
    let objectives = grid
        .par_iter()
        .map(|&t| {
            let folded = fold_scri(block, &scale_from_max(&cmax, 1, t))?;
            mse(&reference, &quantized_forward(&folded, calib, cfg)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, &e) in objectives.iter().enumerate() {
        if e < objectives[best] {
            best = i;
        }
    }
    let scale = scale_from_max(&cmax, 1, grid[best]);
    Ok(ScriSearch {
        folded: fold_scri(block, &scale)?,
        scale,
        objective: objectives[best],
        trace: grid
            .iter()
            .zip(&objectives)
            .enumerate()
            .map(|(index, (&t, &objective))| ScriCandidate { index, t, objective })
            .collect(),
    })
}
