use serde::Serialize;

use crate::error::{QvdError, Result};
use crate::tensor::{channel_stats, Tensor};

use super::{check_bits, max_code, uniform_code, QuantParams, UniformParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Tensor,
    /// One set of params per index along the given axis.
    Channel(usize),
}

fn minmax_params(min: f32, max: f32, bits: u32) -> Result<UniformParams> {
    if max <= min {
        return Err(QvdError::DegenerateRange(format!(
            "cannot calibrate a constant group (value {min})"
        )));
    }
    // the zero point is clamped to the code range, so the range must hold 0
    let (lo, hi) = ((min as f64).min(0.0), (max as f64).max(0.0));
    let top = max_code(bits) as f64;
    let scale = (hi - lo) / top;
    let zero_point = (-lo / scale).round().clamp(0.0, top) as i64;
    UniformParams::new(scale, zero_point, bits)
}

/// `s = (max - min) / (2^b - 1)`, `z = clamp(round(-min / s))`, with the
/// range first widened to include 0.
pub fn calibrate_minmax(x: &Tensor, bits: u32, granularity: Granularity) -> Result<QuantParams> {
    check_bits(bits)?;
    match granularity {
        Granularity::Tensor => {
            let flat = Tensor::from_vec(x.data().to_vec())?;
            let st = channel_stats(&flat, 0)?;
            Ok(QuantParams::Uniform(minmax_params(st.global_min, st.global_max, bits)?))
        }
        Granularity::Channel(axis) => {
            let st = channel_stats(x, axis)?;
            let params = st
                .min
                .iter()
                .zip(&st.max)
                .map(|(&lo, &hi)| minmax_params(lo, hi, bits))
                .collect::<Result<Vec<_>>>()?;
            Ok(QuantParams::UniformPerChannel { axis, params })
        }
    }
}

/// Clip fractions tried by [`calibrate_mse_uniform`]: 0.50, 0.51, .., 1.00.
pub const MSE_CLIP_PERCENT: std::ops::RangeInclusive<u32> = 50..=100;

#[derive(Debug, Clone, Serialize)]
pub struct MseCandidate {
    pub fraction: f64,
    pub s: f64,
    pub z: i64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct MseCalibration {
    pub params: UniformParams,
    pub objective: f64,
    pub trace: Vec<MseCandidate>,
}

/// Per-tensor search over clip ranges `[f * min, f * max]`; returns the
/// candidate with the lowest fake-quantization MSE, earliest on ties.
pub fn calibrate_mse_uniform(x: &Tensor, bits: u32) -> Result<MseCalibration> {
    check_bits(bits)?;
    let flat = Tensor::from_vec(x.data().to_vec())?;
    let st = channel_stats(&flat, 0)?;
    if st.global_max <= st.global_min {
        return Err(QvdError::DegenerateRange(format!(
            "cannot calibrate a constant tensor (value {})",
            st.global_min
        )));
    }
    let (lo, hi) = ((st.global_min as f64).min(0.0), (st.global_max as f64).max(0.0));
    let top = max_code(bits) as f64;
    let mut trace = Vec::with_capacity(51);
    let mut best: Option<(usize, UniformParams, f64)> = None;
    for (i, pct) in MSE_CLIP_PERCENT.enumerate() {
        let f = pct as f64 / 100.0;
        let scale = (hi * f - lo * f) / top;
        let zero_point = (-(lo * f) / scale).round().clamp(0.0, top) as i64;
        let p = UniformParams::new(scale, zero_point, bits)?;
        let objective = fake_quant_mse(x.data(), &p);
        trace.push(MseCandidate {
            fraction: f,
            s: scale,
            z: zero_point,
            objective,
        });
        if best.is_none_or(|(_, _, b)| objective < b) {
            best = Some((i, p, objective));
        }
    }
    let (_, params, objective) = best.expect("51 candidates");
    Ok(MseCalibration {
        params,
        objective,
        trace,
    })
}

pub(crate) fn fake_quant_mse(data: &[f32], p: &UniformParams) -> f64 {
    let sum: f64 = data
        .iter()
        .map(|&v| {
            let back = (p.scale * (uniform_code(v, p) as i64 - p.zero_point) as f64) as f32;
            let d = v as f64 - back as f64;
            d * d
        })
        .sum();
    sum / data.len() as f64
}
