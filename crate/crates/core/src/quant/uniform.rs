use crate::error::{QvdError, Result};
use crate::tensor::Tensor;

use super::{max_code, QuantParams, QuantizedTensor, UniformParams};

#[inline]
pub(crate) fn uniform_code(v: f32, p: &UniformParams) -> u32 {
    let q = (v as f64 / p.scale).round() + p.zero_point as f64;
    q.clamp(0.0, max_code(p.bits) as f64) as u32
}

#[inline]
fn uniform_value(code: u32, p: &UniformParams) -> f32 {
    (p.scale * (code as i64 - p.zero_point) as f64) as f32
}

pub fn uniform_quant(x: &Tensor, p: &UniformParams) -> Result<QuantizedTensor> {
    p.validate()?;
    Ok(QuantizedTensor {
        shape: x.shape().to_vec(),
        codes: x.data().iter().map(|&v| uniform_code(v, p)).collect(),
        signs: None,
        params: QuantParams::Uniform(*p),
    })
}

/// Quantizes each slice along `axis` with its own parameters.
pub fn uniform_quant_per_channel(
    x: &Tensor,
    axis: usize,
    params: &[UniformParams],
) -> Result<QuantizedTensor> {
    x.check_axis(axis)?;
    if params.len() != x.shape()[axis] {
        return Err(QvdError::arg(format!(
            "{} channel params for axis of size {}",
            params.len(),
            x.shape()[axis]
        )));
    }
    let all = QuantParams::UniformPerChannel {
        axis,
        params: params.to_vec(),
    };
    all.validate()?;
    let channel = x.channel_of(axis);
    let codes = x
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| uniform_code(v, &params[channel(i)]))
        .collect();
    Ok(QuantizedTensor {
        shape: x.shape().to_vec(),
        codes,
        signs: None,
        params: all,
    })
}

/// `x_hat = s * (code - z)`.
pub fn uniform_dequant(q: &QuantizedTensor) -> Result<Tensor> {
    q.check()?;
    let data = match &q.params {
        QuantParams::Uniform(p) => q.codes.iter().map(|&c| uniform_value(c, p)).collect(),
        QuantParams::UniformPerChannel { axis, params } => {
            let probe = Tensor::zeros(q.shape.clone())?;
            probe.check_axis(*axis)?;
            if params.len() != q.shape[*axis] {
                return Err(QvdError::arg("per-channel params do not match code shape"));
            }
            let channel = probe.channel_of(*axis);
            q.codes
                .iter()
                .enumerate()
                .map(|(i, &c)| uniform_value(c, &params[channel(i)]))
                .collect()
        }
        _ => return Err(QvdError::arg("uniform_dequant needs uniform params")),
    };
    Tensor::new(q.shape.clone(), data)
}
