//! Uniform, log2 and shifted-log (HiDi) quantizers with MinMax and MSE
//! calibration.
//!
//! Rounding is half away from zero everywhere (`f64::round`). Log-family
//! quantizers carry an explicit sign plane; magnitudes below [`EPS_ZERO`]
//! take the deepest code with sign 0.

mod calibrate;
mod log;
mod params;
mod uniform;

pub use calibrate::{calibrate_minmax, calibrate_mse_uniform, Granularity, MseCalibration, MseCandidate};
pub use log::{hidi_dequant, hidi_quant, log2_dequant, log2_quant};
pub use params::{ChannelParamsJson, HiDiParams, Log2Params, ParamsJson, QuantParams, UniformParams};
pub use uniform::{uniform_dequant, uniform_quant, uniform_quant_per_channel};

pub(crate) use log::{hidi_code, hidi_value};
pub(crate) use uniform::uniform_code;

use std::path::Path;

use crate::error::{QvdError, Result};
use crate::fsutil::write_json;
use crate::tensor::{read_tensor, write_tensor, Tensor};

/// Magnitudes under this threshold are treated as exact zeros by the
/// log-family quantizers.
pub const EPS_ZERO: f64 = 1e-12;

pub const MIN_BITS: u32 = 2;
pub const MAX_BITS: u32 = 16;

pub(crate) fn check_bits(bits: u32) -> Result<()> {
    if !(MIN_BITS..=MAX_BITS).contains(&bits) {
        return Err(QvdError::arg(format!(
            "bit-width {bits} outside {MIN_BITS}..={MAX_BITS}"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn max_code(bits: u32) -> u32 {
    (1u32 << bits) - 1
}

/// Integer codes plus the parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTensor {
    pub shape: Vec<usize>,
    pub codes: Vec<u32>,
    /// `Some` exactly for log2 and HiDi params; entries in {-1, 0, 1}.
    pub signs: Option<Vec<i8>>,
    pub params: QuantParams,
}

impl QuantizedTensor {
    pub(crate) fn check(&self) -> Result<()> {
        let n: usize = self.shape.iter().product();
        if self.codes.len() != n {
            return Err(QvdError::arg("code count does not match shape"));
        }
        let bits = self.params.bits();
        let top = max_code(bits);
        if let Some(i) = self.codes.iter().position(|&c| c > top) {
            return Err(QvdError::arg(format!("code at {i} exceeds {bits}-bit range")));
        }
        match (&self.signs, self.params.is_log_family()) {
            (Some(s), true) if s.len() == n => Ok(()),
            (Some(_), true) => Err(QvdError::arg("sign plane length does not match shape")),
            (None, true) => Err(QvdError::arg("log-family codes need a sign plane")),
            (Some(_), false) => Err(QvdError::arg("uniform codes carry no sign plane")),
            (None, false) => Ok(()),
        }
    }

    /// Persists as `<stem>.codes.qvdt`, `<stem>.params.json` and, for the log
    /// family, `<stem>.signs.qvdt`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<Vec<std::path::PathBuf>> {
        let codes = Tensor::new(
            self.shape.clone(),
            self.codes.iter().map(|&c| c as f32).collect(),
        )?;
        let mut written = Vec::new();
        let codes_path = dir.join(format!("{stem}.codes.qvdt"));
        write_tensor(&codes, &codes_path)?;
        written.push(codes_path);
        let params_path = dir.join(format!("{stem}.params.json"));
        write_json(&params_path, &self.params.to_json())?;
        written.push(params_path);
        if let Some(signs) = &self.signs {
            let s = Tensor::new(self.shape.clone(), signs.iter().map(|&v| v as f32).collect())?;
            let signs_path = dir.join(format!("{stem}.signs.qvdt"));
            write_tensor(&s, &signs_path)?;
            written.push(signs_path);
        }
        Ok(written)
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let codes = read_tensor(dir.join(format!("{stem}.codes.qvdt")))?;
        let text = std::fs::read_to_string(dir.join(format!("{stem}.params.json")))?;
        let params = QuantParams::from_json(&serde_json::from_str(&text)?)?;
        let signs = if params.is_log_family() {
            let s = read_tensor(dir.join(format!("{stem}.signs.qvdt")))?;
            Some(s.data().iter().map(|&v| v as i8).collect())
        } else {
            None
        };
        let q = QuantizedTensor {
            shape: codes.shape().to_vec(),
            codes: codes.data().iter().map(|&v| v as u32).collect(),
            signs,
            params,
        };
        q.check()?;
        Ok(q)
    }
}

pub fn quantize(x: &Tensor, params: &QuantParams) -> Result<QuantizedTensor> {
    match params {
        QuantParams::Uniform(p) => uniform_quant(x, p),
        QuantParams::UniformPerChannel { axis, params } => uniform_quant_per_channel(x, *axis, params),
        QuantParams::Log2(p) => log2_quant(x, p),
        QuantParams::HiDi(p) => hidi_quant(x, p),
    }
}

pub fn dequantize(q: &QuantizedTensor) -> Result<Tensor> {
    match q.params {
        QuantParams::Uniform(_) | QuantParams::UniformPerChannel { .. } => uniform_dequant(q),
        QuantParams::Log2(_) => log2_dequant(q),
        QuantParams::HiDi(_) => hidi_dequant(q),
    }
}

/// Quantize then dequantize.
pub fn fake_quant(x: &Tensor, params: &QuantParams) -> Result<Tensor> {
    let q = quantize(x, params)?;
    let mut out = dequantize(&q)?;
    if let Some(axis) = x.channel_axis() {
        out = out.with_channel_axis(axis)?;
    }
    Ok(out)
}
