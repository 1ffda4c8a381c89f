use serde::{Deserialize, Serialize};

use crate::error::{QvdError, Result};

use super::{check_bits, max_code};

/// Affine uniform quantizer: `code = clamp(round(x / s) + z, 0, 2^b - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformParams {
    pub scale: f64,
    pub zero_point: i64,
    pub bits: u32,
}

impl UniformParams {
    pub fn new(scale: f64, zero_point: i64, bits: u32) -> Result<Self> {
        let p = UniformParams {
            scale,
            zero_point,
            bits,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_bits(self.bits)?;
        check_scale(self.scale)?;
        if self.zero_point < 0 || self.zero_point > max_code(self.bits) as i64 {
            return Err(QvdError::arg(format!(
                "zero point {} outside the {}-bit code range",
                self.zero_point, self.bits
            )));
        }
        Ok(())
    }
}

/// Power-of-two quantizer: `code = clamp(round(-log2(|x| / s)), 0, 2^b - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Log2Params {
    pub scale: f64,
    pub bits: u32,
}

impl Log2Params {
    pub fn new(scale: f64, bits: u32) -> Result<Self> {
        let p = Log2Params { scale, bits };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_bits(self.bits)?;
        check_scale(self.scale)
    }
}

/// Log quantizer applied to `x - beta`, with the sign taken from `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiDiParams {
    pub scale: f64,
    pub beta: f64,
    pub bits: u32,
}

impl HiDiParams {
    pub fn new(scale: f64, beta: f64, bits: u32) -> Result<Self> {
        let p = HiDiParams { scale, beta, bits };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_bits(self.bits)?;
        check_scale(self.scale)?;
        if !self.beta.is_finite() {
            return Err(QvdError::arg("beta must be finite"));
        }
        Ok(())
    }
}

fn check_scale(s: f64) -> Result<()> {
    if !(s.is_finite() && s > 0.0) {
        return Err(QvdError::arg(format!("scale must be positive and finite, got {s}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantParams {
    Uniform(UniformParams),
    /// One uniform quantizer per index along `axis`.
    UniformPerChannel { axis: usize, params: Vec<UniformParams> },
    Log2(Log2Params),
    HiDi(HiDiParams),
}

impl QuantParams {
    pub fn bits(&self) -> u32 {
        match self {
            QuantParams::Uniform(p) => p.bits,
            QuantParams::UniformPerChannel { params, .. } => params.first().map_or(0, |p| p.bits),
            QuantParams::Log2(p) => p.bits,
            QuantParams::HiDi(p) => p.bits,
        }
    }

    pub fn is_log_family(&self) -> bool {
        matches!(self, QuantParams::Log2(_) | QuantParams::HiDi(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            QuantParams::Uniform(p) => p.validate(),
            QuantParams::UniformPerChannel { params, .. } => {
                if params.is_empty() {
                    return Err(QvdError::arg("per-channel params are empty"));
                }
                let bits = params[0].bits;
                for p in params {
                    p.validate()?;
                    if p.bits != bits {
                        return Err(QvdError::arg("per-channel params mix bit-widths"));
                    }
                }
                Ok(())
            }
            QuantParams::Log2(p) => p.validate(),
            QuantParams::HiDi(p) => p.validate(),
        }
    }

    pub fn to_json(&self) -> ParamsJson {
        let tensor = |kind: &str, s: f64, z: Option<i64>, beta: Option<f64>, bits: u32| ParamsJson {
            kind: kind.into(),
            s: Some(s),
            z,
            beta,
            bits,
            granularity: "tensor".into(),
            axis: None,
            per_channel: None,
        };
        match self {
            QuantParams::Uniform(p) => tensor("uniform", p.scale, Some(p.zero_point), None, p.bits),
            QuantParams::Log2(p) => tensor("log2", p.scale, None, None, p.bits),
            QuantParams::HiDi(p) => tensor("hidi", p.scale, None, Some(p.beta), p.bits),
            QuantParams::UniformPerChannel { axis, params } => ParamsJson {
                kind: "uniform".into(),
                s: None,
                z: None,
                beta: None,
                bits: self.bits(),
                granularity: "channel".into(),
                axis: Some(*axis),
                per_channel: Some(
                    params
                        .iter()
                        .map(|p| ChannelParamsJson {
                            s: p.scale,
                            z: p.zero_point,
                        })
                        .collect(),
                ),
            },
        }
    }

    pub fn from_json(doc: &ParamsJson) -> Result<Self> {
        let need_s = || doc.s.ok_or_else(|| QvdError::arg("params JSON is missing \"s\""));
        let params = match (doc.kind.as_str(), doc.granularity.as_str()) {
            ("uniform", "tensor") => QuantParams::Uniform(UniformParams {
                scale: need_s()?,
                zero_point: doc.z.ok_or_else(|| QvdError::arg("uniform params need \"z\""))?,
                bits: doc.bits,
            }),
            ("uniform", "channel") => QuantParams::UniformPerChannel {
                axis: doc.axis.ok_or_else(|| QvdError::arg("per-channel params need \"axis\""))?,
                params: doc
                    .per_channel
                    .as_ref()
                    .ok_or_else(|| QvdError::arg("per-channel params need \"per_channel\""))?
                    .iter()
                    .map(|c| UniformParams {
                        scale: c.s,
                        zero_point: c.z,
                        bits: doc.bits,
                    })
                    .collect(),
            },
            ("log2", "tensor") => QuantParams::Log2(Log2Params {
                scale: need_s()?,
                bits: doc.bits,
            }),
            ("hidi", "tensor") => QuantParams::HiDi(HiDiParams {
                scale: need_s()?,
                beta: doc.beta.ok_or_else(|| QvdError::arg("hidi params need \"beta\""))?,
                bits: doc.bits,
            }),
            (kind, gran) => {
                return Err(QvdError::arg(format!(
                    "unsupported params kind/granularity: {kind}/{gran}"
                )))
            }
        };
        params.validate()?;
        Ok(params)
    }
}

/// On-disk form of [`QuantParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub bits: u32,
    pub granularity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_channel: Option<Vec<ChannelParamsJson>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParamsJson {
    pub s: f64,
    pub z: i64,
}
