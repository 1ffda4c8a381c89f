use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{QvdError, Result};
use crate::fsutil::write_json;
use crate::tensor::{read_tensor, write_tensor, Tensor};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// LayerNorm (per-row statistics, per-channel gain/bias) followed by a
/// linear layer `y = a W^T + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineBlock {
    pub norm_gain: Vec<f32>,
    pub norm_bias: Vec<f32>,
    /// `C_out x C_in`.
    pub weight: Tensor,
    pub bias: Vec<f32>,
}

impl AffineBlock {
    pub fn new(norm_gain: Vec<f32>, norm_bias: Vec<f32>, weight: Tensor, bias: Vec<f32>) -> Result<Self> {
        if weight.rank() != 2 {
            return Err(QvdError::arg("weight must be a C_out x C_in matrix"));
        }
        let (c_out, c_in) = (weight.shape()[0], weight.shape()[1]);
        if norm_gain.len() != c_in || norm_bias.len() != c_in {
            return Err(QvdError::arg(format!(
                "norm width {}/{} does not match weight input width {c_in}",
                norm_gain.len(),
                norm_bias.len()
            )));
        }
        if bias.len() != c_out {
            return Err(QvdError::arg(format!(
                "bias length {} does not match output width {c_out}",
                bias.len()
            )));
        }
        if norm_gain.iter().chain(&norm_bias).chain(&bias).any(|v| !v.is_finite()) {
            return Err(QvdError::arg("block parameters must be finite"));
        }
        Ok(AffineBlock {
            norm_gain,
            norm_bias,
            weight,
            bias,
        })
    }

    pub fn channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    fn check_input(&self, x: &Tensor) -> Result<usize> {
        if x.rank() != 2 || x.shape()[1] != self.channels() {
            return Err(QvdError::arg(format!(
                "block input must be rows x {}, got {:?}",
                self.channels(),
                x.shape()
            )));
        }
        Ok(x.shape()[0])
    }

    /// Post-norm activations, channel axis 1.
    pub fn normalize(&self, x: &Tensor) -> Result<Tensor> {
        let rows = self.check_input(x)?;
        let c = self.channels();
        let mut out = Vec::with_capacity(rows * c);
        for row in x.data().chunks_exact(c) {
            let mean = row.iter().map(|&v| v as f64).sum::<f64>() / c as f64;
            let var = row.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / c as f64;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            for (j, &v) in row.iter().enumerate() {
                let xhat = (v as f64 - mean) * inv;
                out.push((xhat * self.norm_gain[j] as f64 + self.norm_bias[j] as f64) as f32);
            }
        }
        Tensor::new(vec![rows, c], out)?.with_channel_axis(1)
    }

    pub fn linear(&self, acts: &Tensor) -> Result<Tensor> {
        self.linear_with(acts, &self.weight)
    }

    /// Linear layer with an externally supplied (e.g. fake-quantized) weight.
    pub fn linear_with(&self, acts: &Tensor, weight: &Tensor) -> Result<Tensor> {
        let rows = self.check_input(acts)?;
        if weight.shape() != self.weight.shape() {
            return Err(QvdError::arg("weight shape differs from the block's"));
        }
        let (c_out, c_in) = (self.out_channels(), self.channels());
        let w = weight.data();
        let mut out = Vec::with_capacity(rows * c_out);
        for row in acts.data().chunks_exact(c_in) {
            for o in 0..c_out {
                let wr = &w[o * c_in..(o + 1) * c_in];
                let acc: f64 = row.iter().zip(wr).map(|(&a, &b)| a as f64 * b as f64).sum();
                out.push((acc + self.bias[o] as f64) as f32);
            }
        }
        Tensor::new(vec![rows, c_out], out)?.with_channel_axis(1)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.linear(&self.normalize(x)?)
    }

    /// Writes `<stem>.json` with the weight stored beside it as
    /// `<stem>_weight.qvdt`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<Vec<std::path::PathBuf>> {
        let weight_name = format!("{stem}_weight.qvdt");
        let weight_path = dir.join(&weight_name);
        write_tensor(&self.weight, &weight_path)?;
        let doc = AffineBlockJson {
            norm_gain: self.norm_gain.clone(),
            norm_bias: self.norm_bias.clone(),
            bias: self.bias.clone(),
            weight: weight_name,
        };
        let json_path = dir.join(format!("{stem}.json"));
        write_json(&json_path, &doc)?;
        Ok(vec![json_path, weight_path])
    }

    /// Loads a block JSON; the weight path resolves relative to the JSON file.
    pub fn load(path: &Path) -> Result<Self> {
        let doc: AffineBlockJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let weight = read_tensor(base.join(&doc.weight))?;
        AffineBlock::new(doc.norm_gain, doc.norm_bias, weight, doc.bias)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineBlockJson {
    pub norm_gain: Vec<f32>,
    pub norm_bias: Vec<f32>,
    pub bias: Vec<f32>,
    /// QVDT file holding the `C_out x C_in` weight.
    pub weight: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        let w = Tensor::zeros(vec![2, 3]).unwrap();
        assert!(AffineBlock::new(vec![1.0; 3], vec![0.0; 3], w.clone(), vec![0.0; 2]).is_ok());
        assert!(AffineBlock::new(vec![1.0; 2], vec![0.0; 3], w.clone(), vec![0.0; 2]).is_err());
        assert!(AffineBlock::new(vec![1.0; 3], vec![0.0; 3], w, vec![0.0; 3]).is_err());
    }

    #[test]
    fn layer_norm_and_linear() {
        let mut w = vec![0.0f32; 4];
        w[0] = 1.0;
        w[3] = 2.0;
        let b = AffineBlock::new(vec![1.0, 1.0], vec![0.5, -0.5], Tensor::new(vec![2, 2], w).unwrap(), vec![0.0, 1.0])
            .unwrap();
        let x = Tensor::new(vec![1, 2], vec![3.0, 1.0]).unwrap();
        let a = b.normalize(&x).unwrap();
        // mean 2, var 1
        let k = 1.0 / (1.0 + LAYER_NORM_EPS).sqrt();
        assert!((a.data()[0] as f64 - (k + 0.5)).abs() < 1e-6);
        assert!((a.data()[1] as f64 - (-k - 0.5)).abs() < 1e-6);
        let y = b.forward(&x).unwrap();
        assert!((y.data()[1] as f64 - (2.0 * (-k - 0.5) + 1.0)).abs() < 1e-6);
        assert!(b.forward(&Tensor::zeros(vec![1, 3]).unwrap()).is_err());
    }

    #[test]
    fn save_load() {
        let dir = tempfile::tempdir().unwrap();
        let b = AffineBlock::new(
            vec![1.0, 0.25],
            vec![0.5, -0.5],
            Tensor::new(vec![1, 2], vec![0.3, -0.7]).unwrap(),
            vec![0.1],
        )
        .unwrap();
        b.save(dir.path(), "block").unwrap();
        assert_eq!(AffineBlock::load(&dir.path().join("block.json")).unwrap(), b);
    }
}
