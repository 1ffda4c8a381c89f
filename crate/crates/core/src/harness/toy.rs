use serde::{Deserialize, Serialize};

use crate::error::{QvdError, Result};
use crate::scri::{quantized_linear, AffineBlock, BlockQuantConfig};
use crate::tensor::Tensor;

use super::{channel_midpoints, stream, uniform_in, InterChannelSpec};

/// Shape and seed of a [`ToyBlock`]. The normalization gain/bias are chosen
/// so post-norm activations look like [`InterChannelSpec`] data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyBlockSpec {
    pub frames: usize,
    pub channels: usize,
    pub out_channels: usize,
    pub temporal_dim: usize,
    pub center_spread: f64,
    pub width_fraction: f64,
    pub seed: u64,
}

impl Default for ToyBlockSpec {
    fn default() -> Self {
        ToyBlockSpec {
            frames: 16,
            channels: 64,
            out_channels: 64,
            temporal_dim: 32,
            center_spread: 4.0,
            width_fraction: 0.05,
            seed: 42,
        }
    }
}

impl ToyBlockSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 || self.out_channels == 0 || self.temporal_dim == 0 {
            return Err(QvdError::arg("frames, out_channels and temporal_dim must be positive"));
        }
        self.interchannel().validate()
    }

    fn interchannel(&self) -> InterChannelSpec {
        InterChannelSpec {
            channels: self.channels,
            samples_per_channel: self.frames,
            center_spread: self.center_spread,
            center: self.center_spread,
            width_fraction: self.width_fraction,
            seed: self.seed,
        }
    }

    /// `frames x channels` input, uniform in `[-1, 1]`.
    pub fn gen_frames(&self) -> Result<Tensor> {
        self.validate()?;
        let n = self.frames * self.channels;
        let data = (0..n)
            .map(|i| uniform_in(self.seed, stream::FRAMES, i as u64, -1.0, 1.0) as f32)
            .collect();
        Tensor::new(vec![self.frames, self.channels], data)?.with_channel_axis(1)
    }
}

/// Normalization + temporal injection + linear layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyBlock {
    pub block: AffineBlock,
    /// `channels x temporal_dim`.
    pub proj_weight: Tensor,
    pub proj_bias: Vec<f32>,
}

impl ToyBlock {
    pub fn new(block: AffineBlock, proj_weight: Tensor, proj_bias: Vec<f32>) -> Result<Self> {
        if proj_weight.rank() != 2 || proj_weight.shape()[0] != block.channels() {
            return Err(QvdError::arg(format!(
                "projection must be {} x temporal_dim, got {:?}",
                block.channels(),
                proj_weight.shape()
            )));
        }
        if proj_bias.len() != block.channels() || proj_bias.iter().any(|v| !v.is_finite()) {
            return Err(QvdError::arg("projection bias must be finite with one entry per channel"));
        }
        Ok(ToyBlock {
            block,
            proj_weight,
            proj_bias,
        })
    }

    pub fn from_spec(spec: &ToyBlockSpec) -> Result<Self> {
        spec.validate()?;
        let ic = spec.interchannel();
        let (c, o, d) = (spec.channels, spec.out_channels, spec.temporal_dim);
        let draw = |tag: u64, n: usize, half: f64| -> Vec<f32> {
            (0..n)
                .map(|i| uniform_in(spec.seed, stream::at(stream::BLOCK, tag as usize), i as u64, -half, half) as f32)
                .collect()
        };
        // a uniform row normalizes to roughly [-sqrt 3, sqrt 3]
        let gain = (ic.channel_width() / (2.0 * 3f64.sqrt())) as f32;
        let norm_bias = channel_midpoints(&ic)?.into_iter().map(|m| m as f32).collect();
        let weight = Tensor::new(vec![o, c], draw(0, o * c, 1.0 / (c as f64).sqrt()))?;
        let bias = draw(1, o, 0.1);
        let block = AffineBlock::new(vec![gain; c], norm_bias, weight, bias)?;
        let proj = Tensor::new(vec![c, d], draw(2, c * d, 1.0 / (d as f64).sqrt()))?;
        ToyBlock::new(block, proj, vec![0.0; c])
    }

    pub fn temporal_dim(&self) -> usize {
        self.proj_weight.shape()[1]
    }

    /// `g(t_emb) = P t_emb + p`.
    pub fn project(&self, t_emb: &Tensor) -> Result<Vec<f32>> {
        let d = self.temporal_dim();
        if t_emb.len() != d {
            return Err(QvdError::arg(format!(
                "temporal feature has {} entries, projection expects {d}",
                t_emb.len()
            )));
        }
        let e = t_emb.data();
        Ok(self
            .proj_weight
            .data()
            .chunks_exact(d)
            .zip(&self.proj_bias)
            .map(|(row, &b)| {
                let acc: f64 = row.iter().zip(e).map(|(&w, &v)| w as f64 * v as f64).sum();
                (acc + b as f64) as f32
            })
            .collect())
    }
}

/// Adds the single projected temporal feature to every frame.
pub fn temporal_inject(frames: &Tensor, t_emb: &Tensor, block: &ToyBlock) -> Result<Tensor> {
    let c = block.block.channels();
    if frames.rank() != 2 || frames.shape()[1] != c {
        return Err(QvdError::arg(format!(
            "frames must be K x {c}, got {:?}",
            frames.shape()
        )));
    }
    let g = block.project(t_emb)?;
    let data = frames
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| v + g[i % c])
        .collect();
    frames.with_data(data)
}

/// Normalization, temporal injection, linear layer. With `quant`, the
/// injected activations are fake-quantized per-tensor (MSE uniform) and the
/// weight per output channel (MinMax).
pub fn run_block(
    block: &ToyBlock,
    frames: &Tensor,
    t_emb: &Tensor,
    quant: Option<&BlockQuantConfig>,
) -> Result<Tensor> {
    let acts = temporal_inject(&block.block.normalize(frames)?, t_emb, block)?;
    match quant {
        None => block.block.linear(&acts),
        Some(cfg) => quantized_linear(&block.block, &acts, cfg),
    }
}
