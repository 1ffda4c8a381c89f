//! Dense f32 tensors, per-channel statistics, error metrics and the QVDT
//! file format.

mod io;
pub(crate) mod stats;

pub use io::{decode_tensor, encode_tensor, read_tensor, write_tensor, QVDT_MAGIC, QVDT_VERSION};
pub use stats::{channel_stats, cosine_similarity, coverage_ratio, mse, sse, ChannelStats};

use crate::error::{QvdError, Result};

/// Maximum rank the file format can carry.
pub const MAX_RANK: usize = 8;

/// Row-major dense tensor of finite `f32` values.
///
/// Immutable once built; every constructor checks the shape/length
/// invariant and rejects NaN or infinite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
    channel_axis: Option<usize>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() || shape.len() > MAX_RANK {
            return Err(QvdError::arg(format!(
                "rank must be in 1..={MAX_RANK}, got {}",
                shape.len()
            )));
        }
        if shape.contains(&0) {
            return Err(QvdError::arg(format!("zero-sized dimension in shape {shape:?}")));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(QvdError::arg(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(QvdError::arg(format!("non-finite value at flat index {i}")));
        }
        Ok(Tensor {
            shape,
            data,
            channel_axis: None,
        })
    }

    pub fn from_vec(data: Vec<f32>) -> Result<Self> {
        Tensor::new(vec![data.len()], data)
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let n = shape.iter().product();
        Tensor::new(shape, vec![0.0; n])
    }

    /// Tag `axis` as the channel dimension.
    pub fn with_channel_axis(mut self, axis: usize) -> Result<Self> {
        self.check_axis(axis)?;
        self.channel_axis = Some(axis);
        Ok(self)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn channel_axis(&self) -> Option<usize> {
        self.channel_axis
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Builds a tensor of the same shape and channel axis from new values.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<Tensor> {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn with_data(&self, data: Vec<f32>) -> Result<Tensor> {
        let mut t = Tensor::new(self.shape.clone(), data)?;
        t.channel_axis = self.channel_axis;
        Ok(t)
    }

    pub(crate) fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.shape.len() {
            return Err(QvdError::arg(format!(
                "axis {axis} out of range for rank {}",
                self.shape.len()
            )));
        }
        Ok(())
    }

    /// Product of the dimensions after `axis`; the flat-index stride of `axis`.
    pub(crate) fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    /// Channel index of each flat position along `axis`.
    pub(crate) fn channel_of(&self, axis: usize) -> impl Fn(usize) -> usize {
        let stride = self.stride(axis);
        let dim = self.shape[axis];
        move |i| (i / stride) % dim
    }

    pub(crate) fn same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(QvdError::arg(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f32 {
        self.data.iter().fold(0.0f32, |m, v| m.max(v.abs()))
    }
}
