//! Post-training quantization calibration toolkit.
//!
//! - [`tensor`]: dense tensors, channel statistics, metrics, QVDT files
//! - [`quant`]: uniform, log2 and HiDi quantizers, MinMax/MSE calibration
//! - [`temporal`]: temporal discriminability score and the (s, beta) search
//! - [`scri`]: per-channel range integration, its t search and layer folding
//! - [`harness`]: synthetic distributions, toy block, perturbations
//! - [`cli`]: command implementations behind the `qvd` binary

pub mod analysis;
pub mod cli;
pub mod error;
pub mod harness;
mod fsutil;
pub mod quant;
pub mod scri;
pub mod temporal;
pub mod tensor;

pub use error::{QvdError, Result};
pub use tensor::Tensor;
