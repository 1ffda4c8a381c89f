//! Level-occupancy and distinct-value counts used by the reports.

use std::collections::BTreeSet;

use crate::error::{QvdError, Result};
use crate::quant::{quantize, QuantParams};
use crate::tensor::Tensor;

/// Flat indices of the central `fraction` of `values` by rank: sorts by
/// value (ties by index) and drops `floor((1 - fraction) / 2 * n)` entries
/// from each end.
pub fn middle_indices(values: &[f32], fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(QvdError::arg(format!("fraction must be in (0, 1], got {fraction}")));
    }
    let n = values.len();
    // the epsilon keeps e.g. 0.05 * 20 from flooring to 0
    let trim = ((1.0 - fraction) / 2.0 * n as f64 + 1e-9).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    Ok(order[trim..n - trim].to_vec())
}

/// Distinct magnitude codes that the central `fraction` of `x` maps to.
/// Log-family signs are ignored, so `+l` and `-l` count as one level.
pub fn level_occupancy(x: &Tensor, params: &QuantParams, fraction: f64) -> Result<usize> {
    let q = quantize(x, params)?;
    let idx = middle_indices(x.data(), fraction)?;
    Ok(idx.iter().map(|&i| q.codes[i]).collect::<BTreeSet<u32>>().len())
}

/// Distinct values among `indices` of `values` (or all of them), with
/// `-0.0` and `0.0` counted once.
pub fn distinct_values(values: &[f32], indices: Option<&[usize]>) -> usize {
    let key = |v: f32| if v == 0.0 { 0u32 } else { v.to_bits() };
    match indices {
        Some(idx) => idx.iter().map(|&i| key(values[i])).collect::<BTreeSet<_>>().len(),
        None => values.iter().map(|&v| key(v)).collect::<BTreeSet<_>>().len(),
    }
}
