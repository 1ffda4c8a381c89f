use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QvdError, Result};
use crate::quant::{check_bits, hidi_code, hidi_value, max_code, HiDiParams};

use super::{composite_k_flat, TemporalTrajectory, DEFAULT_EPS, DEFAULT_WINDOW};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct HtdqSearchConfig {
    /// TDScore adjacency window.
    pub window: usize,
    pub bits: u32,
    /// Scale candidates are `max|T| * 2^(s_step_exponent * i)`.
    pub s_step_exponent: f64,
    /// Evenly spaced shifts across the interquartile range; 0 is always added.
    pub beta_grid_size: usize,
    pub eps: f64,
}

impl Default for HtdqSearchConfig {
    fn default() -> Self {
        HtdqSearchConfig {
            window: DEFAULT_WINDOW,
            bits: 8,
            s_step_exponent: 0.05,
            beta_grid_size: 16,
            eps: DEFAULT_EPS,
        }
    }
}

impl HtdqSearchConfig {
    pub fn validate(&self) -> Result<()> {
        check_bits(self.bits)?;
        if self.window == 0 {
            return Err(QvdError::arg("window must be at least 1"));
        }
        if !(self.s_step_exponent > 0.0 && self.s_step_exponent.is_finite()) {
            return Err(QvdError::arg("s_step_exponent must be positive"));
        }
        if self.beta_grid_size == 0 {
            return Err(QvdError::arg("beta_grid_size must be positive"));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(QvdError::arg("eps must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HtdqCandidate {
    pub s_index: usize,
    pub beta_index: usize,
    pub s: f64,
    pub beta: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct HtdqSearch {
    pub params: HiDiParams,
    pub objective: f64,
    pub s_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    /// Every candidate, scale-major.
    pub trace: Vec<HtdqCandidate>,
}

/// Scale candidates from `max|T|` upward in steps of `2^step`, stopping at
/// `(min|T| + eps) / 2^(1 - 2^bits)`, where the smallest magnitude would
/// land on the deepest code.
pub fn s_grid(values: &[f32], cfg: &HtdqSearchConfig) -> Result<Vec<f64>> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &v in values {
        let a = (v as f64).abs();
        lo = lo.min(a);
        hi = hi.max(a);
    }
    if values.is_empty() || hi == 0.0 {
        return Err(QvdError::DegenerateRange("trajectory is identically zero".into()));
    }
    // log2 of the upper bound; the bound itself overflows f64 for wide codes
    let log2_upper = (lo + cfg.eps).log2() + (max_code(cfg.bits) as f64);
    let span = log2_upper - hi.log2();
    if !(span >= 0.0) {
        return Err(QvdError::Search(format!(
            "empty scale range: max|T| = {hi} exceeds the upper bound 2^{log2_upper}"
        )));
    }
    let count = (span / cfg.s_step_exponent).floor() as usize + 1;
    let grid: Vec<f64> = (0..count)
        .map(|i| hi * (cfg.s_step_exponent * i as f64).exp2())
        .take_while(|s| s.is_finite())
        .collect();
    Ok(grid)
}

/// Type-7 (linear interpolation) quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `{0}` followed by `size` points spread evenly over `[q25, q75]`.
pub fn beta_grid(values: &[f32], size: usize) -> Result<Vec<f64>> {
    if values.is_empty() || size == 0 {
        return Err(QvdError::arg("beta grid needs values and a positive size"));
    }
    let mut sorted: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let q25 = quantile_sorted(&sorted, 0.25);
    let q75 = quantile_sorted(&sorted, 0.75);
    let mut grid = Vec::with_capacity(size + 1);
    grid.push(0.0);
    if size == 1 {
        grid.push(q25);
    } else {
        let denom = (size - 1) as f64;
        grid.extend((0..size).map(|j| q25 + (q75 - q25) * j as f64 / denom));
    }
    Ok(grid)
}

fn roundtrip_flat(flat: &[f32], p: &HiDiParams) -> Vec<f32> {
    flat.iter()
        .map(|&v| {
            let (c, s) = hidi_code(v, p);
            hidi_value(c, s, p)
        })
        .collect()
}

/// Quantize-dequantize every step with the same HiDi parameters.
pub fn hidi_roundtrip(traj: &TemporalTrajectory, p: &HiDiParams) -> Result<TemporalTrajectory> {
    p.validate()?;
    TemporalTrajectory::from_flat(roundtrip_flat(&traj.flatten(), p), traj.len(), traj.step_shape())
}

/// Exhaustive search of the `(s, beta)` grid minimizing the composite
/// objective of the round-tripped trajectory. Ties go to the lowest scale
/// index, then the lowest shift index.
pub fn search_hidi_params(traj: &TemporalTrajectory, cfg: &HtdqSearchConfig) -> Result<HtdqSearch> {
    cfg.validate()?;
    let flat = traj.flatten();
    let s_grid = s_grid(&flat, cfg)?;
    let beta_grid = beta_grid(&flat, cfg.beta_grid_size)?;
    search_on_grid(traj, cfg, s_grid, beta_grid)
}

pub(crate) fn search_on_grid(
    traj: &TemporalTrajectory,
    cfg: &HtdqSearchConfig,
    s_grid: Vec<f64>,
    beta_grid: Vec<f64>,
) -> Result<HtdqSearch> {
    if s_grid.is_empty() || beta_grid.is_empty() {
        return Err(QvdError::Search("empty candidate grid".into()));
    }
    let flat = traj.flatten();
    let (steps, dim) = (traj.len(), traj.step_len());
    let nb = beta_grid.len();
    let objectives = (0..s_grid.len() * nb)
        .into_par_iter()
        .map(|idx| {
            let p = HiDiParams::new(s_grid[idx / nb], beta_grid[idx % nb], cfg.bits)?;
            let hat = roundtrip_flat(&flat, &p);
            composite_k_flat(&flat, &hat, steps, dim, cfg.window, cfg.eps)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut best = 0;
    for (i, &k) in objectives.iter().enumerate() {
        if k < objectives[best] {
            best = i;
        }
    }
    let trace = objectives
        .iter()
        .enumerate()
        .map(|(i, &objective)| HtdqCandidate {
            s_index: i / nb,
            beta_index: i % nb,
            s: s_grid[i / nb],
            beta: beta_grid[i % nb],
            objective,
        })
        .collect();
    Ok(HtdqSearch {
        params: HiDiParams::new(s_grid[best / nb], beta_grid[best % nb], cfg.bits)?,
        objective: objectives[best],
        s_grid,
        beta_grid,
        trace,
    })
}
