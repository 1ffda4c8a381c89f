//! Synthetic test bed: skewed temporal trajectories, inter-channel
//! activations, a toy temporal-injection block and the near-zero / outlier
//! perturbations.
//!
//! All randomness is counter-based: a value is a pure function of
//! `(seed, stream, index)`, so generation order and threading never change
//! the output.

mod interchannel;
mod perturb;
mod skewed;
mod toy;

pub use interchannel::{channel_midpoints, gen_interchannel, InterChannelSpec};
pub use perturb::{
    outlier_interval, perturb_outliers, perturb_outliers_step, perturb_outliers_with, perturb_zero_interval,
    perturb_zero_interval_step, zero_interval, NOISE_HALFWIDTH,
};
pub use skewed::{gen_skewed_trajectory, SkewedTemporalSpec};
pub use toy::{run_block, temporal_inject, ToyBlock, ToyBlockSpec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream tags keep the draws of unrelated quantities independent.
pub(crate) mod stream {
    pub const LAYOUT: u64 = 1;
    pub const DENSE: u64 = 2;
    pub const OUTLIER: u64 = 3;
    pub const MIDPOINT: u64 = 4;
    pub const SAMPLE: u64 = 5;
    pub const NOISE: u64 = 6;
    pub const BLOCK: u64 = 7;
    pub const FRAMES: u64 = 8;

    /// Stream id for `tag` at `step`.
    pub fn at(tag: u64, step: usize) -> u64 {
        (tag << 32) | step as u64
    }
}

/// Uniform draw in `[0, 1)` addressed by `(seed, stream, index)`.
pub(crate) fn unit(seed: u64, stream: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(index as u128 * 2);
    rng.gen::<f64>()
}

pub(crate) fn uniform_in(seed: u64, stream: u64, index: u64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(seed, stream, index)
}

/// Folds `v` back into `[lo, hi]` by mirroring at the edges.
pub(crate) fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    if w <= 0.0 {
        return lo;
    }
    let m = (v - lo).rem_euclid(2.0 * w);
    if m <= w {
        lo + m
    } else {
        hi - (m - w)
    }
}
