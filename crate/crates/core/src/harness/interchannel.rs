use serde::{Deserialize, Serialize};

use crate::error::{QvdError, Result};
use crate::tensor::Tensor;

use super::{stream, uniform_in};

/// Activations whose channels each occupy a narrow slice of a wide global
/// range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterChannelSpec {
    pub channels: usize,
    pub samples_per_channel: usize,
    /// Half-width of the band the channel ranges are spread over.
    pub center_spread: f64,
    /// Middle of that band. The default puts the band in `[0, 2 * spread]`
    /// so every channel max is positive.
    pub center: f64,
    pub width_fraction: f64,
    pub seed: u64,
}

impl Default for InterChannelSpec {
    fn default() -> Self {
        InterChannelSpec {
            channels: 64,
            samples_per_channel: 256,
            center_spread: 4.0,
            center: 4.0,
            width_fraction: 0.05,
            seed: 42,
        }
    }
}

impl InterChannelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.channels < 2 {
            return Err(QvdError::arg("channels must be at least 2"));
        }
        if self.samples_per_channel == 0 {
            return Err(QvdError::arg("samples_per_channel must be positive"));
        }
        if !(self.center_spread > 0.0 && self.center_spread.is_finite() && self.center.is_finite()) {
            return Err(QvdError::arg("center_spread must be positive and center finite"));
        }
        if !(self.width_fraction > 0.0 && self.width_fraction <= 1.0) {
            return Err(QvdError::arg("width_fraction must be in (0, 1]"));
        }
        Ok(())
    }

    /// Absolute width of each channel's range.
    pub fn channel_width(&self) -> f64 {
        self.width_fraction * 2.0 * self.center_spread
    }
}

/// Per-channel midpoints, uniform over the band shrunk by half a channel
/// width on each side so every channel fits inside it.
pub fn channel_midpoints(spec: &InterChannelSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let half = spec.channel_width() / 2.0;
    let lo = spec.center - spec.center_spread + half;
    let hi = spec.center + spec.center_spread - half;
    Ok((0..spec.channels)
        .map(|c| uniform_in(spec.seed, stream::MIDPOINT, c as u64, lo, hi))
        .collect())
}

/// `samples x channels` tensor, channel axis 1.
pub fn gen_interchannel(spec: &InterChannelSpec) -> Result<Tensor> {
    let mids = channel_midpoints(spec)?;
    let half = spec.channel_width() / 2.0;
    let c = spec.channels;
    let data = (0..spec.samples_per_channel * c)
        .map(|i| {
            let m = mids[i % c];
            uniform_in(spec.seed, stream::SAMPLE, i as u64, m - half, m + half) as f32
        })
        .collect();
    Tensor::new(vec![spec.samples_per_channel, c], data)?.with_channel_axis(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{channel_stats, coverage_ratio};

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn validation() {
        let s = InterChannelSpec::default();
        assert!(s.validate().is_ok());
        assert!(InterChannelSpec { channels: 1, ..s.clone() }.validate().is_err());
        assert!(InterChannelSpec { width_fraction: 0.0, ..s.clone() }.validate().is_err());
        assert!(gen_interchannel(&InterChannelSpec { center_spread: 0.0, ..s }).is_err());
    }

    #[test]
    fn channels_stay_in_their_slice() {
        let s = InterChannelSpec::default();
        let x = gen_interchannel(&s).unwrap();
        let mids = channel_midpoints(&s).unwrap();
        let st = channel_stats(&x, 1).unwrap();
        let half = s.channel_width() / 2.0;
        for c in 0..s.channels {
            assert!(st.min[c] as f64 >= mids[c] - half - 1e-6);
            assert!(st.max[c] as f64 <= mids[c] + half + 1e-6);
            assert!(st.max[c] > 0.0);
        }
        assert!(st.global_min >= 0.0 && st.global_max <= 8.0);
    }

    #[test]
    fn default_coverage_is_low() {
        let x = gen_interchannel(&InterChannelSpec::default()).unwrap();
        let cov = mean(&coverage_ratio(&x, 1).unwrap());
        assert!(cov <= 0.10, "{cov}");
    }

    #[test]
    fn full_width_single_midpoint_covers_everything() {
        let s = InterChannelSpec { width_fraction: 1.0, samples_per_channel: 2000, ..Default::default() };
        let mids = channel_midpoints(&s).unwrap();
        assert!(mids.iter().all(|&m| m == s.center));
        let cov = coverage_ratio(&gen_interchannel(&s).unwrap(), 1).unwrap();
        assert!(cov.iter().all(|&c| c > 0.99), "{cov:?}");
    }

    #[test]
    fn deterministic() {
        let s = InterChannelSpec::default();
        assert_eq!(gen_interchannel(&s).unwrap(), gen_interchannel(&s).unwrap());
    }
}
