use serde::{Deserialize, Serialize};

use crate::error::{QvdError, Result};
use crate::temporal::TemporalTrajectory;

use super::{reflect, stream, unit, uniform_in};

/// Temporal features concentrated in a narrow band around zero with a few
/// sign-symmetric log-uniform outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkewedTemporalSpec {
    pub steps: usize,
    pub dim: usize,
    pub dense_fraction: f64,
    pub dense_halfwidth: f64,
    pub outlier_scale: f64,
    /// Weight of the fresh draw added at each step.
    pub step_noise: f64,
    pub seed: u64,
}

impl Default for SkewedTemporalSpec {
    fn default() -> Self {
        SkewedTemporalSpec {
            steps: 25,
            dim: 320,
            dense_fraction: 0.9,
            dense_halfwidth: 0.002,
            outlier_scale: 8.0,
            step_noise: 0.1,
            seed: 42,
        }
    }
}

impl SkewedTemporalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(QvdError::arg("steps must be at least 2"));
        }
        if self.dim == 0 {
            return Err(QvdError::arg("dim must be positive"));
        }
        if !(self.dense_fraction > 0.0 && self.dense_fraction <= 1.0) {
            return Err(QvdError::arg("dense_fraction must be in (0, 1]"));
        }
        if !(self.dense_halfwidth > 0.0 && self.dense_halfwidth.is_finite()) {
            return Err(QvdError::arg("dense_halfwidth must be positive"));
        }
        if self.dense_count() < self.dim && !(self.outlier_scale > self.outlier_floor()) {
            return Err(QvdError::arg(format!(
                "outlier_scale must exceed 10 * dense_halfwidth = {}",
                self.outlier_floor()
            )));
        }
        if !(0.0..=1.0).contains(&self.step_noise) {
            return Err(QvdError::arg("step_noise must be in [0, 1]"));
        }
        Ok(())
    }

    /// `round(dense_fraction * dim)` entries per step.
    pub fn dense_count(&self) -> usize {
        ((self.dense_fraction * self.dim as f64).round() as usize).min(self.dim)
    }

    pub fn outlier_floor(&self) -> f64 {
        self.dense_halfwidth * 10.0
    }
}

/// Which flat positions hold outliers and with which sign. Fixed for the
/// whole trajectory.
fn outlier_layout(spec: &SkewedTemporalSpec) -> Vec<i8> {
    let n_out = spec.dim - spec.dense_count();
    // rank positions by a per-position key; the n_out smallest are outliers
    let mut order: Vec<usize> = (0..spec.dim).collect();
    let keys: Vec<f64> = (0..spec.dim)
        .map(|i| unit(spec.seed, stream::LAYOUT, i as u64))
        .collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    let mut layout = vec![0i8; spec.dim];
    let negatives = n_out / 2;
    for (rank, &pos) in order[..n_out].iter().enumerate() {
        layout[pos] = if rank < negatives { -1 } else { 1 };
    }
    layout
}

/// Generates a `steps x [dim]` trajectory.
///
/// Step 1 draws dense entries uniformly in `[-h, h]` and outlier magnitudes
/// log-uniformly in `[10h, outlier_scale]`. Each later step adds
/// `step_noise` times a fresh centred draw to the previous value (dense
/// entries linearly, outliers in log-magnitude) and reflects the result back
/// into its band, so the dense/outlier split is exact at every step.
pub fn gen_skewed_trajectory(spec: &SkewedTemporalSpec) -> Result<TemporalTrajectory> {
    spec.validate()?;
    let h = spec.dense_halfwidth;
    let (llo, lhi) = (spec.outlier_floor().ln(), spec.outlier_scale.ln());
    let layout = outlier_layout(spec);
    let seed = spec.seed;

    // dense entries hold the value itself, outliers hold ln|value|
    let mut state: Vec<f64> = layout
        .iter()
        .enumerate()
        .map(|(i, &sign)| match sign {
            0 => uniform_in(seed, stream::at(stream::DENSE, 0), i as u64, -h, h),
            _ => uniform_in(seed, stream::at(stream::OUTLIER, 0), i as u64, llo, lhi),
        })
        .collect();

    let mut flat = Vec::with_capacity(spec.steps * spec.dim);
    for step in 0..spec.steps {
        if step > 0 {
            for (i, v) in state.iter_mut().enumerate() {
                *v = if layout[i] == 0 {
                    let f = uniform_in(seed, stream::at(stream::DENSE, step), i as u64, -h, h);
                    reflect(*v + spec.step_noise * f, -h, h)
                } else {
                    let half = (lhi - llo) / 2.0;
                    let f = uniform_in(seed, stream::at(stream::OUTLIER, step), i as u64, -half, half);
                    reflect(*v + spec.step_noise * f, llo, lhi)
                };
            }
        }
        flat.extend(state.iter().zip(&layout).map(|(&v, &sign)| match sign {
            0 => v as f32,
            s => (s as f64 * v.exp()) as f32,
        }));
    }
    TemporalTrajectory::from_flat(flat, spec.steps, &[spec.dim])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(v: &[f32]) -> Vec<f32> {
        let mut v = v.to_vec();
        v.sort_by(f32::total_cmp);
        v
    }

    #[test]
    fn defaults_and_validation() {
        let s = SkewedTemporalSpec::default();
        assert!(s.validate().is_ok());
        assert_eq!(s.dense_count(), 288);
        assert!(SkewedTemporalSpec { steps: 1, ..s.clone() }.validate().is_err());
        assert!(SkewedTemporalSpec { dense_fraction: 0.0, ..s.clone() }.validate().is_err());
        assert!(SkewedTemporalSpec { dense_halfwidth: -1.0, ..s.clone() }.validate().is_err());
        assert!(SkewedTemporalSpec { outlier_scale: 0.01, ..s.clone() }.validate().is_err());
        assert!(gen_skewed_trajectory(&SkewedTemporalSpec { steps: 0, ..s }).is_err());
    }

    #[test]
    fn all_dense_stays_in_band() {
        let s = SkewedTemporalSpec { dense_fraction: 1.0, ..Default::default() };
        let t = gen_skewed_trajectory(&s).unwrap();
        assert!(t.flatten().iter().all(|v| v.abs() <= 0.002));
    }

    #[test]
    fn exact_split_per_step() {
        let s = SkewedTemporalSpec { dim: 101, dense_fraction: 0.83, ..Default::default() };
        let t = gen_skewed_trajectory(&s).unwrap();
        let dense = s.dense_count();
        assert_eq!(dense, 84);
        for step in t.steps() {
            let d = step.data();
            assert_eq!(d.iter().filter(|v| v.abs() <= 0.002).count(), dense);
            let outl: Vec<f32> = d.iter().copied().filter(|v| v.abs() > 0.002).collect();
            assert_eq!(outl.iter().filter(|&&v| v < 0.0).count(), (101 - dense) / 2);
            assert!(outl.iter().all(|v| (0.02f32 - 1e-6..=8.0 + 1e-5).contains(&v.abs())));
        }
    }

    #[test]
    fn percentile_band_of_defaults() {
        // 5th/95th percentiles as the edges of the rank-trimmed middle 90%
        let t = gen_skewed_trajectory(&SkewedTemporalSpec::default()).unwrap();
        for step in t.steps() {
            let v = sorted(step.data());
            let trim = v.len() / 20;
            let (lo, hi) = (v[trim], v[v.len() - 1 - trim]);
            assert!(lo >= -0.0024 && hi <= 0.0024, "{lo} {hi}");
        }
    }

    #[test]
    fn adjacent_steps_are_close() {
        let t = gen_skewed_trajectory(&SkewedTemporalSpec::default()).unwrap();
        for w in t.steps().windows(2) {
            for (&a, &b) in w[0].data().iter().zip(w[1].data()) {
                if a.abs() <= 0.002 {
                    assert!((a - b).abs() <= 0.2 * 0.002 + 1e-9);
                } else {
                    assert!((b / a) > 0.0);
                }
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let s = SkewedTemporalSpec::default();
        let a = gen_skewed_trajectory(&s).unwrap().flatten();
        let b = gen_skewed_trajectory(&s).unwrap().flatten();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = gen_skewed_trajectory(&SkewedTemporalSpec { seed: 43, ..s }).unwrap().flatten();
        assert_ne!(a, c);
    }
}
