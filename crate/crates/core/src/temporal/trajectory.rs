use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{QvdError, Result};
use crate::fsutil::write_json;
use crate::tensor::{read_tensor, write_tensor, Tensor};

/// Temporal features for steps `1..=T`, in denoising order.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalTrajectory {
    steps: Vec<Tensor>,
}

impl TemporalTrajectory {
    pub fn new(steps: Vec<Tensor>) -> Result<Self> {
        if steps.len() < 2 {
            return Err(QvdError::arg(format!(
                "a trajectory needs at least 2 steps, got {}",
                steps.len()
            )));
        }
        let shape = steps[0].shape();
        if let Some(i) = steps.iter().position(|s| s.shape() != shape) {
            return Err(QvdError::arg(format!(
                "step {} has shape {:?}, expected {shape:?}",
                i + 1,
                steps[i].shape()
            )));
        }
        Ok(TemporalTrajectory { steps })
    }

    /// Rebuilds a trajectory from a flat step-major buffer.
    pub fn from_flat(flat: Vec<f32>, steps: usize, step_shape: &[usize]) -> Result<Self> {
        let dim: usize = step_shape.iter().product();
        if flat.len() != steps * dim {
            return Err(QvdError::arg("flat buffer does not match steps x shape"));
        }
        let tensors = flat
            .chunks_exact(dim.max(1))
            .map(|c| Tensor::new(step_shape.to_vec(), c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        TemporalTrajectory::new(tensors)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Step `t`, 1-based.
    pub fn step(&self, t: usize) -> &Tensor {
        &self.steps[t - 1]
    }

    pub fn steps(&self) -> &[Tensor] {
        &self.steps
    }

    pub fn step_shape(&self) -> &[usize] {
        self.steps[0].shape()
    }

    pub fn step_len(&self) -> usize {
        self.steps[0].len()
    }

    /// All values, step-major.
    pub fn flatten(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.len() * self.step_len());
        for s in &self.steps {
            out.extend_from_slice(s.data());
        }
        out
    }

    pub fn map_steps(&self, mut f: impl FnMut(usize, &Tensor) -> Result<Tensor>) -> Result<Self> {
        let steps = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| f(i + 1, s))
            .collect::<Result<Vec<_>>>()?;
        TemporalTrajectory::new(steps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub steps: usize,
    pub shape: Vec<usize>,
}

fn step_file(t: usize) -> String {
    format!("step_{t:04}.qvdt")
}

/// Writes `step_0001.qvdt ..` plus `manifest.json` into `dir`.
pub fn save_trajectory(traj: &TemporalTrajectory, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(traj.len() + 1);
    for (i, s) in traj.steps().iter().enumerate() {
        let p = dir.join(step_file(i + 1));
        write_tensor(s, &p)?;
        written.push(p);
    }
    let manifest = TrajectoryManifest {
        steps: traj.len(),
        shape: traj.step_shape().to_vec(),
    };
    let p = dir.join("manifest.json");
    write_json(&p, &manifest)?;
    written.push(p);
    Ok(written)
}

pub fn load_trajectory(dir: &Path) -> Result<TemporalTrajectory> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: TrajectoryManifest = serde_json::from_str(&text)?;
    let steps = (1..=manifest.steps)
        .map(|t| read_tensor(dir.join(step_file(t))))
        .collect::<Result<Vec<_>>>()?;
    if let Some(s) = steps.iter().find(|s| s.shape() != manifest.shape.as_slice()) {
        return Err(QvdError::arg(format!(
            "step shape {:?} disagrees with manifest shape {:?}",
            s.shape(),
            manifest.shape
        )));
    }
    TemporalTrajectory::new(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_or_ragged() {
        let a = Tensor::from_vec(vec![1.0, 2.0]).unwrap();
        let b = Tensor::from_vec(vec![1.0]).unwrap();
        assert!(TemporalTrajectory::new(vec![a.clone()]).is_err());
        assert!(TemporalTrajectory::new(vec![a, b]).is_err());
    }

    #[test]
    fn disk_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = TemporalTrajectory::from_flat((0..12).map(|v| v as f32 * 0.5).collect(), 3, &[4]).unwrap();
        let files = save_trajectory(&t, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        assert!(dir.path().join("step_0003.qvdt").exists());
        assert_eq!(load_trajectory(dir.path()).unwrap(), t);
    }
}
