//! Perturb a temporal feature two ways (zero the values near zero, or
//! rescale the largest ones by random noise) and measure how much the toy
//! block's output moves.

use qvd::harness::*;
use qvd::tensor::mse;

fn main() -> qvd::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let spec = ToyBlockSpec { seed, ..Default::default() };
    let toy = ToyBlock::from_spec(&spec)?;
    let frames = spec.gen_frames()?;
    let traj = gen_skewed_trajectory(&SkewedTemporalSpec { dim: spec.temporal_dim, seed, ..Default::default() })?;
    let zeroed = perturb_zero_interval(&traj)?;
    let noisy = perturb_outliers(&traj, seed)?;

    println!("step  zero-interval mse  outlier-noise mse");
    let (mut sz, mut so) = (0.0, 0.0);
    for t in 1..=traj.len() {
        let clean = run_block(&toy, &frames, traj.step(t), None)?;
        let ez = mse(&clean, &run_block(&toy, &frames, zeroed.step(t), None)?)?;
        let eo = mse(&clean, &run_block(&toy, &frames, noisy.step(t), None)?)?;
        println!("{t:>4}  {ez:>17.4e}  {eo:>17.4e}");
        sz += ez;
        so += eo;
    }
    let n = traj.len() as f64;
    println!("mean  {:>17.4e}  {:>17.4e}", sz / n, so / n);
    Ok(())
}
