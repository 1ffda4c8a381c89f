//! Grid search for shifted-log parameters that keep adjacent steps of a
//! temporal feature distinguishable, compared against uniform quantization.
//!
//! `cargo run --release --example htdq_search -- full` searches the default
//! 25 x 320 trajectory (about half a minute); without it a smaller one.

use qvd::harness::{gen_skewed_trajectory, SkewedTemporalSpec};
use qvd::quant::{calibrate_mse_uniform, fake_quant, QuantParams};
use qvd::temporal::*;
use qvd::Tensor;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn main() -> qvd::Result<()> {
    let full = std::env::args().any(|a| a == "full");
    let spec = if full {
        SkewedTemporalSpec::default()
    } else {
        SkewedTemporalSpec { steps: 10, dim: 96, ..Default::default() }
    };
    let traj = gen_skewed_trajectory(&spec)?;
    let cfg = HtdqSearchConfig::default();
    let found = search_hidi_params(&traj, &cfg)?;
    println!(
        "{} x {} grid: s = {:.4}, beta = {:.5}, K = {:.4} (baseline K = {:.4})",
        found.s_grid.len(),
        found.beta_grid.len(),
        found.params.scale,
        found.params.beta,
        found.objective,
        found.trace[0].objective
    );

    let pooled = Tensor::from_vec(traj.flatten())?;
    let uni = QuantParams::Uniform(calibrate_mse_uniform(&pooled, cfg.bits)?.params);
    let uni_hat = traj.map_steps(|_, s| fake_quant(s, &uni))?;
    let hidi_hat = hidi_roundtrip(&traj, &found.params)?;
    let eps = cfg.eps;
    println!("mean TDScore (lower = more distinguishable)");
    println!("  original  {:.4}", mean(&tdscores(&traj, cfg.window, eps)?));
    println!("  hidi      {:.4}", mean(&tdscores(&hidi_hat, cfg.window, eps)?));
    println!("  uniform   {:.4}", mean(&tdscores(&uni_hat, cfg.window, eps)?));
    println!(
        "K: hidi {:.4}, uniform {:.4}",
        found.objective,
        composite_k(&traj, &uni_hat, cfg.window, eps)?
    );
    Ok(())
}
