//! Per-channel range integration: widen narrow channels before activation
//! quantization, pick the top value by grid search and fold the scales into
//! the normalization and the following linear layer.

use qvd::harness::{gen_interchannel, InterChannelSpec, ToyBlock, ToyBlockSpec};
use qvd::scri::*;
use qvd::tensor::{channel_stats, coverage_ratio, mse};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn main() -> qvd::Result<()> {
    let x = gen_interchannel(&InterChannelSpec::default())?;
    let t = channel_stats(&x, 1)?.global_max as f64;
    let widened = apply_scri(&x, &compute_scri_scale(&x, 1, t)?)?;
    println!(
        "mean channel coverage {:.4} -> {:.4}",
        mean(&coverage_ratio(&x, 1)?),
        mean(&coverage_ratio(&widened, 1)?)
    );

    let spec = ToyBlockSpec::default();
    let block = ToyBlock::from_spec(&spec)?.block;
    let frames = spec.gen_frames()?;
    let reference = block.forward(&frames)?;
    println!("act bits  unscaled mse  scri mse    t");
    for act_bits in [4, 6, 8] {
        let cfg = BlockQuantConfig { act_bits, weight_bits: 8 };
        let found = search_t(&block, &frames, &cfg, DEFAULT_GRID_SIZE)?;
        let plain = mse(&reference, &quantized_forward(&block, &frames, &cfg)?)?;
        println!("{act_bits:>8}  {plain:>12.3e}  {:>8.3e}  {:.3}", found.objective, found.scale.t);
    }

    // folding leaves the float output unchanged
    let found = search_t(&block, &frames, &BlockQuantConfig::default(), DEFAULT_GRID_SIZE)?;
    let folded = found.folded.forward(&frames)?;
    let worst = reference.data().iter().zip(folded.data()).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
    println!("float output change after folding: {worst:.2e}");
    Ok(())
}
