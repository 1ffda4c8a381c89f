//! Uniform, log2 and shifted-log quantizers side by side on one heavy-tailed
//! vector, with MinMax and MSE calibration for the uniform family.

use qvd::quant::*;
use qvd::tensor::mse;
use qvd::Tensor;

fn main() -> qvd::Result<()> {
    // mostly small values plus two large ones
    let mut data: Vec<f32> = (0..200).map(|i| ((i as f32) * 0.37).sin() * 0.05).collect();
    data.extend([6.0, -4.5]);
    let x = Tensor::from_vec(data)?;

    let minmax = calibrate_minmax(&x, 4, Granularity::Tensor)?;
    let searched = calibrate_mse_uniform(&x, 4)?;
    let log2 = QuantParams::Log2(Log2Params::new(x.max_abs() as f64, 4)?);
    let hidi = QuantParams::HiDi(HiDiParams::new(x.max_abs() as f64, 0.0, 4)?);

    println!("4-bit round-trip mse");
    for (name, p) in [
        ("uniform minmax", minmax),
        ("uniform mse", QuantParams::Uniform(searched.params)),
        ("log2", log2),
        ("hidi", hidi),
    ] {
        let q = quantize(&x, &p)?;
        let x_hat = dequantize(&q)?;
        println!("  {name:<15} {:.3e}  (codes used: {})", mse(&x, &x_hat)?, {
            let mut c = q.codes.clone();
            c.sort_unstable();
            c.dedup();
            c.len()
        });
    }
    let best = searched.trace.iter().find(|c| c.objective == searched.objective).unwrap();
    println!("mse calibration kept {:.0}% of the range", best.fraction * 100.0);
    Ok(())
}
