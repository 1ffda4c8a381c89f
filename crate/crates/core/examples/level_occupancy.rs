//! How many quantization levels the dense middle of a skewed temporal
//! feature actually occupies under uniform and log2 quantizers.

use qvd::analysis::level_occupancy;
use qvd::harness::{gen_skewed_trajectory, SkewedTemporalSpec};
use qvd::quant::{calibrate_minmax, Granularity, Log2Params, QuantParams};

fn main() -> qvd::Result<()> {
    let traj = gen_skewed_trajectory(&SkewedTemporalSpec::default())?;
    println!("step  uniform(10b)  log2(10b)   max|x|");
    for (t, step) in traj.steps().iter().enumerate() {
        let uni = calibrate_minmax(step, 10, Granularity::Tensor)?;
        let log = QuantParams::Log2(Log2Params::new(step.max_abs() as f64, 10)?);
        println!(
            "{:>4}  {:>12}  {:>9}  {:>7.3}",
            t + 1,
            level_occupancy(step, &uni, 0.9)?,
            level_occupancy(step, &log, 0.9)?,
            step.max_abs()
        );
    }
    Ok(())
}
