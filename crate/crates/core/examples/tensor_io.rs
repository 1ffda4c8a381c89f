//! Write a tensor to a QVDT file, read it back and print per-channel stats.

use qvd::harness::{gen_interchannel, InterChannelSpec};
use qvd::tensor::{channel_stats, coverage_ratio, read_tensor, write_tensor};

fn main() -> qvd::Result<()> {
    let spec = InterChannelSpec { channels: 8, samples_per_channel: 32, ..Default::default() };
    let x = gen_interchannel(&spec)?;

    let dir = std::env::temp_dir().join("qvd-example-tensor-io");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("interchannel.qvdt");
    write_tensor(&x, &path)?;
    let back = read_tensor(&path)?;
    assert_eq!(back, x);
    println!("{} -> shape {:?}, channel axis {:?}", path.display(), back.shape(), back.channel_axis());

    let st = channel_stats(&back, 1)?;
    let cov = coverage_ratio(&back, 1)?;
    println!("channel      min      max  coverage");
    for c in 0..st.channels() {
        println!("{c:>7} {:>8.4} {:>8.4} {:>9.4}", st.min[c], st.max[c], cov[c]);
    }
    println!("global range [{:.4}, {:.4}]", st.global_min, st.global_max);
    Ok(())
}
