//! Model size and bit operations at several weight/activation bit-widths,
//! relative to 32-bit weights and activations.

use qvd::cli::footprint::{footprint, LayerCount, LayerFootprintSpec};

fn main() -> qvd::Result<()> {
    let layers = vec![
        LayerCount { name: "attention".into(), param_count: 3_145_728, macs_per_forward: 805_306_368 },
        LayerCount { name: "ffn".into(), param_count: 8_388_608, macs_per_forward: 2_147_483_648 },
        LayerCount { name: "projection".into(), param_count: 1_048_576, macs_per_forward: 268_435_456 },
    ];
    println!("W/A    size (MiB)  size ratio  GBOPs      bops ratio");
    for (w, a) in [(32, 32), (8, 8), (6, 8), (4, 8)] {
        let f = footprint(&LayerFootprintSpec { layers: layers.clone(), w_bits: w, a_bits: a })?;
        println!(
            "{w:>2}/{a:<2}  {:>10.2}  {:>4}/{:<5}  {:>9.1}  {}/{}",
            f.size_bytes.value() / (1 << 20) as f64,
            f.size_ratio.num,
            f.size_ratio.den,
            f.bops as f64 / 1e9,
            f.bops_ratio.num,
            f.bops_ratio.den
        );
    }
    Ok(())
}
