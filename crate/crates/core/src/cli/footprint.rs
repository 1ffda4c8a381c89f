//! Model size and bit-operation estimates from layer counts.

use serde::{Deserialize, Serialize};

use crate::error::{QvdError, Result};

pub const REFERENCE_BITS: u32 = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerCount {
    pub name: String,
    pub param_count: u64,
    pub macs_per_forward: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerFootprintSpec {
    pub layers: Vec<LayerCount>,
    pub w_bits: u32,
    pub a_bits: u32,
}

impl LayerFootprintSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(QvdError::arg("footprint spec has no layers"));
        }
        if let Some(l) = self.layers.iter().find(|l| l.param_count == 0 || l.macs_per_forward == 0) {
            return Err(QvdError::arg(format!("layer {:?} has a zero count", l.name)));
        }
        if self.w_bits == 0 || self.a_bits == 0 || self.w_bits > 64 || self.a_bits > 64 {
            return Err(QvdError::arg("bit-widths must be in 1..=64"));
        }
        Ok(())
    }
}

/// Reduced fraction `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u128,
    pub den: u128,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    pub fn new(num: u128, den: u128) -> Self {
        let g = gcd(num, den).max(1);
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFootprint {
    pub name: String,
    pub size_bits: u128,
    pub bops: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub w_bits: u32,
    pub a_bits: u32,
    pub layers: Vec<LayerFootprint>,
    pub size_bits: u128,
    /// `size_bits / 8`, exact.
    pub size_bytes: Ratio,
    pub bops: u128,
    pub reference_size_bits: u128,
    pub reference_bops: u128,
    pub size_ratio: Ratio,
    pub bops_ratio: Ratio,
}

fn overflow() -> QvdError {
    QvdError::arg("footprint totals overflow 128 bits")
}

/// `size = sum(params * w_bits)`, `bops = sum(macs * w_bits * a_bits)`, both
/// in exact integers, with ratios against 32-bit weights and activations.
pub fn footprint(spec: &LayerFootprintSpec) -> Result<Footprint> {
    spec.validate()?;
    let (w, a) = (spec.w_bits as u128, spec.a_bits as u128);
    let r = REFERENCE_BITS as u128;
    let mut layers = Vec::with_capacity(spec.layers.len());
    let (mut size, mut bops, mut ref_size, mut ref_bops) = (0u128, 0u128, 0u128, 0u128);
    for l in &spec.layers {
        let (p, m) = (l.param_count as u128, l.macs_per_forward as u128);
        let ls = p * w;
        let lb = m * w * a;
        size = size.checked_add(ls).ok_or_else(overflow)?;
        bops = bops.checked_add(lb).ok_or_else(overflow)?;
        ref_size = ref_size.checked_add(p * r).ok_or_else(overflow)?;
        ref_bops = ref_bops.checked_add(m * r * r).ok_or_else(overflow)?;
        layers.push(LayerFootprint {
            name: l.name.clone(),
            size_bits: ls,
            bops: lb,
        });
    }
    Ok(Footprint {
        w_bits: spec.w_bits,
        a_bits: spec.a_bits,
        layers,
        size_bits: size,
        size_bytes: Ratio::new(size, 8),
        bops,
        reference_size_bits: ref_size,
        reference_bops: ref_bops,
        size_ratio: Ratio::new(size, ref_size),
        bops_ratio: Ratio::new(bops, ref_bops),
    })
}
