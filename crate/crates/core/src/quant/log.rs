use crate::error::{QvdError, Result};
use crate::tensor::Tensor;

use super::{max_code, HiDiParams, Log2Params, QuantParams, QuantizedTensor, EPS_ZERO};

#[inline]
fn log_code(magnitude: f64, scale: f64, bits: u32) -> u32 {
    let q = (-(magnitude / scale).log2()).round();
    q.clamp(0.0, max_code(bits) as f64) as u32
}

#[inline]
fn sign_of(v: f32) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

#[inline]
pub(crate) fn log2_code(v: f32, p: &Log2Params) -> (u32, i8) {
    let m = (v as f64).abs();
    if m < EPS_ZERO {
        return (max_code(p.bits), 0);
    }
    (log_code(m, p.scale, p.bits), sign_of(v))
}

/// Sign comes from `v`, magnitude from `v - beta`. A zero `v` has sign 0 and
/// dequantizes to `beta`, same as a shifted magnitude below [`EPS_ZERO`].
#[inline]
pub(crate) fn hidi_code(v: f32, p: &HiDiParams) -> (u32, i8) {
    let m = (v as f64 - p.beta).abs();
    let sign = sign_of(v);
    if m < EPS_ZERO || sign == 0 {
        return (max_code(p.bits), 0);
    }
    (log_code(m, p.scale, p.bits), sign)
}

#[inline]
pub(crate) fn log_value(code: u32, sign: i8, scale: f64) -> f64 {
    sign as f64 * scale * (-(code as f64)).exp2()
}

fn split(pairs: impl Iterator<Item = (u32, i8)>, n: usize) -> (Vec<u32>, Vec<i8>) {
    let mut codes = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    for (c, s) in pairs {
        codes.push(c);
        signs.push(s);
    }
    (codes, signs)
}

/// Quantizes `|x|` on a power-of-two grid and records `sign(x)` separately.
pub fn log2_quant(x: &Tensor, p: &Log2Params) -> Result<QuantizedTensor> {
    p.validate()?;
    let (codes, signs) = split(x.data().iter().map(|&v| log2_code(v, p)), x.len());
    Ok(QuantizedTensor {
        shape: x.shape().to_vec(),
        codes,
        signs: Some(signs),
        params: QuantParams::Log2(*p),
    })
}

/// `x_hat = sign * s * 2^-code`.
pub fn log2_dequant(q: &QuantizedTensor) -> Result<Tensor> {
    let QuantParams::Log2(p) = q.params else {
        return Err(QvdError::arg("log2_dequant needs log2 params"));
    };
    q.check()?;
    let signs = q.signs.as_ref().expect("checked");
    let data = q
        .codes
        .iter()
        .zip(signs)
        .map(|(&c, &s)| log_value(c, s, p.scale) as f32)
        .collect();
    Tensor::new(q.shape.clone(), data)
}

pub fn hidi_quant(x: &Tensor, p: &HiDiParams) -> Result<QuantizedTensor> {
    p.validate()?;
    let (codes, signs) = split(x.data().iter().map(|&v| hidi_code(v, p)), x.len());
    Ok(QuantizedTensor {
        shape: x.shape().to_vec(),
        codes,
        signs: Some(signs),
        params: QuantParams::HiDi(*p),
    })
}

/// `x_hat = sign * s * 2^-code + beta`, or `beta` where the sign is 0.
///
/// Exact inverse only where `x` and `x - beta` share a sign; values strictly
/// between 0 and `beta` come back reflected about `beta`.
pub fn hidi_dequant(q: &QuantizedTensor) -> Result<Tensor> {
    let QuantParams::HiDi(p) = q.params else {
        return Err(QvdError::arg("hidi_dequant needs hidi params"));
    };
    q.check()?;
    let signs = q.signs.as_ref().expect("checked");
    let data = q
        .codes
        .iter()
        .zip(signs)
        .map(|(&c, &s)| hidi_value(c, s, &p))
        .collect();
    Tensor::new(q.shape.clone(), data)
}

#[inline]
pub(crate) fn hidi_value(code: u32, sign: i8, p: &HiDiParams) -> f32 {
    if sign == 0 {
        p.beta as f32
    } else {
        (log_value(code, sign, p.scale) + p.beta) as f32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f32]) -> Tensor {
        Tensor::from_vec(xs.to_vec()).unwrap()
    }

    #[test]
    fn log2_examples() {
        let p = Log2Params::new(2.0, 4).unwrap();
        let q = log2_quant(&v(&[2.0, 0.5, 0.0, -1.0]), &p).unwrap();
        assert_eq!(q.codes, vec![0, 2, 15, 1]);
        assert_eq!(q.signs.as_deref(), Some(&[1, 1, 0, -1][..]));
        let back = log2_dequant(&q).unwrap();
        assert_eq!(back.data(), &[2.0, 0.5, 0.0, -1.0]);
    }

    #[test]
    fn log2_missing_sign_plane() {
        let q = QuantizedTensor {
            shape: vec![1],
            codes: vec![0],
            signs: None,
            params: QuantParams::Log2(Log2Params::new(1.0, 4).unwrap()),
        };
        assert!(matches!(log2_dequant(&q), Err(QvdError::InvalidArgument(_))));
        let q = QuantizedTensor {
            params: QuantParams::HiDi(HiDiParams::new(1.0, 0.0, 4).unwrap()),
            ..q
        };
        assert!(matches!(hidi_dequant(&q), Err(QvdError::InvalidArgument(_))));
    }

    #[test]
    fn log2_exact_powers_enumerated() {
        let s = 3.0f64;
        let p = Log2Params::new(s, 4).unwrap();
        let xs: Vec<f32> = (0..16).map(|k| (s * (-(k as f64)).exp2()) as f32).collect();
        let q = log2_quant(&v(&xs), &p).unwrap();
        assert_eq!(q.codes, (0..16).collect::<Vec<u32>>());
        assert_eq!(log2_dequant(&q).unwrap().data(), &xs[..]);
    }

    #[test]
    fn hidi_examples() {
        let p = HiDiParams::new(1.0, 0.5, 4).unwrap();
        let q = hidi_quant(&v(&[1.5, 0.5]), &p).unwrap();
        assert_eq!(q.codes, vec![0, 15]);
        assert_eq!(q.signs.as_deref(), Some(&[1, 0][..]));
        assert_eq!(hidi_dequant(&q).unwrap().data(), &[1.5, 0.5]);

        let p = HiDiParams::new(1.0, 0.2, 4).unwrap();
        let q = QuantizedTensor {
            shape: vec![1],
            codes: vec![3],
            signs: Some(vec![0]),
            params: QuantParams::HiDi(p),
        };
        assert_eq!(hidi_dequant(&q).unwrap().data(), &[0.2]);
    }

    #[test]
    fn hidi_sign_follows_unshifted_value() {
        // 0.1 sits between 0 and beta: sign +1, magnitude |0.1 - 0.3|
        let p = HiDiParams::new(1.0, 0.3, 8).unwrap();
        let q = hidi_quant(&v(&[0.1]), &p).unwrap();
        assert_eq!(q.signs.as_deref(), Some(&[1][..]));
        let back = hidi_dequant(&q).unwrap().data()[0];
        assert!(back > 0.3);
    }

    #[test]
    fn hidi_codes_match_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f32> = (0..400)
            .map(|_| {
                let m: f64 = rng.gen_range(-20.0..3.0);
                let sgn = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                (sgn * m.exp2()) as f32
            })
            .collect();
        let p = HiDiParams::new(16.0, 1e-4, 8).unwrap();
        let q = hidi_quant(&v(&xs), &p).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            let d = (x as f64 - 1e-4).abs();
            let raw = -(d / 16.0).log2();
            let r = if raw >= 0.0 { (raw + 0.5).floor() } else { (raw - 0.5).ceil() };
            let code = r.clamp(0.0, 255.0) as u32;
            assert_eq!(q.codes[i], code, "index {i}");
            assert_eq!(q.signs.as_ref().unwrap()[i], if x > 0.0 { 1 } else { -1 });
        }
    }

    #[test]
    fn hidi_round_trip_log_bound() {
        // x > beta everywhere: |x - beta| recovered within a factor 2^(1/2)
        let p = HiDiParams::new(8.0, 0.01, 10).unwrap();
        let bound = 2f64.sqrt() * (1.0 + 1e-6);
        let mut k = 0.0f64;
        while k < 20.0 {
            let x = (0.01 + 8.0 * (-k).exp2()) as f32;
            let q = hidi_quant(&v(&[x]), &p).unwrap();
            let back = hidi_dequant(&q).unwrap().data()[0] as f64;
            let ratio = (back - 0.01) / (x as f64 - 0.01);
            assert!(ratio <= bound && ratio >= 1.0 / bound, "k = {k}, ratio = {ratio}");
            k += 0.013;
        }
    }

    proptest! {
        #[test]
        fn log_codes_in_range(x in -1e30f32..1e30, s in 1e-20f64..1e20, beta in -10f64..10.0) {
            let (c, _) = log2_code(x, &Log2Params::new(s, 3).unwrap());
            prop_assert!(c <= 7);
            let (c, _) = hidi_code(x, &HiDiParams::new(s, beta, 3).unwrap());
            prop_assert!(c <= 7);
        }

        #[test]
        fn log2_monotone(a in 1e-10f32..1e3, b in 1e-10f32..1e3, s in 1e-3f64..1e4) {
            let p = Log2Params::new(s, 8).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(log2_code(lo, &p).0 >= log2_code(hi, &p).0);
            prop_assert!(log2_code(-lo, &p).0 >= log2_code(-hi, &p).0);
        }

        #[test]
        fn hidi_with_zero_beta_is_log2(xs in prop::collection::vec(0f32..100.0, 1..32), s in 1e-2f64..1e3) {
            let x = v(&xs);
            let a = log2_quant(&x, &Log2Params::new(s, 8).unwrap()).unwrap();
            let b = hidi_quant(&x, &HiDiParams::new(s, 0.0, 8).unwrap()).unwrap();
            prop_assert_eq!(a.codes, b.codes);
            prop_assert_eq!(a.signs, b.signs);
        }
    }
}
