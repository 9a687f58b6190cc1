//! Uniform per-tensor quantization on an unsigned integer grid.
//!
//! `code = clamp(round(x / step) + Z, q_min, q_max)` with
//! `step = (x_max - x_min) / (2^b - 1)`. Rounding is half-to-even
//! everywhere. This module doubles as the round-to-nearest baseline: fake
//! quantization with no equalization or correction is exactly RTN.

use alloc::vec::Vec;

use crate::error::{AweqError, Result};
use crate::matrix::Matrix;

/// Rounds to the nearest integer, ties to the even neighbor.
#[inline]
pub fn round_ties_even(x: f64) -> f64 {
    let f = libm::floor(x);
    let d = x - f;
    if d < 0.5 {
        f
    } else if d > 0.5 {
        f + 1.0
    } else if libm::floor(f * 0.5) == f * 0.5 {
        f
    } else {
        f + 1.0
    }
}

/// Step size, zero-point, and clamp window of one quantization grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantParams {
    pub step: f64,
    pub zero_point: i32,
    pub bits: u8,
    pub q_min: i32,
    pub q_max: i32,
    pub x_min: f64,
    pub x_max: f64,
}

impl QuantParams {
    /// Real value represented by an integer code.
    #[inline]
    pub fn decode(&self, code: u8) -> f64 {
        (code as i32 - self.zero_point) as f64 * self.step
    }

    /// Integer code for a real value, saturating at the grid ends.
    #[inline]
    pub fn encode(&self, x: f64) -> u8 {
        let r = round_ties_even(x / self.step) + self.zero_point as f64;
        let clamped = r.clamp(self.q_min as f64, self.q_max as f64);
        clamped as u8
    }
}

/// Integer codes for a whole matrix plus the grid they live on.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedMatrix {
    rows: usize,
    cols: usize,
    codes: Vec<u8>,
    params: QuantParams,
}

impl QuantizedMatrix {
    /// Validates shape and code range; used when loading codes from disk.
    pub fn new(rows: usize, cols: usize, codes: Vec<u8>, params: QuantParams) -> Result<Self> {
        if codes.len() != rows * cols {
            return Err(AweqError::DataLength {
                expected: rows * cols,
                got: codes.len(),
            });
        }
        if codes
            .iter()
            .any(|&c| (c as i32) < params.q_min || (c as i32) > params.q_max)
        {
            return Err(AweqError::InvalidConfig("quantized code outside [q_min, q_max]"));
        }
        Ok(Self {
            rows,
            cols,
            codes,
            params,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn params(&self) -> &QuantParams {
        &self.params
    }
}

/// Where the quantization range of a tensor comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeSource {
    /// Dynamic: use the min/max of the tensor being quantized.
    MinMaxOfInput,
    /// Static: use a range fixed ahead of time from calibration data.
    FixedCalibrated { x_min: f64, x_max: f64 },
}

/// Symmetrizes a range around zero: `(-m, m)` with `m = max(|lo|, |hi|)`.
pub fn symmetric_bounds(x_min: f64, x_max: f64) -> (f64, f64) {
    let m = x_min.abs().max(x_max.abs());
    (-m, m)
}

/// Builds grid parameters for `[x_min, x_max]` at `bits` bits.
///
/// A degenerate range (`x_min == x_max`) gets `step = 1`, `Z = 0`, so
/// constant tensors round-trip to within half a unit instead of dividing
/// by zero.
pub fn compute_quant_params(x_min: f64, x_max: f64, bits: u8) -> Result<QuantParams> {
    if !(2..=8).contains(&bits) {
        return Err(AweqError::InvalidBits { bits });
    }
    if !x_min.is_finite() || !x_max.is_finite() {
        return Err(AweqError::InvalidInput("non-finite quantization bounds"));
    }
    if x_min > x_max {
        return Err(AweqError::InvalidRange { min: x_min, max: x_max });
    }
    let q_min = 0i32;
    let q_max = (1i32 << bits) - 1;
    let (step, zero_point) = if x_max > x_min {
        let step = (x_max - x_min) / q_max as f64;
        let z = round_ties_even(-x_min / step).clamp(q_min as f64, q_max as f64) as i32;
        (step, z)
    } else {
        (1.0, 0)
    };
    Ok(QuantParams {
        step,
        zero_point,
        bits,
        q_min,
        q_max,
        x_min,
        x_max,
    })
}

/// Quantizes every element onto the integer grid. Out-of-range values
/// saturate at `q_min`/`q_max`.
pub fn quantize(x: &Matrix, params: &QuantParams) -> QuantizedMatrix {
    let codes = x.data().iter().map(|&v| params.encode(v)).collect();
    QuantizedMatrix {
        rows: x.rows(),
        cols: x.cols(),
        codes,
        params: *params,
    }
}

/// Maps codes back to real values: `(code - Z) * step`.
pub fn dequantize(q: &QuantizedMatrix) -> Matrix {
    let data = q.codes.iter().map(|&c| q.params.decode(c)).collect();
    Matrix::new(q.rows, q.cols, data).expect("decoded grid values are finite")
}

/// Quantize-then-dequantize with explicit parameters; the shape is
/// preserved and every value snaps to the grid.
pub fn fake_quantize_params(x: &Matrix, params: &QuantParams) -> Matrix {
    dequantize(&quantize(x, params))
}

/// Quantize-then-dequantize at `bits` bits with the range taken from
/// `range`. This is the RTN baseline path when no equalization runs.
pub fn fake_quantize(x: &Matrix, bits: u8, range: RangeSource) -> Result<Matrix> {
    let (x_min, x_max) = match range {
        RangeSource::FixedCalibrated { x_min, x_max } => (x_min, x_max),
        RangeSource::MinMaxOfInput => {
            if x.is_empty() {
                return Err(AweqError::EmptyInput);
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &v in x.data() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (lo, hi)
        }
    };
    let params = compute_quant_params(x_min, x_max, bits)?;
    Ok(fake_quantize_params(x, &params))
}

#[cfg(test)]
mod tests {
    extern crate std;

    use super::*;
    use alloc::vec;

    #[test]
    fn round_ties_even_cases() {
        assert_eq!(round_ties_even(0.5), 0.0);
        assert_eq!(round_ties_even(1.5), 2.0);
        assert_eq!(round_ties_even(2.5), 2.0);
        assert_eq!(round_ties_even(-0.5), 0.0);
        assert_eq!(round_ties_even(-1.5), -2.0);
        assert_eq!(round_ties_even(127.5), 128.0);
        assert_eq!(round_ties_even(-127.5), -128.0);
        assert_eq!(round_ties_even(0.49999999), 0.0);
        assert_eq!(round_ties_even(1e300), 1e300);
    }

    #[test]
    fn params_full_byte_range() {
        let p = compute_quant_params(0.0, 255.0, 8).unwrap();
        assert_eq!(p.step, 1.0);
        assert_eq!(p.zero_point, 0);
        assert_eq!(p.q_max, 255);
    }

    #[test]
    fn params_symmetric_unit_range() {
        let p = compute_quant_params(-1.0, 1.0, 8).unwrap();
        assert_eq!(p.step, 2.0 / 255.0);
        assert_eq!(p.zero_point, 128);
    }

    #[test]
    fn params_three_bit() {
        let p = compute_quant_params(0.0, 7.0, 3).unwrap();
        assert_eq!(p.step, 1.0);
        assert_eq!(p.zero_point, 0);
        assert_eq!(p.q_max, 7);
    }

    #[test]
    fn params_degenerate_range() {
        let p = compute_quant_params(5.0, 5.0, 8).unwrap();
        assert_eq!(p.step, 1.0);
        assert_eq!(p.zero_point, 0);
    }

    #[test]
    fn params_errors() {
        assert!(matches!(
            compute_quant_params(1.0, -1.0, 8),
            Err(AweqError::InvalidRange { .. })
        ));
        assert!(matches!(
            compute_quant_params(f64::NAN, 1.0, 8),
            Err(AweqError::InvalidInput(_))
        ));
        assert!(matches!(
            compute_quant_params(0.0, 1.0, 9),
            Err(AweqError::InvalidBits { bits: 9 })
        ));
        assert!(matches!(
            compute_quant_params(0.0, 1.0, 1),
            Err(AweqError::InvalidBits { bits: 1 })
        ));
    }

    #[test]
    fn zero_maps_to_zero_point() {
        let p = compute_quant_params(-1.0, 1.0, 8).unwrap();
        let x = Matrix::new(1, 1, vec![0.0]).unwrap();
        let q = quantize(&x, &p);
        assert_eq!(q.codes(), &[128]);
        assert_eq!(dequantize(&q).data(), &[0.0]);
    }

    #[test]
    fn endpoints_saturate_to_grid_ends() {
        let p = compute_quant_params(-1.0, 1.0, 8).unwrap();
        let x = Matrix::new(1, 2, vec![-1.0, 1.0]).unwrap();
        let q = quantize(&x, &p);
        assert_eq!(q.codes(), &[0, 255]);
    }

    #[test]
    fn far_out_of_range_saturates() {
        let p = compute_quant_params(-1.0, 1.0, 8).unwrap();
        let x = Matrix::new(1, 3, vec![-1e12, 1e12, 1e300]).unwrap();
        let q = quantize(&x, &p);
        assert_eq!(q.codes(), &[0, 255, 255]);
    }

    #[test]
    fn dequantize_endpoint() {
        let p = compute_quant_params(0.0, 255.0, 8).unwrap();
        let q = QuantizedMatrix::new(1, 1, vec![255], p).unwrap();
        assert_eq!(dequantize(&q).data(), &[255.0]);
    }

    #[test]
    fn quantize_is_monotone() {
        let p = compute_quant_params(-3.0, 2.0, 4).unwrap();
        let mut prev = 0u8;
        let mut first = true;
        for i in 0..2000 {
            let x = -5.0 + i as f64 * 0.005;
            let c = p.encode(x);
            if !first {
                assert!(c >= prev, "quantize must be non-decreasing");
            }
            prev = c;
            first = false;
        }
    }

    #[test]
    fn fake_quantize_fixed_point_of_grid() {
        // Values already on an exact 8-bit grid pass through untouched.
        let x = Matrix::new(1, 4, vec![0.0, 1.0, 17.0, 255.0]).unwrap();
        let out = fake_quantize(
            &x,
            8,
            RangeSource::FixedCalibrated { x_min: 0.0, x_max: 255.0 },
        )
        .unwrap();
        assert_eq!(out.data(), x.data());
    }

    #[test]
    fn fake_quantize_constant_matrix() {
        let x = Matrix::new(2, 2, vec![3.25; 4]).unwrap();
        let out = fake_quantize(&x, 8, RangeSource::MinMaxOfInput).unwrap();
        for &v in out.data() {
            assert!((v - 3.25).abs() <= 0.5);
        }
    }

    #[test]
    fn fake_quantize_idempotent_with_fixed_params() {
        let p = compute_quant_params(-1.0, 1.0, 5).unwrap();
        let x = Matrix::from_fn(8, 8, |r, c| ((r * 8 + c) as f64 / 32.0) - 1.0);
        let once = fake_quantize_params(&x, &p);
        let twice = fake_quantize_params(&once, &p);
        assert_eq!(once, twice);
    }

    #[test]
    fn round_trip_error_bounded_by_half_step() {
        let p = compute_quant_params(-1.0, 1.0, 8).unwrap();
        for i in 0..=1000 {
            let x = -1.0 + 2.0 * i as f64 / 1000.0;
            let m = Matrix::new(1, 1, vec![x]).unwrap();
            let back = fake_quantize_params(&m, &p).data()[0];
            assert!(
                (back - x).abs() <= p.step / 2.0 + 1e-12,
                "x={x} back={back} step={}",
                p.step
            );
        }
    }

    #[test]
    fn lower_bits_mean_higher_error() {
        let x = Matrix::from_fn(32, 32, |r, c| {
            libm::sin(0.37 * r as f64 + 0.61 * c as f64)
        });
        let mse = |bits: u8| {
            let out = fake_quantize(&x, bits, RangeSource::MinMaxOfInput).unwrap();
            let n = x.data().len() as f64;
            x.data()
                .iter()
                .zip(out.data())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / n
        };
        assert!(mse(8) < mse(3));
    }

    #[test]
    fn symmetric_bounds_centre_the_zero_point() {
        let (lo, hi) = symmetric_bounds(-0.3, 2.7);
        assert_eq!((lo, hi), (-2.7, 2.7));
        let p = compute_quant_params(lo, hi, 8).unwrap();
        assert_eq!(p.zero_point, 128);
    }
}
