//! Dense row-major matrices and the per-channel statistics every other
//! module consumes.
//!
//! Values are carried as `f64` in memory so that quantization-error
//! measurements are not polluted by accumulation error; the on-disk
//! container format narrows to `f32` (see the companion IO crate).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{AweqError, Result};

/// Dense 2-D real-valued matrix, row-major, all entries finite.
///
/// Rows are samples when holding activations; rows are input channels when
/// holding a weight tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting NaN/Inf entries and
    /// length mismatches.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(AweqError::DataLength {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(AweqError::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix by evaluating `f(row, col)` at every position.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Row-major backing slice.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Divides column `c` by `s[c]` for every column.
    pub fn scale_cols_div(&self, s: &[f64]) -> Result<Self> {
        if s.len() != self.cols {
            return Err(AweqError::LengthMismatch {
                expected: self.cols,
                got: s.len(),
            });
        }
        let mut out = self.clone();
        for r in 0..self.rows {
            let row = out.row_mut(r);
            for (v, &si) in row.iter_mut().zip(s) {
                *v /= si;
            }
        }
        Ok(out)
    }

    /// Multiplies row `r` by `s[r]` for every row.
    pub fn scale_rows_mul(&self, s: &[f64]) -> Result<Self> {
        if s.len() != self.rows {
            return Err(AweqError::LengthMismatch {
                expected: self.rows,
                got: s.len(),
            });
        }
        let mut out = self.clone();
        for r in 0..self.rows {
            for v in out.row_mut(r) {
                *v *= s[r];
            }
        }
        Ok(out)
    }
}

/// Which axis of a matrix is the channel axis.
///
/// Activations put channels in columns (a row is one sample); weight
/// tensors put channels in rows (an input channel), so channel `i` of an
/// activation matrix multiplies channel `i` of the weight it feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelAxis {
    Columns,
    Rows,
}

/// Per-channel min/max/range/mean plus the reduced element count, gathered
/// from calibration data or a weight tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub range: Vec<f64>,
    pub mean: Vec<f64>,
    /// Number of elements reduced per channel.
    pub count: usize,
}

impl ChannelStats {
    pub fn channels(&self) -> usize {
        self.min.len()
    }

    /// Tensor-wide bounds implied by the per-channel extrema.
    pub fn tensor_bounds(&self) -> (f64, f64) {
        let lo = self.min.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Stats of the same data with channel `i` divided by `s[i]`.
    ///
    /// Exact for positive scales: division by a positive constant maps
    /// min to min and max to max channel-wise.
    pub fn scaled_div(&self, s: &[f64]) -> Result<Self> {
        if s.len() != self.channels() {
            return Err(AweqError::ChannelMismatch {
                expected: self.channels(),
                got: s.len(),
            });
        }
        if let Some(index) = s.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(AweqError::NonPositiveScale { index });
        }
        let div = |v: &Vec<f64>| -> Vec<f64> { v.iter().zip(s).map(|(&a, &b)| a / b).collect() };
        let min = div(&self.min);
        let max = div(&self.max);
        let range = min.iter().zip(&max).map(|(&lo, &hi)| hi - lo).collect();
        Ok(Self {
            min,
            max,
            range,
            mean: div(&self.mean),
            count: self.count,
        })
    }
}

/// Matrix product `A · B`, accumulated in `f64`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(AweqError::DimMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let a_row = a.row(i);
        for (l, &a_il) in a_row.iter().enumerate() {
            if a_il == 0.0 {
                continue;
            }
            let b_row = b.row(l);
            let o_row = out.row_mut(i);
            for (o, &b_lj) in o_row.iter_mut().zip(b_row) {
                *o += a_il * b_lj;
            }
        }
    }
    Ok(out)
}

/// Per-channel min, max, range, and mean along the non-channel axis.
pub fn channel_stats(t: &Matrix, axis: ChannelAxis) -> Result<ChannelStats> {
    if t.is_empty() {
        return Err(AweqError::EmptyInput);
    }
    let (channels, reduced) = match axis {
        ChannelAxis::Columns => (t.cols, t.rows),
        ChannelAxis::Rows => (t.rows, t.cols),
    };
    let mut min = vec![f64::INFINITY; channels];
    let mut max = vec![f64::NEG_INFINITY; channels];
    let mut sum = vec![0.0f64; channels];
    for r in 0..t.rows {
        for (c, &v) in t.row(r).iter().enumerate() {
            let ch = match axis {
                ChannelAxis::Columns => c,
                ChannelAxis::Rows => r,
            };
            if v < min[ch] {
                min[ch] = v;
            }
            if v > max[ch] {
                max[ch] = v;
            }
            sum[ch] += v;
        }
    }
    let range = min.iter().zip(&max).map(|(&lo, &hi)| hi - lo).collect();
    let mean = sum.iter().map(|&s| s / reduced as f64).collect();
    Ok(ChannelStats {
        min,
        max,
        range,
        mean,
        count: reduced,
    })
}

/// Per-channel stats with min/max replaced by the `(1 - p)` and `p`
/// quantiles (linear interpolation), for outlier-robust range estimation.
///
/// The mean is left untouched; with aggressive percentiles it may fall
/// outside the clipped bounds.
pub fn clipped_channel_stats(t: &Matrix, axis: ChannelAxis, percentile: f64) -> Result<ChannelStats> {
    if !(percentile > 0.5 && percentile <= 1.0) {
        return Err(AweqError::InvalidConfig("percentile must lie in (0.5, 1]"));
    }
    let mut stats = channel_stats(t, axis)?;
    if percentile == 1.0 {
        return Ok(stats);
    }
    let channels = stats.channels();
    let mut values: Vec<f64> = Vec::with_capacity(stats.count);
    for ch in 0..channels {
        values.clear();
        match axis {
            ChannelAxis::Columns => {
                for r in 0..t.rows() {
                    values.push(t.get(r, ch));
                }
            }
            ChannelAxis::Rows => values.extend_from_slice(t.row(ch)),
        }
        values.sort_unstable_by(f64::total_cmp);
        let lo = quantile_sorted(&values, 1.0 - percentile);
        let hi = quantile_sorted(&values, percentile);
        stats.min[ch] = lo;
        stats.max[ch] = hi;
        stats.range[ch] = hi - lo;
    }
    Ok(stats)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let idx = pos as usize;
    if idx + 1 >= n {
        return sorted[n - 1];
    }
    let frac = pos - idx as f64;
    sorted[idx] + frac * (sorted[idx + 1] - sorted[idx])
}

/// Global `max - min` over the whole tensor.
pub fn tensor_range(t: &Matrix) -> Result<f64> {
    if t.is_empty() {
        return Err(AweqError::EmptyInput);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in t.data() {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    Ok(hi - lo)
}

/// Streaming update: extends `running` with one more batch.
///
/// Min/max become element-wise extrema over everything seen; the mean is
/// merged exactly by element count; `count` grows by the batch's reduced
/// element count per channel.
pub fn accumulate_stats(
    running: &ChannelStats,
    batch: &Matrix,
    axis: ChannelAxis,
) -> Result<ChannelStats> {
    let fresh = channel_stats(batch, axis)?;
    if fresh.channels() != running.channels() {
        return Err(AweqError::ChannelMismatch {
            expected: running.channels(),
            got: fresh.channels(),
        });
    }
    let n = running.count as f64;
    let m = fresh.count as f64;
    let total = n + m;
    let channels = running.channels();
    let mut out = ChannelStats {
        min: Vec::with_capacity(channels),
        max: Vec::with_capacity(channels),
        range: Vec::with_capacity(channels),
        mean: Vec::with_capacity(channels),
        count: running.count + fresh.count,
    };
    for i in 0..channels {
        let lo = running.min[i].min(fresh.min[i]);
        let hi = running.max[i].max(fresh.max[i]);
        out.min.push(lo);
        out.max.push(hi);
        out.range.push(hi - lo);
        out.mean.push((running.mean[i] * n + fresh.mean[i] * m) / total);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    extern crate std;

    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Matrix {
        Matrix::new(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_length() {
        assert!(matches!(
            Matrix::new(2, 2, vec![1.0, 2.0, 3.0]),
            Err(AweqError::DataLength { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn constructor_rejects_non_finite() {
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(AweqError::NonFinite { index: 1 })
        ));
        assert!(Matrix::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn matmul_identity_left() {
        let b = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let out = matmul(&Matrix::identity(2), &b).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn matmul_hand_product() {
        // [[1,2]]·[[3],[4]] = [[11]]
        let a = m(1, 2, &[1.0, 2.0]);
        let b = m(2, 1, &[3.0, 4.0]);
        let out = matmul(&a, &b).unwrap();
        assert_eq!(out.data(), &[11.0]);
    }

    #[test]
    fn matmul_shape_error() {
        let a = m(1, 2, &[1.0, 2.0]);
        let b = m(3, 1, &[1.0, 2.0, 3.0]);
        assert!(matches!(matmul(&a, &b), Err(AweqError::DimMismatch { .. })));
    }

    #[test]
    fn channel_stats_hand_case() {
        // X = [[1, -2], [3, 0]], channels = columns.
        let x = m(2, 2, &[1.0, -2.0, 3.0, 0.0]);
        let s = channel_stats(&x, ChannelAxis::Columns).unwrap();
        assert_eq!(s.min, vec![1.0, -2.0]);
        assert_eq!(s.max, vec![3.0, 0.0]);
        assert_eq!(s.range, vec![2.0, 2.0]);
        assert_eq!(s.mean, vec![2.0, -1.0]);
        assert_eq!(s.count, 2);
    }

    #[test]
    fn channel_stats_rows_axis() {
        let x = m(2, 2, &[1.0, -2.0, 3.0, 0.0]);
        let s = channel_stats(&x, ChannelAxis::Rows).unwrap();
        assert_eq!(s.min, vec![-2.0, 0.0]);
        assert_eq!(s.max, vec![1.0, 3.0]);
        assert_eq!(s.range, vec![3.0, 3.0]);
    }

    #[test]
    fn channel_stats_constant_matrix_has_zero_range() {
        let x = m(3, 2, &[5.0; 6]);
        let s = channel_stats(&x, ChannelAxis::Columns).unwrap();
        assert!(s.range.iter().all(|&r| r == 0.0));
        assert_eq!(s.mean, vec![5.0, 5.0]);
    }

    #[test]
    fn channel_stats_empty_errors() {
        let x = Matrix::zeros(0, 3);
        assert!(matches!(
            channel_stats(&x, ChannelAxis::Columns),
            Err(AweqError::EmptyInput)
        ));
    }

    #[test]
    fn tensor_range_hand_case() {
        let x = m(2, 2, &[1.0, -2.0, 3.0, 0.0]);
        assert_eq!(tensor_range(&x).unwrap(), 5.0);
        assert_eq!(tensor_range(&m(2, 2, &[4.0; 4])).unwrap(), 0.0);
    }

    #[test]
    fn tensor_range_matches_channel_extrema() {
        let x = m(3, 2, &[0.5, -1.5, 2.5, 0.0, -3.0, 1.0]);
        let s = channel_stats(&x, ChannelAxis::Columns).unwrap();
        let (lo, hi) = s.tensor_bounds();
        assert_eq!(tensor_range(&x).unwrap(), hi - lo);
    }

    #[test]
    fn accumulate_single_batch_matches_direct() {
        let a = m(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = m(1, 2, &[-1.0, 9.0]);
        let run = channel_stats(&a, ChannelAxis::Columns).unwrap();
        let acc = accumulate_stats(&run, &b, ChannelAxis::Columns).unwrap();

        // Concatenation oracle.
        let cat = m(3, 2, &[1.0, 2.0, 3.0, 4.0, -1.0, 9.0]);
        let direct = channel_stats(&cat, ChannelAxis::Columns).unwrap();
        assert_eq!(acc.min, direct.min);
        assert_eq!(acc.max, direct.max);
        assert_eq!(acc.count, direct.count);
        for (a, b) in acc.mean.iter().zip(&direct.mean) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn accumulate_inside_bounds_keeps_extrema() {
        let wide = m(2, 1, &[-10.0, 10.0]);
        let inner = m(2, 1, &[-1.0, 1.0]);
        let run = channel_stats(&wide, ChannelAxis::Columns).unwrap();
        let acc = accumulate_stats(&run, &inner, ChannelAxis::Columns).unwrap();
        assert_eq!(acc.min, run.min);
        assert_eq!(acc.max, run.max);
    }

    #[test]
    fn accumulate_channel_mismatch_errors() {
        let run = channel_stats(&m(1, 2, &[1.0, 2.0]), ChannelAxis::Columns).unwrap();
        let batch = m(1, 3, &[1.0, 2.0, 3.0]);
        assert!(matches!(
            accumulate_stats(&run, &batch, ChannelAxis::Columns),
            Err(AweqError::ChannelMismatch { .. })
        ));
    }

    #[test]
    fn clipped_stats_narrow_the_range() {
        let n = 101;
        let x = Matrix::from_fn(n, 1, |r, _| r as f64); // 0..=100
        let s = clipped_channel_stats(&x, ChannelAxis::Columns, 0.95).unwrap();
        assert!((s.min[0] - 5.0).abs() < 1e-12);
        assert!((s.max[0] - 95.0).abs() < 1e-12);
        let full = channel_stats(&x, ChannelAxis::Columns).unwrap();
        assert!(s.range[0] < full.range[0]);
    }

    #[test]
    fn scaled_div_rescales_all_fields() {
        let x = m(2, 2, &[1.0, -2.0, 3.0, 0.0]);
        let s = channel_stats(&x, ChannelAxis::Columns).unwrap();
        let scaled = s.scaled_div(&[2.0, 4.0]).unwrap();
        assert_eq!(scaled.min, vec![0.5, -0.5]);
        assert_eq!(scaled.max, vec![1.5, 0.0]);
        assert_eq!(scaled.range, vec![1.0, 0.5]);
        assert_eq!(scaled.mean, vec![1.0, -0.25]);
    }
}
