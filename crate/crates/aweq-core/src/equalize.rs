//! Activation-weight equalization.
//!
//! Quantization difficulty of a channel is its range divided by the whole
//! tensor's range. Scaling activation channel `i` by `1/s_i` and the
//! matching weight row by `s_i` leaves the product unchanged but moves
//! range from activation outliers into the weights. The closed form
//! `s_i = sqrt(r_i^X / r_i^W)` makes both sides' channel ranges equal at
//! `sqrt(r_i^X * r_i^W)`, which maximizes the summed per-channel
//! difficulty product; an exhaustive grid search is provided as an
//! independent check of that optimality.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{AweqError, Result};
use crate::matrix::{channel_stats, tensor_range, ChannelAxis, Matrix};
use crate::model::LinearLayer;

/// Scale clamp window applied before scales touch any tensor; extreme
/// ratios would otherwise overflow 32-bit storage downstream.
pub const SCALE_CLAMP: (f64, f64) = (1e-4, 1e4);

/// Positive per-channel equalization scales, one per shared channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizationFactors {
    s: Vec<f64>,
}

impl EqualizationFactors {
    /// Wraps raw scales, rejecting non-positive or non-finite entries.
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if let Some(index) = s.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(AweqError::NonPositiveScale { index });
        }
        Ok(Self { s })
    }

    pub fn ones(len: usize) -> Self {
        Self { s: vec![1.0; len] }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.s
    }

    pub fn is_identity(&self) -> bool {
        self.s.iter().all(|&v| v == 1.0)
    }

    /// Copy with every scale clamped into `[lo, hi]`.
    pub fn clamped(&self, lo: f64, hi: f64) -> Self {
        Self {
            s: self.s.iter().map(|&v| v.clamp(lo, hi)).collect(),
        }
    }
}

/// Per-channel difficulty ratios of an activation/weight pair: channel
/// range over tensor range, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyRatios {
    pub p_x: Vec<f64>,
    pub p_w: Vec<f64>,
}

fn validate_ranges(r: &[f64]) -> Result<()> {
    for (index, &v) in r.iter().enumerate() {
        if !v.is_finite() {
            return Err(AweqError::InvalidInput("non-finite channel range"));
        }
        if v < 0.0 {
            return Err(AweqError::NegativeRange { index });
        }
    }
    Ok(())
}

/// Closed-form equalization scales from per-channel ranges:
/// `s_i = sqrt(r_i^X / r_i^W)`.
///
/// Channels where either range is zero carry no signal to rebalance and
/// get `s_i = 1`.
pub fn compute_equalization_factors(r_x: &[f64], r_w: &[f64]) -> Result<EqualizationFactors> {
    if r_x.len() != r_w.len() {
        return Err(AweqError::LengthMismatch {
            expected: r_x.len(),
            got: r_w.len(),
        });
    }
    validate_ranges(r_x)?;
    validate_ranges(r_w)?;
    let s = r_x
        .iter()
        .zip(r_w)
        .map(|(&rx, &rw)| {
            if rx == 0.0 || rw == 0.0 {
                1.0
            } else {
                // sqrt(rx) / sqrt(rw) cannot overflow where rx / rw might.
                libm::sqrt(rx) / libm::sqrt(rw)
            }
        })
        .collect();
    EqualizationFactors::new(s)
}

/// Ratios for an activation matrix (channels = columns) and a weight
/// matrix (channels = rows). A constant tensor yields all-zero ratios.
pub fn difficulty_ratios(x: &Matrix, w: &Matrix) -> Result<DifficultyRatios> {
    if x.cols() != w.rows() {
        return Err(AweqError::ChannelMismatch {
            expected: x.cols(),
            got: w.rows(),
        });
    }
    let sx = channel_stats(x, ChannelAxis::Columns)?;
    let sw = channel_stats(w, ChannelAxis::Rows)?;
    let rx_total = tensor_range(x)?;
    let rw_total = tensor_range(w)?;
    let ratio = |r: &[f64], total: f64| -> Vec<f64> {
        if total == 0.0 {
            vec![0.0; r.len()]
        } else {
            r.iter().map(|&v| v / total).collect()
        }
    };
    Ok(DifficultyRatios {
        p_x: ratio(&sx.range, rx_total),
        p_w: ratio(&sw.range, rw_total),
    })
}

/// Summed per-channel difficulty product `sum_i p_i^X * p_i^W` for a
/// concrete activation/weight pair; 0 if either tensor is constant.
pub fn difficulty_objective(x: &Matrix, w: &Matrix) -> Result<f64> {
    let r = difficulty_ratios(x, w)?;
    Ok(r.p_x.iter().zip(&r.p_w).map(|(a, b)| a * b).sum())
}

/// Same objective evaluated on per-channel ranges alone, taking each
/// tensor's range as its largest channel range. Used by the grid oracle
/// and by pipeline diagnostics, where only ranges are known.
pub fn objective_from_ranges(r_x: &[f64], r_w: &[f64]) -> Result<f64> {
    if r_x.len() != r_w.len() {
        return Err(AweqError::LengthMismatch {
            expected: r_x.len(),
            got: r_w.len(),
        });
    }
    validate_ranges(r_x)?;
    validate_ranges(r_w)?;
    let rx_total = r_x.iter().copied().fold(0.0f64, f64::max);
    let rw_total = r_w.iter().copied().fold(0.0f64, f64::max);
    if rx_total == 0.0 || rw_total == 0.0 {
        return Ok(0.0);
    }
    Ok(r_x
        .iter()
        .zip(r_w)
        .map(|(&rx, &rw)| (rx / rx_total) * (rw / rw_total))
        .sum())
}

/// Applies scales to an activation/weight pair: column `i` of `X` is
/// divided by `s_i`, row `i` of `W` multiplied by it. The product
/// `X̂ · Ŵ` equals `X · W` in exact arithmetic.
pub fn apply_equalization(
    x: &Matrix,
    w: &Matrix,
    s: &EqualizationFactors,
) -> Result<(Matrix, Matrix)> {
    if x.cols() != w.rows() {
        return Err(AweqError::ChannelMismatch {
            expected: x.cols(),
            got: w.rows(),
        });
    }
    if s.len() != x.cols() {
        return Err(AweqError::LengthMismatch {
            expected: x.cols(),
            got: s.len(),
        });
    }
    Ok((x.scale_cols_div(s.as_slice())?, w.scale_rows_mul(s.as_slice())?))
}

/// Absorbs `diag(s)^-1` into the layer that produces the activations:
/// output column `j` and bias entry `j` are divided by `s_j`.
///
/// Legal only when the producer's nonlinearity is positive-homogeneous
/// (identity or relu); anything else cannot commute with the scaling and
/// callers must fall back to an explicit scale op.
pub fn fold_scale_into_previous(prev: &LinearLayer, s: &EqualizationFactors) -> Result<LinearLayer> {
    if s.len() != prev.out_dim() {
        return Err(AweqError::LengthMismatch {
            expected: prev.out_dim(),
            got: s.len(),
        });
    }
    if !prev.activation.is_positive_homogeneous() {
        return Err(AweqError::UnsupportedFold {
            activation: prev.activation.name(),
        });
    }
    let weight = prev.weight.scale_cols_div(s.as_slice())?;
    let bias = prev.bias.iter().zip(s.as_slice()).map(|(&b, &si)| b / si).collect();
    LinearLayer::new(weight, bias, prev.activation)
}

/// Exhaustive log-grid search for scales maximizing the range-based
/// objective; the verification oracle for the closed form.
///
/// Each non-degenerate channel sweeps `grid_points` log-spaced values on
/// an interval bracketing the closed-form solution (a factor of 4 each
/// side). Degenerate channels are pinned at 1. Ties break toward the
/// closed form. Cost is `grid_points^channels`, so at most 4 channels.
pub fn grid_search_equalization(
    r_x: &[f64],
    r_w: &[f64],
    grid_points: usize,
) -> Result<EqualizationFactors> {
    const MAX_CHANNELS: usize = 4;
    let n = r_x.len();
    if n > MAX_CHANNELS {
        return Err(AweqError::UnsupportedSize {
            limit: MAX_CHANNELS,
            got: n,
        });
    }
    if grid_points == 0 {
        return Err(AweqError::InvalidInput("grid_points must be at least 1"));
    }
    let closed = compute_equalization_factors(r_x, r_w)?;
    let searchable: Vec<usize> = (0..n).filter(|&i| r_x[i] > 0.0 && r_w[i] > 0.0).collect();
    if searchable.is_empty() {
        return Ok(closed);
    }

    let lo = searchable
        .iter()
        .map(|&i| closed.as_slice()[i])
        .fold(f64::INFINITY, f64::min)
        / 4.0;
    let hi = searchable
        .iter()
        .map(|&i| closed.as_slice()[i])
        .fold(0.0f64, f64::max)
        * 4.0;
    let (ln_lo, ln_hi) = (libm::log(lo), libm::log(hi));
    let grid_value = |j: usize| -> f64 {
        if grid_points == 1 {
            libm::exp(0.5 * (ln_lo + ln_hi))
        } else {
            libm::exp(ln_lo + (ln_hi - ln_lo) * j as f64 / (grid_points - 1) as f64)
        }
    };

    let log_dist_to_closed = |s: &[f64]| -> f64 {
        searchable
            .iter()
            .map(|&i| {
                let d = libm::log(s[i]) - libm::log(closed.as_slice()[i]);
                d * d
            })
            .sum()
    };

    let mut candidate = closed.as_slice().to_vec();
    let mut best = candidate.clone();
    let mut best_obj = f64::NEG_INFINITY;
    let mut best_dist = f64::INFINITY;
    let mut counter = vec![0usize; searchable.len()];
    let mut scaled_x = vec![0.0f64; n];
    let mut scaled_w = vec![0.0f64; n];
    loop {
        for (slot, &ch) in counter.iter().zip(&searchable) {
            candidate[ch] = grid_value(*slot);
        }
        for i in 0..n {
            scaled_x[i] = r_x[i] / candidate[i];
            scaled_w[i] = candidate[i] * r_w[i];
        }
        let obj = objective_from_ranges(&scaled_x, &scaled_w)?;
        if obj > best_obj {
            best_obj = obj;
            best_dist = log_dist_to_closed(&candidate);
            best.copy_from_slice(&candidate);
        } else if obj == best_obj {
            let dist = log_dist_to_closed(&candidate);
            if dist < best_dist {
                best_dist = dist;
                best.copy_from_slice(&candidate);
            }
        }
        // Odometer increment over the searchable axes.
        let mut axis = 0;
        loop {
            if axis == counter.len() {
                return EqualizationFactors::new(best);
            }
            counter[axis] += 1;
            if counter[axis] < grid_points {
                break;
            }
            counter[axis] = 0;
            axis += 1;
        }
    }
}
