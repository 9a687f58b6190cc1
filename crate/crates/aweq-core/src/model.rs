//! Small sequential linear models: the desk-scale stand-in for the MLP
//! path of a transformer block.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{AweqError, Result};
use crate::matrix::{matmul, Matrix};

/// Nonlinearity applied after a linear layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
    Gelu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::None => x,
            Self::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            // Exact erf form: 0.5 x (1 + erf(x / sqrt(2))).
            Self::Gelu => 0.5 * x * (1.0 + libm::erf(x / core::f64::consts::SQRT_2)),
        }
    }

    /// Positive-homogeneous activations commute with positive per-channel
    /// scaling, so equalization scales can fold through them.
    pub fn is_positive_homogeneous(self) -> bool {
        matches!(self, Self::None | Self::Relu)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Relu => "relu",
            Self::Gelu => "gelu",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "none" => Some(Self::None),
            "relu" => Some(Self::Relu),
            "gelu" => Some(Self::Gelu),
            _ => None,
        }
    }
}

/// One affine layer: `y = act(x · W + b)` with `W` of shape
/// `in_dim × out_dim` and `b` of length `out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl LinearLayer {
    pub fn new(weight: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weight.cols() {
            return Err(AweqError::LengthMismatch {
                expected: weight.cols(),
                got: bias.len(),
            });
        }
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    /// Affine part plus activation for a batch of rows.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = matmul(x, &self.weight)?;
        for r in 0..h.rows() {
            let row = h.row_mut(r);
            for (v, &b) in row.iter_mut().zip(&self.bias) {
                *v = self.activation.apply(*v + b);
            }
        }
        Ok(h)
    }
}

/// An ordered chain of linear layers with consistent dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub layers: Vec<LinearLayer>,
}

impl ModelSpec {
    /// Validates the dimension chain: layer `k` must output what layer
    /// `k + 1` consumes.
    pub fn new(input_dim: usize, layers: Vec<LinearLayer>) -> Result<Self> {
        let mut dim = input_dim;
        for layer in &layers {
            if layer.in_dim() != dim {
                return Err(AweqError::ChannelMismatch {
                    expected: dim,
                    got: layer.in_dim(),
                });
            }
            dim = layer.out_dim();
        }
        Ok(Self { input_dim, layers })
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, LinearLayer::out_dim)
    }

    /// Human-readable dimension chain, e.g. `64->256->64`.
    pub fn dims_string(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        let _ = write!(s, "{}", self.input_dim);
        for layer in &self.layers {
            let _ = write!(s, "->{}", layer.out_dim());
        }
        s
    }
}

/// Full-precision forward pass outputs plus every layer's input, kept for
/// calibration.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `layer_inputs[k]` is the batch entering layer `k`.
    pub layer_inputs: Vec<Matrix>,
    pub output: Matrix,
}

/// Runs the model on a batch of rows, retaining per-layer inputs.
pub fn forward_fp(model: &ModelSpec, x: &Matrix) -> Result<ForwardTrace> {
    if x.cols() != model.input_dim {
        return Err(AweqError::ChannelMismatch {
            expected: model.input_dim,
            got: x.cols(),
        });
    }
    let mut layer_inputs = Vec::with_capacity(model.layers.len());
    let mut cur = x.clone();
    for layer in &model.layers {
        layer_inputs.push(cur.clone());
        cur = layer.forward(&cur)?;
    }
    Ok(ForwardTrace {
        layer_inputs,
        output: cur,
    })
}
