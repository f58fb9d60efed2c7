use rand::Rng;

use super::tensor::{axpy, dot, Tensor2};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// Valid 1-D correlation over time, stride 1. `weights` is
    /// `out_ch × (kernel · in_ch)`; row `f` holds the filter laid out like
    /// the input patch (time-major, then channel).
    Conv1d {
        kernel: usize,
        in_ch: usize,
        out_ch: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    Relu,
    /// Non-overlapping max over pairs of frames.
    MaxPool,
    /// Inverted dropout: kept units are scaled by `1/(1-rate)` in training.
    Dropout { rate: f64 },
    Flatten,
    /// `weights` is `outputs × inputs`.
    Dense {
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    Softmax,
}

/// What backward needs from the forward pass.
#[derive(Debug, Clone)]
pub(crate) enum Cache {
    None,
    Input(Tensor2),
    Output(Tensor2),
    /// Winning input index per output, and the input length.
    Argmax(Vec<usize>, usize),
    Mask(Vec<f64>),
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Conv1d { .. } => "Conv1D",
            Layer::Relu => "ReLU",
            Layer::MaxPool => "MaxPooling1D",
            Layer::Dropout { .. } => "Dropout",
            Layer::Flatten => "Flatten",
            Layer::Dense { .. } => "Dense",
            Layer::Softmax => "Softmax",
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            Layer::Conv1d { weights, bias, .. } | Layer::Dense { weights, bias, .. } => weights.len() + bias.len(),
            _ => 0,
        }
    }

    pub fn has_params(&self) -> bool {
        matches!(self, Layer::Conv1d { .. } | Layer::Dense { .. })
    }

    pub fn output_shape(&self, (rows, cols): (usize, usize)) -> Result<(usize, usize)> {
        let bad = |msg: String| Err(Error::ShapeMismatch(format!("{}: {msg}", self.kind())));
        match *self {
            Layer::Conv1d { kernel, in_ch, out_ch, .. } => {
                if cols != in_ch {
                    bad(format!("expected {in_ch} input channels, got {cols}"))
                } else if rows < kernel {
                    bad(format!("{rows} frames shorter than kernel {kernel}"))
                } else {
                    Ok((rows - kernel + 1, out_ch))
                }
            }
            Layer::MaxPool => {
                if rows < 2 {
                    bad(format!("cannot pool {rows} frame(s)"))
                } else {
                    Ok((rows / 2, cols))
                }
            }
            Layer::Flatten => Ok((1, rows * cols)),
            Layer::Dense { inputs, outputs, .. } => {
                if rows != 1 || cols != inputs {
                    bad(format!("expected 1×{inputs}, got {rows}×{cols}"))
                } else {
                    Ok((1, outputs))
                }
            }
            Layer::Relu | Layer::Dropout { .. } | Layer::Softmax => Ok((rows, cols)),
        }
    }

    /// Forward one layer. Dropout draws from `rng` only when `train` is set.
    pub(crate) fn forward<R: Rng>(&self, x: Tensor2, train: bool, rng: &mut R) -> (Tensor2, Cache) {
        match self {
            Layer::Conv1d {
                kernel,
                in_ch,
                out_ch,
                weights,
                bias,
            } => {
                let t_out = x.rows() - kernel + 1;
                let patch = kernel * in_ch;
                let mut out = Tensor2::zeros(t_out, *out_ch);
                let xd = x.data();
                for (t, orow) in out.data_mut().chunks_exact_mut(*out_ch).enumerate() {
                    let p = &xd[t * in_ch..t * in_ch + patch];
                    for (f, o) in orow.iter_mut().enumerate() {
                        *o = bias[f] + dot(&weights[f * patch..(f + 1) * patch], p);
                    }
                }
                (out, Cache::Input(x))
            }
            Layer::Relu => {
                let mut y = x;
                y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
                (y.clone(), Cache::Output(y))
            }
            Layer::MaxPool => {
                let (t_out, c) = (x.rows() / 2, x.cols());
                let mut out = Tensor2::zeros(t_out, c);
                let mut arg = Vec::with_capacity(t_out * c);
                for t in 0..t_out {
                    for ch in 0..c {
                        let a = (2 * t) * c + ch;
                        let b = a + c;
                        let k = if x.data()[b] > x.data()[a] { b } else { a };
                        out.data_mut()[t * c + ch] = x.data()[k];
                        arg.push(k);
                    }
                }
                (out, Cache::Argmax(arg, x.data().len()))
            }
            Layer::Dropout { rate } => {
                if !train || *rate == 0.0 {
                    return (x, Cache::None);
                }
                let keep = 1.0 - rate;
                let mask: Vec<f64> = (0..x.data().len())
                    .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                let mut y = x;
                y.data_mut().iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                (y, Cache::Mask(mask))
            }
            Layer::Flatten => {
                let n = x.data().len();
                (x.reshape(1, n), Cache::None)
            }
            Layer::Dense {
                inputs,
                outputs,
                weights,
                bias,
            } => {
                let xd = x.data();
                let y: Vec<f64> = (0..*outputs)
                    .map(|o| bias[o] + dot(&weights[o * inputs..(o + 1) * inputs], xd))
                    .collect();
                (Tensor2::new(1, *outputs, y).unwrap(), Cache::Input(x))
            }
            Layer::Softmax => {
                let y = softmax(x.data());
                let n = y.len();
                (Tensor2::new(x.rows(), n / x.rows().max(1), y).unwrap(), Cache::None)
            }
        }
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Gradient of one parameterised layer.
#[derive(Debug, Clone)]
pub(crate) enum LayerGrad {
    None,
    Conv { dw: Vec<f64>, db: Vec<f64> },
    /// `dW = Σ δ xᵀ`, kept as its rank-one terms so that applying it touches
    /// the weight matrix once per batch.
    Dense { terms: Vec<(Vec<f64>, Vec<f64>)>, db: Vec<f64> },
}

impl LayerGrad {
    pub(crate) fn zeros_like(layer: &Layer) -> Self {
        match layer {
            Layer::Conv1d { weights, bias, .. } => LayerGrad::Conv {
                dw: vec![0.0; weights.len()],
                db: vec![0.0; bias.len()],
            },
            Layer::Dense { bias, .. } => LayerGrad::Dense {
                terms: Vec::new(),
                db: vec![0.0; bias.len()],
            },
            _ => LayerGrad::None,
        }
    }
}

/// Backpropagate `dy` through `layer`, accumulating parameter gradients into
/// `grad`. Returns the gradient with respect to the layer input, or `None`
/// when `need_dx` is false.
pub(crate) fn backward(layer: &Layer, cache: Cache, dy: Tensor2, grad: &mut LayerGrad, need_dx: bool) -> Option<Tensor2> {
    match (layer, cache) {
        (
            Layer::Conv1d {
                kernel,
                in_ch,
                out_ch,
                weights,
                ..
            },
            Cache::Input(x),
        ) => {
            let LayerGrad::Conv { dw, db } = grad else { unreachable!() };
            let patch = kernel * in_ch;
            let mut dx = if need_dx { Some(Tensor2::zeros(x.rows(), x.cols())) } else { None };
            for (t, drow) in dy.data().chunks_exact(*out_ch).enumerate() {
                let p = &x.data()[t * in_ch..t * in_ch + patch];
                for (f, &g) in drow.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    db[f] += g;
                    axpy(g, p, &mut dw[f * patch..(f + 1) * patch]);
                    if let Some(dx) = dx.as_mut() {
                        axpy(
                            g,
                            &weights[f * patch..(f + 1) * patch],
                            &mut dx.data_mut()[t * in_ch..t * in_ch + patch],
                        );
                    }
                }
            }
            dx
        }
        (Layer::Relu, Cache::Output(y)) => {
            let mut dx = dy;
            dx.data_mut()
                .iter_mut()
                .zip(y.data())
                .for_each(|(d, &v)| if v <= 0.0 { *d = 0.0 });
            Some(dx)
        }
        (Layer::MaxPool, Cache::Argmax(arg, n_in)) => {
            let c = dy.cols();
            let mut dx = Tensor2::zeros(n_in / c, c);
            for (&k, &g) in arg.iter().zip(dy.data()) {
                dx.data_mut()[k] += g;
            }
            Some(dx)
        }
        (Layer::Dropout { .. }, Cache::Mask(mask)) => {
            let mut dx = dy;
            dx.data_mut().iter_mut().zip(&mask).for_each(|(d, m)| *d *= m);
            Some(dx)
        }
        (Layer::Dropout { .. }, Cache::None) => Some(dy),
        (Layer::Flatten, Cache::None) => Some(dy),
        (
            Layer::Dense {
                inputs,
                outputs,
                weights,
                ..
            },
            Cache::Input(x),
        ) => {
            let LayerGrad::Dense { terms, db } = grad else { unreachable!() };
            axpy(1.0, dy.data(), db);
            let dx = need_dx.then(|| {
                let mut dx = vec![0.0; *inputs];
                for (o, &g) in dy.data().iter().enumerate().take(*outputs) {
                    if g != 0.0 {
                        axpy(g, &weights[o * inputs..(o + 1) * inputs], &mut dx);
                    }
                }
                dx
            });
            let (xr, xc) = x.shape();
            terms.push((dy.into_data(), x.into_data()));
            dx.map(|d| Tensor2::new(xr, xc, d).unwrap())
        }
        (l, _) => panic!("inconsistent cache for {} layer", l.kind()),
    }
}
