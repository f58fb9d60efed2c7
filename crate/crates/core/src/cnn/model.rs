use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layer::{backward, softmax, Cache, Layer, LayerGrad};
use super::tensor::Tensor2;
use crate::error::{Error, Result};

/// How an architecture is trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Shuffled mini-batches, one pass over the data per epoch.
    MinibatchGd,
    /// Batch of one, drawn at random with replacement.
    Sgd,
}

impl Optimizer {
    /// Batch-of-one updates at 0.01 blow up within a few dozen steps on a
    /// few percent of seeds, so plain SGD takes smaller steps.
    pub fn default_learning_rate(self) -> f64 {
        match self {
            Optimizer::MinibatchGd => 0.01,
            Optimizer::Sgd => 0.003,
        }
    }
}

/// Layer recipe: two conv pairs, each followed by max-pooling and dropout,
/// then the dense stack and a 2-way softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub name: String,
    /// Kernel lengths of the four conv layers.
    pub kernels: [usize; 4],
    pub conv_channels: [usize; 4],
    /// Hidden dense widths, before the final 2-unit layer.
    pub dense: Vec<usize>,
    pub conv_dropout: f64,
    pub dense_dropout: f64,
    pub optimizer: Optimizer,
}

pub const NUM_CLASSES: usize = 2;

impl ArchSpec {
    pub fn named(name: &str) -> Result<Self> {
        let base = |kernels, dense: &[usize], optimizer| ArchSpec {
            name: name.to_ascii_uppercase(),
            kernels,
            conv_channels: [32, 32, 64, 64],
            dense: dense.to_vec(),
            conv_dropout: 0.25,
            dense_dropout: 0.5,
            optimizer,
        };
        match name.to_ascii_uppercase().as_str() {
            "CA01" => Ok(base([10, 10, 5, 5], &[1024], Optimizer::MinibatchGd)),
            "CA02" => Ok(base([7, 7, 3, 3], &[1024], Optimizer::MinibatchGd)),
            "CA03" => Ok(base([7, 7, 3, 3], &[1024, 512], Optimizer::Sgd)),
            _ => Err(Error::UnknownArch(name.to_string())),
        }
    }

    fn validate(&self) -> Result<()> {
        let rate_ok = |r: f64| (0.0..1.0).contains(&r);
        if self.kernels.contains(&0) || self.conv_channels.contains(&0) || self.dense.contains(&0) {
            return Err(Error::InvalidArgument(format!("{}: zero-sized layer", self.name)));
        }
        if !rate_ok(self.conv_dropout) || !rate_ok(self.dense_dropout) {
            return Err(Error::InvalidArgument(format!("{}: dropout rate outside [0, 1)", self.name)));
        }
        Ok(())
    }
}

/// Per-sample or per-batch gradient for every layer of a model.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub(crate) layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros(model: &Model) -> Self {
        Gradients {
            layers: model.layers.iter().map(LayerGrad::zeros_like).collect(),
        }
    }

    /// All parameter gradients flattened in model parameter order
    /// (per layer: weights then biases).
    pub fn flatten(&self, model: &Model) -> Vec<f64> {
        let mut out = Vec::new();
        for (g, layer) in self.layers.iter().zip(&model.layers) {
            match (g, layer) {
                (LayerGrad::Conv { dw, db }, _) => {
                    out.extend_from_slice(dw);
                    out.extend_from_slice(db);
                }
                (LayerGrad::Dense { terms, db }, Layer::Dense { inputs, outputs, .. }) => {
                    let mut dw = vec![0.0; inputs * outputs];
                    for (d, x) in terms {
                        for o in 0..*outputs {
                            for i in 0..*inputs {
                                dw[o * inputs + i] += d[o] * x[i];
                            }
                        }
                    }
                    out.extend_from_slice(&dw);
                    out.extend_from_slice(db);
                }
                _ => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub arch: String,
    pub input_frames: usize,
    pub input_channels: usize,
    pub seed: u64,
    pub layers: Vec<Layer>,
}

/// Round to the nearest f32 so parameters survive the model file unchanged.
#[inline]
pub(crate) fn snap(v: f64) -> f64 {
    v as f32 as f64
}

fn he_uniform(n: usize, fan_in: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let limit = (6.0 / fan_in as f64).sqrt();
    (0..n).map(|_| snap(rng.random_range(-limit..limit))).collect()
}

impl Model {
    /// Build `spec` for `frames × channels` inputs, He-uniform initialised
    /// from `seed`.
    pub fn build(spec: &ArchSpec, frames: usize, channels: usize, seed: u64) -> Result<Model> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut in_ch = channels;
        for block in 0..2 {
            for j in 0..2 {
                let (kernel, out_ch) = (spec.kernels[2 * block + j], spec.conv_channels[2 * block + j]);
                let fan_in = kernel * in_ch;
                layers.push(Layer::Conv1d {
                    kernel,
                    in_ch,
                    out_ch,
                    weights: he_uniform(out_ch * fan_in, fan_in, &mut rng),
                    bias: vec![0.0; out_ch],
                });
                layers.push(Layer::Relu);
                in_ch = out_ch;
            }
            layers.push(Layer::MaxPool);
            layers.push(Layer::Dropout { rate: spec.conv_dropout });
        }
        layers.push(Layer::Flatten);
        let mut model = Model {
            arch: spec.name.clone(),
            input_frames: frames,
            input_channels: channels,
            seed,
            layers,
        };
        let (_, mut width) = model.output_shape()?;
        for &h in &spec.dense {
            model.layers.push(Layer::Dense {
                inputs: width,
                outputs: h,
                weights: he_uniform(width * h, width, &mut rng),
                bias: vec![0.0; h],
            });
            model.layers.push(Layer::Relu);
            model.layers.push(Layer::Dropout { rate: spec.dense_dropout });
            width = h;
        }
        model.layers.push(Layer::Dense {
            inputs: width,
            outputs: NUM_CLASSES,
            weights: he_uniform(width * NUM_CLASSES, width, &mut rng),
            bias: vec![0.0; NUM_CLASSES],
        });
        model.layers.push(Layer::Softmax);
        model.output_shape()?;
        Ok(model)
    }

    pub fn build_named(arch: &str, frames: usize, channels: usize, seed: u64) -> Result<Model> {
        Model::build(&ArchSpec::named(arch)?, frames, channels, seed)
    }

    /// Input shape followed by every layer's output shape.
    pub fn shape_chain(&self) -> Result<Vec<(usize, usize)>> {
        let mut shapes = vec![(self.input_frames, self.input_channels)];
        for l in &self.layers {
            shapes.push(l.output_shape(*shapes.last().unwrap())?);
        }
        Ok(shapes)
    }

    fn output_shape(&self) -> Result<(usize, usize)> {
        Ok(*self.shape_chain()?.last().unwrap())
    }

    /// Parameter count of each conv/dense layer, in order.
    pub fn param_counts(&self) -> Vec<usize> {
        self.layers.iter().filter(|l| l.has_params()).map(Layer::num_params).collect()
    }

    pub fn num_params(&self) -> usize {
        self.param_counts().iter().sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit_params(|p| out.push(*p));
        out
    }

    pub(crate) fn visit_params(&self, mut f: impl FnMut(&f64)) {
        for l in &self.layers {
            if let Layer::Conv1d { weights, bias, .. } | Layer::Dense { weights, bias, .. } = l {
                weights.iter().chain(bias).for_each(&mut f);
            }
        }
    }

    pub(crate) fn visit_params_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for l in &mut self.layers {
            if let Layer::Conv1d { weights, bias, .. } | Layer::Dense { weights, bias, .. } = l {
                weights.iter_mut().chain(bias.iter_mut()).for_each(&mut f);
            }
        }
    }

    fn check_input(&self, x: &Tensor2) -> Result<()> {
        if x.shape() != (self.input_frames, self.input_channels) {
            return Err(Error::ShapeMismatch(format!(
                "model {} expects {}×{} input (frames × channels), got {}×{}",
                self.arch,
                self.input_frames,
                self.input_channels,
                x.rows(),
                x.cols()
            )));
        }
        if x.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite network input".into()));
        }
        Ok(())
    }

    /// Class probabilities `[p_LT, p_CT]` with dropout disabled.
    pub fn predict(&self, x: &Tensor2) -> Result<[f64; 2]> {
        self.check_input(x)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut a = x.clone();
        for l in &self.layers {
            a = l.forward(a, false, &mut rng).0;
        }
        Ok([a.data()[0], a.data()[1]])
    }

    /// Training-mode forward up to the logits, keeping what backward needs.
    pub(crate) fn forward_train<R: Rng>(&self, x: &Tensor2, rng: &mut R) -> Result<(Vec<f64>, Vec<Cache>)> {
        self.check_input(x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        let (last, body) = self.layers.split_last().unwrap();
        debug_assert!(matches!(last, Layer::Softmax));
        for l in body {
            let (y, c) = l.forward(a, true, rng);
            caches.push(c);
            a = y;
        }
        Ok((a.into_data(), caches))
    }

    /// Cross-entropy loss against a (possibly soft) target and its gradient,
    /// accumulated into `grads`. Dropout masks are drawn from `rng`.
    pub fn loss_and_grad<R: Rng>(&self, x: &Tensor2, target: [f64; 2], grads: &mut Gradients, rng: &mut R) -> Result<f64> {
        let (logits, caches) = self.forward_train(x, rng)?;
        let p = softmax(&logits);
        let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
        let loss: f64 = target.iter().zip(&logits).map(|(t, z)| -t * (z - lse)).sum();
        let tsum: f64 = target.iter().sum();
        let dlogits: Vec<f64> = p.iter().zip(&target).map(|(p, t)| tsum * p - t).collect();
        let mut dy = Tensor2::new(1, NUM_CLASSES, dlogits).unwrap();
        let n = caches.len();
        let first_param = self.layers.iter().position(Layer::has_params).unwrap_or(0);
        for (i, cache) in caches.into_iter().enumerate().rev() {
            let need_dx = i > first_param;
            match backward(&self.layers[i], cache, dy, &mut grads.layers[i], need_dx) {
                Some(d) => dy = d,
                None => {
                    debug_assert!(i <= first_param && i < n);
                    break;
                }
            }
        }
        Ok(loss)
    }

    /// Inference-mode loss, for validation.
    pub fn loss(&self, x: &Tensor2, label: usize) -> Result<f64> {
        let p = self.predict(x)?;
        Ok(-p[label].max(1e-300).ln())
    }

    /// `p -= lr/scale · g`, rounded back to f32 precision.
    pub(crate) fn apply(&mut self, grads: &Gradients, lr: f64, scale: f64) {
        let step = lr / scale;
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            match (l, g) {
                (Layer::Conv1d { weights, bias, .. }, LayerGrad::Conv { dw, db }) => {
                    weights.iter_mut().zip(dw).for_each(|(w, d)| *w = snap(*w - step * d));
                    bias.iter_mut().zip(db).for_each(|(b, d)| *b = snap(*b - step * d));
                }
                (Layer::Dense { inputs, weights, bias, .. }, LayerGrad::Dense { terms, db }) => {
                    for (o, row) in weights.chunks_exact_mut(*inputs).enumerate() {
                        let active: Vec<(f64, &[f64])> = terms
                            .iter()
                            .filter(|(d, _)| d[o] != 0.0)
                            .map(|(d, x)| (step * d[o], x.as_slice()))
                            .collect();
                        if active.is_empty() {
                            continue;
                        }
                        for (i, w) in row.iter_mut().enumerate() {
                            let mut acc = 0.0;
                            for (a, x) in &active {
                                acc += a * x[i];
                            }
                            *w = snap(*w - acc);
                        }
                    }
                    bias.iter_mut().zip(db).for_each(|(b, d)| *b = snap(*b - step * d));
                }
                _ => {}
            }
        }
    }
}
