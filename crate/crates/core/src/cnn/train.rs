use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{Gradients, Model, Optimizer};
use super::tensor::Tensor2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Stop after this many epochs without a lower validation loss.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::Sgd,
            batch_size: 32,
            learning_rate: Optimizer::Sgd.default_learning_rate(),
            epochs: 30,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} / epochs {} / batch size {} out of range",
                self.learning_rate, self.epochs, self.batch_size
            )));
        }
        Ok(())
    }
}

/// One labelled network input; `label` is 0 for LT and 1 for CT.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Tensor2,
    pub label: usize,
}

fn one_hot(label: usize) -> [f64; 2] {
    let mut t = [0.0; 2];
    t[label] = 1.0;
    t
}

/// One gradient step on `batch`. Returns the mean loss before the update.
pub fn train_step<R: Rng>(model: &mut Model, batch: &[&Example], lr: f64, rng: &mut R) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut grads = Gradients::zeros(model);
    let mut total = 0.0;
    for ex in batch {
        total += model.loss_and_grad(&ex.input, one_hot(ex.label), &mut grads, rng)?;
    }
    let loss = total / batch.len() as f64;
    if !loss.is_finite() {
        return Err(Error::Diverged(format!("loss became {loss}")));
    }
    model.apply(&grads, lr, batch.len() as f64);
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
}

pub fn mean_loss(model: &Model, data: &[Example]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut s = 0.0;
    for ex in data {
        s += model.loss(&ex.input, ex.label)?;
    }
    Ok(s / data.len() as f64)
}

/// Train for up to `cfg.epochs`. With validation data, keeps the weights of
/// the epoch with the lowest validation loss and stops after `cfg.patience`
/// epochs without improvement.
pub fn fit(model: &mut Model, train: &[Example], val: &[Example], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::InsufficientData("no training examples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = TrainReport {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
    };
    let mut best: Option<(f64, Model)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        let mut total = 0.0;
        let mut steps = 0usize;
        match cfg.optimizer {
            Optimizer::MinibatchGd => {
                order.shuffle(&mut rng);
                for chunk in order.chunks(cfg.batch_size) {
                    let batch: Vec<&Example> = chunk.iter().map(|&i| &train[i]).collect();
                    total += train_step(model, &batch, cfg.learning_rate, &mut rng)?;
                    steps += 1;
                }
            }
            Optimizer::Sgd => {
                for _ in 0..train.len() {
                    let i = rng.random_range(0..train.len());
                    total += train_step(model, &[&train[i]], cfg.learning_rate, &mut rng)?;
                    steps += 1;
                }
            }
        }
        report.train_loss.push(total / steps as f64);
        if val.is_empty() {
            report.best_epoch = epoch;
            continue;
        }
        let v = mean_loss(model, val)?;
        report.val_loss.push(v);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, model.clone()));
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    if let Some((_, m)) = best {
        *model = m;
    }
    Ok(report)
}

/// Largest relative difference between the analytic gradient and central
/// finite differences of the loss, over every parameter. Dropout masks are
/// redrawn from `mask_seed` for each evaluation, so they are identical
/// throughout and dropout layers are checked as fixed linear maps.
pub fn grad_check(model: &Model, x: &Tensor2, target: [f64; 2], eps: f64, mask_seed: u64) -> Result<f64> {
    let mut grads = Gradients::zeros(model);
    model.loss_and_grad(x, target, &mut grads, &mut ChaCha8Rng::seed_from_u64(mask_seed))?;
    let analytic = grads.flatten(model);
    let numeric = numeric_gradient(model, x, target, eps, mask_seed)?;
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| relative_error(*a, *n))
        .fold(0.0, f64::max))
}

/// Absolute gradients below this are compared absolutely: the finite
/// difference itself carries rounding error of roughly `1e-16 / eps`.
pub const GRAD_CHECK_FLOOR: f64 = 1e-7;

pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(GRAD_CHECK_FLOOR)
}

/// Analytic gradient, flattened in parameter order.
pub fn analytic_gradient(model: &Model, x: &Tensor2, target: [f64; 2], mask_seed: u64) -> Result<Vec<f64>> {
    let mut grads = Gradients::zeros(model);
    model.loss_and_grad(x, target, &mut grads, &mut ChaCha8Rng::seed_from_u64(mask_seed))?;
    Ok(grads.flatten(model))
}

pub fn numeric_gradient(model: &Model, x: &Tensor2, target: [f64; 2], eps: f64, mask_seed: u64) -> Result<Vec<f64>> {
    let n = model.num_params();
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(n);
    let loss_at = |m: &Model| -> Result<f64> {
        let mut g = Gradients::zeros(m);
        m.loss_and_grad(x, target, &mut g, &mut ChaCha8Rng::seed_from_u64(mask_seed))
    };
    for k in 0..n {
        let orig = nth_param(&probe, k);
        set_param(&mut probe, k, orig + eps);
        let up = loss_at(&probe)?;
        set_param(&mut probe, k, orig - eps);
        let down = loss_at(&probe)?;
        set_param(&mut probe, k, orig);
        out.push((up - down) / (2.0 * eps));
    }
    Ok(out)
}

fn nth_param(m: &Model, k: usize) -> f64 {
    let mut i = 0;
    let mut v = 0.0;
    m.visit_params(|p| {
        if i == k {
            v = *p;
        }
        i += 1;
    });
    v
}

fn set_param(m: &mut Model, k: usize, value: f64) {
    let mut i = 0;
    m.visit_params_mut(|p| {
        if i == k {
            *p = value;
        }
        i += 1;
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::ArchSpec;

    fn tiny(seed: u64) -> Model {
        let spec = ArchSpec {
            name: "TINY".into(),
            kernels: [3, 3, 2, 2],
            conv_channels: [3, 3, 4, 4],
            dense: vec![6, 5],
            conv_dropout: 0.25,
            dense_dropout: 0.5,
            optimizer: Optimizer::Sgd,
        };
        Model::build(&spec, 16, 2, seed).unwrap()
    }

    fn random_input(seed: u64, rows: usize, cols: usize) -> Tensor2 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        Tensor2::new(rows, cols, (0..rows * cols).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in [1, 2] {
            let m = tiny(seed);
            assert!(m.num_params() <= 5000);
            let x = random_input(seed + 10, 16, 2);
            let err = grad_check(&m, &x, [0.0, 1.0], 1e-5, seed).unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn zero_loss_point_has_zero_gradient() {
        let m = tiny(4);
        let x = random_input(5, 16, 2);
        // With dropout masks fixed, the training-mode output is a fixed function.
        let mut g = Gradients::zeros(&m);
        let (logits, _) = m.forward_train(&x, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let p = crate::cnn::layer::softmax(&logits);
        m.loss_and_grad(&x, [p[0], p[1]], &mut g, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(g.flatten(&m).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let mut m = tiny(6);
        let before = m.clone();
        let ex = Example {
            input: random_input(1, 16, 2),
            label: 1,
        };
        train_step(&mut m, &[&ex], 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn memorises_one_sample() {
        let mut m = Model::build_named("CA02", 40, 3, 8).unwrap();
        let ex = Example {
            input: random_input(3, 40, 3),
            label: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut last = f64::INFINITY;
        for _ in 0..200 {
            last = train_step(&mut m, &[&ex], 0.01, &mut rng).unwrap();
        }
        assert!(m.loss(&ex.input, 0).unwrap() < 0.01, "loss {last}");
    }

    #[test]
    fn initial_loss_near_ln2() {
        let m = Model::build_named("CA03", 60, 4, 2).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(7);
        let data: Vec<Example> = (0..64)
            .map(|i| Example {
                input: random_input(100 + i, 60, 4),
                label: r.random_range(0..2),
            })
            .collect();
        let l = mean_loss(&m, &data).unwrap();
        assert!((l - 2f64.ln()).abs() < 0.1, "{l}");
    }

    #[test]
    fn training_is_deterministic() {
        let data: Vec<Example> = (0..12)
            .map(|i| Example {
                input: random_input(i, 16, 2),
                label: (i % 2) as usize,
            })
            .collect();
        let cfg = TrainConfig {
            epochs: 3,
            seed: 5,
            optimizer: Optimizer::MinibatchGd,
            batch_size: 4,
            ..TrainConfig::default()
        };
        let run = || {
            let mut m = tiny(1);
            let r = fit(&mut m, &data[..8], &data[8..], &cfg).unwrap();
            (m, r)
        };
        assert_eq!(run(), run());
    }
}
