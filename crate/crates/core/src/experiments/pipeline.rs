//! Feature matrices in, trained networks and utterance-level reports out.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{complement, kfold_indices, stratified_split};
use super::metrics::EvalReport;
use super::ranking::Scorer;
use crate::cnn::{fit, ArchSpec, Example, Model, Optimizer, Tensor2, TrainConfig, TrainReport};
use crate::corpus::{balanced_subset_seconds, CorpusManifest, Dialect, UtteranceRecord};
use crate::error::{Error, Result};
use crate::features::{apply_norm, extract_corpus, fit_norm, FeatureConfig, FeatureId, FeatureMatrix, NormStats};
use crate::segmenter::{aggregate, first_quartile, segment_frames, split};

/// Class balancing applied to the training portion of each run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Balance {
    Off,
    /// Both classes cut to the smaller class's total duration.
    Equalize,
    /// Both classes cut to this many hours (error if a class has less).
    Hours(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub arch: String,
    /// Defaults to the architecture's own training method.
    pub optimizer: Option<Optimizer>,
    pub batch_size: usize,
    /// Defaults to the optimizer's own rate.
    pub learning_rate: Option<f64>,
    pub epochs: usize,
    pub patience: usize,
    /// Folds for cross-validated runs (ablation, combination).
    pub folds: usize,
    /// Held-out share for single train/test runs.
    pub test_fraction: f64,
    /// Share of training utterances held back for early stopping; 0 disables.
    pub validation_fraction: f64,
    pub balance: Balance,
    /// Segment length in seconds; the first quartile of training
    /// utterance durations when unset.
    pub segment_s: Option<f64>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            arch: "CA03".into(),
            optimizer: None,
            batch_size: 32,
            learning_rate: None,
            epochs: 30,
            patience: 5,
            folds: 4,
            test_fraction: 0.2,
            validation_fraction: 0.1,
            balance: Balance::Equalize,
            segment_s: None,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn arch_spec(&self) -> Result<ArchSpec> {
        let mut spec = ArchSpec::named(&self.arch)?;
        if let Some(o) = self.optimizer {
            spec.optimizer = o;
        }
        Ok(spec)
    }

    fn train_config(&self, spec: &ArchSpec, seed: u64) -> TrainConfig {
        TrainConfig {
            optimizer: spec.optimizer,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate.unwrap_or(spec.optimizer.default_learning_rate()),
            epochs: self.epochs,
            patience: self.patience,
            seed,
        }
    }
}

/// Seed for run `k` of an experiment seeded with `seed`.
pub fn run_seed(seed: u64, k: u64) -> u64 {
    seed ^ k.wrapping_add(1).wrapping_mul(0xA076_1D64_78BD_642F)
}

/// Utterances with their extracted features, in manifest order.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub records: Vec<UtteranceRecord>,
    pub matrices: Vec<FeatureMatrix>,
}

impl Dataset {
    pub fn extract(manifest: &CorpusManifest, ids: &[FeatureId], cfg: &FeatureConfig) -> Result<Self> {
        Ok(Dataset {
            records: manifest.records().to_vec(),
            matrices: extract_corpus(manifest, ids, cfg)?,
        })
    }

    pub fn new(records: Vec<UtteranceRecord>, matrices: Vec<FeatureMatrix>) -> Result<Self> {
        if records.len() != matrices.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} records but {} feature matrices",
                records.len(),
                matrices.len()
            )));
        }
        Ok(Dataset { records, matrices })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<Dialect> {
        self.records.iter().map(|r| r.dialect).collect()
    }

    fn manifest(&self, idx: &[usize]) -> Result<CorpusManifest> {
        CorpusManifest::new(idx.iter().map(|&i| self.records[i].clone()).collect())
    }
}

/// Everything needed to classify new utterances.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: Model,
    pub meta: ModelMeta,
}

/// Preprocessing that travels with a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub features: Vec<FeatureId>,
    pub norm: NormStats,
    pub segment_frames: usize,
    pub train_report: Option<TrainReport>,
}

impl TrainedModel {
    /// Fail early if `m` lacks a channel the model was trained on.
    pub fn check_channels(&self, m: &FeatureMatrix) -> Result<()> {
        for f in &self.meta.features {
            if m.channel(*f).is_none() {
                return Err(Error::ShapeMismatch(format!(
                    "model expects channels [{}]; {} has no {f}",
                    self.meta.features.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(","),
                    m.source_id
                )));
            }
        }
        Ok(())
    }

    /// Softmax output of every segment of one utterance.
    pub fn activations(&self, m: &FeatureMatrix) -> Result<Vec<[f64; 2]>> {
        self.check_channels(m)?;
        let normed = apply_norm(&m.select(&self.meta.features)?, &self.meta.norm)?;
        split(&normed, self.meta.segment_frames, None)?
            .iter()
            .map(|s| self.model.predict(&Tensor2::from_features(&s.matrix)))
            .collect()
    }

    pub fn classify(&self, m: &FeatureMatrix) -> Result<Dialect> {
        aggregate(&self.activations(m)?)
    }
}

fn examples(matrices: &[&FeatureMatrix], labels: &[Dialect], s: usize) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for (m, &d) in matrices.iter().zip(labels) {
        for seg in split(m, s, Some(d))? {
            out.push(Example {
                input: Tensor2::from_features(&seg.matrix),
                label: d.index(),
            });
        }
    }
    Ok(out)
}

/// Train on the utterances `train_idx` of `data`, using channels `features`.
pub fn train_model(
    data: &Dataset,
    train_idx: &[usize],
    features: &[FeatureId],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<TrainedModel> {
    if features.is_empty() {
        return Err(Error::InvalidArgument("empty feature set".into()));
    }
    let spec = cfg.arch_spec()?;
    let mut idx = train_idx.to_vec();
    let target_s = match cfg.balance {
        Balance::Off => None,
        Balance::Hours(h) if h >= 0.0 => Some(h * 3600.0),
        Balance::Hours(h) => return Err(Error::InvalidArgument(format!("balance target {h} h is negative"))),
        Balance::Equalize => {
            let m = data.manifest(&idx)?;
            Some(m.total_duration(Dialect::Lt).min(m.total_duration(Dialect::Ct)))
        }
    };
    if let Some(t) = target_s {
        let kept = balanced_subset_seconds(&data.manifest(&idx)?, t, seed)?;
        let pos: HashMap<&str, usize> = idx.iter().map(|&i| (data.records[i].id.as_str(), i)).collect();
        idx = kept.records().iter().map(|r| pos[r.id.as_str()]).collect();
    }
    let labels: Vec<Dialect> = idx.iter().map(|&i| data.records[i].dialect).collect();
    let (fit_idx, val_idx): (Vec<usize>, Vec<usize>) = if cfg.validation_fraction > 0.0 {
        let (a, b) = stratified_split(&labels, cfg.validation_fraction, seed)?;
        (a.iter().map(|&k| idx[k]).collect(), b.iter().map(|&k| idx[k]).collect())
    } else {
        (idx.clone(), Vec::new())
    };

    let d_s = match cfg.segment_s {
        Some(s) => s,
        None => first_quartile(&fit_idx.iter().map(|&i| data.records[i].duration_s).collect::<Vec<_>>())?,
    };
    let s = segment_frames(d_s)?;

    let selected = |ids: &[usize]| -> Result<Vec<FeatureMatrix>> {
        ids.iter().map(|&i| data.matrices[i].select(features)).collect()
    };
    let fit_m = selected(&fit_idx)?;
    let norm = fit_norm(&fit_m)?;
    let normalise = |ms: Vec<FeatureMatrix>| -> Result<Vec<FeatureMatrix>> { ms.iter().map(|m| apply_norm(m, &norm)).collect() };
    let fit_m = normalise(fit_m)?;
    let val_m = normalise(selected(&val_idx)?)?;
    let label_of = |ids: &[usize]| ids.iter().map(|&i| data.records[i].dialect).collect::<Vec<_>>();
    let train_ex = examples(&fit_m.iter().collect::<Vec<_>>(), &label_of(&fit_idx), s)?;
    let val_ex = examples(&val_m.iter().collect::<Vec<_>>(), &label_of(&val_idx), s)?;

    let mut model = Model::build(&spec, s, features.len(), seed)?;
    let report = fit(&mut model, &train_ex, &val_ex, &cfg.train_config(&spec, seed))?;
    Ok(TrainedModel {
        model,
        meta: ModelMeta {
            features: features.to_vec(),
            norm,
            segment_frames: s,
            train_report: Some(report),
        },
    })
}

/// Utterance-level report on `idx`. Every matrix is checked for the model's
/// channels before any scoring.
pub fn evaluate(trained: &TrainedModel, data: &Dataset, idx: &[usize]) -> Result<EvalReport> {
    for &i in idx {
        trained.check_channels(&data.matrices[i])?;
    }
    let predicted = idx
        .par_iter()
        .map(|&i| trained.classify(&data.matrices[i]))
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<Dialect> = idx.iter().map(|&i| data.records[i].dialect).collect();
    EvalReport::from_predictions(&truth, &predicted)
}

/// Results file contents for one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_id: String,
    pub config: ExperimentConfig,
    pub featureset: Vec<FeatureId>,
    pub folds: Vec<EvalReport>,
    pub mean_accuracy: f64,
}

impl RunResult {
    fn new(run_id: String, cfg: &ExperimentConfig, features: &[FeatureId], folds: Vec<EvalReport>) -> Self {
        let mean_accuracy = folds.iter().map(|r| r.accuracy).sum::<f64>() / folds.len() as f64;
        RunResult {
            run_id,
            config: cfg.clone(),
            featureset: features.to_vec(),
            folds,
            mean_accuracy,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

fn feature_tag(features: &[FeatureId]) -> String {
    features.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("+")
}

/// Single stratified train/test run. Returns the model and a one-fold result.
pub fn holdout(data: &Dataset, features: &[FeatureId], cfg: &ExperimentConfig) -> Result<(TrainedModel, RunResult)> {
    let (train, test) = stratified_split(&data.labels(), cfg.test_fraction, cfg.seed)?;
    let model = train_model(data, &train, features, cfg, run_seed(cfg.seed, 0))?;
    let report = evaluate(&model, data, &test)?;
    let id = format!("holdout-{}-{}-seed{}", cfg.arch, feature_tag(features), cfg.seed);
    Ok((model, RunResult::new(id, cfg, features, vec![report])))
}

/// Stratified `cfg.folds`-fold cross-validation. Folds train in parallel,
/// each with its own seed; results come back in fold order.
pub fn cross_validate(data: &Dataset, features: &[FeatureId], cfg: &ExperimentConfig) -> Result<RunResult> {
    let folds = kfold_indices(&data.labels(), cfg.folds, cfg.seed)?;
    let reports = folds
        .par_iter()
        .enumerate()
        .map(|(k, val)| {
            let train = complement(data.len(), val);
            let m = train_model(data, &train, features, cfg, run_seed(cfg.seed, k as u64 + 1))?;
            evaluate(&m, data, val)
        })
        .collect::<Result<Vec<_>>>()?;
    let id = format!("cv{}-{}-{}-seed{}", cfg.folds, cfg.arch, feature_tag(features), cfg.seed);
    Ok(RunResult::new(id, cfg, features, reports))
}

/// Cross-validated run on `base` followed by `extra`. The two sets must not
/// share a channel.
pub fn combine_and_eval(base: &[FeatureId], extra: &[FeatureId], data: &Dataset, cfg: &ExperimentConfig) -> Result<RunResult> {
    if let Some(f) = base.iter().find(|f| extra.contains(f)) {
        return Err(Error::InvalidArgument(format!("feature {f} appears in both sets")));
    }
    let mut all = base.to_vec();
    all.extend_from_slice(extra);
    cross_validate(data, &all, cfg)
}

/// Scores a feature subset by cross-validated mean accuracy.
pub struct PipelineScorer<'a> {
    pub data: &'a Dataset,
    pub cfg: ExperimentConfig,
}

impl Scorer for PipelineScorer<'_> {
    fn score(&self, features: &[FeatureId]) -> Result<f64> {
        Ok(cross_validate(self.data, features, &self.cfg)?.mean_accuracy)
    }
}
