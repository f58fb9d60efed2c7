//! Run configuration: defaults, then an optional TOML file, then flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use lctid_core::cnn::Optimizer;
use lctid_core::experiments::{Balance, ExperimentConfig};
use lctid_core::features::{parse_feature_set, FeatureConfig};
use lctid_core::FeatureId;
use serde::{Deserialize, Serialize};

/// A bad flag or config value; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Keys accepted in a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub arch: Option<String>,
    pub features: Option<String>,
    pub optimizer: Option<Optimizer>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub patience: Option<usize>,
    pub folds: Option<usize>,
    pub test_fraction: Option<f64>,
    pub validation_fraction: Option<f64>,
    pub balanced: Option<String>,
    pub segment_s: Option<f64>,
    pub seed: Option<u64>,
    pub extraction: Option<FeatureConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainingArgs {
    /// TOML file with any of the options below; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Network architecture: CA01, CA02 or CA03
    #[arg(long)]
    pub arch: Option<String>,
    /// Feature set, e.g. `handcrafted`, `mfcc`, `mfcc+top3`, `F0,HNR`
    #[arg(long)]
    pub features: Option<String>,
    /// Override the architecture's optimizer: `sgd` or `minibatch-gd`
    #[arg(long, value_parser = parse_optimizer)]
    pub optimizer: Option<Optimizer>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Epochs without validation improvement before stopping
    #[arg(long)]
    pub patience: Option<usize>,
    /// Cross-validation folds
    #[arg(long)]
    pub folds: Option<usize>,
    /// Share of utterances held out for testing
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Share of training utterances used for early stopping (0 disables)
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// Class balancing of the training set: `off`, `equal`, or a duration per class such as `8h` or `90m`
    #[arg(long)]
    pub balanced: Option<String>,
    /// Segment length in seconds (default: first quartile of training durations)
    #[arg(long)]
    pub segment_s: Option<f64>,
}

fn parse_optimizer(s: &str) -> std::result::Result<Optimizer, String> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "sgd" => Ok(Optimizer::Sgd),
        "minibatch-gd" | "minibatch" => Ok(Optimizer::MinibatchGd),
        _ => Err(format!("unknown optimizer `{s}` (expected sgd or minibatch-gd)")),
    }
}

pub fn parse_balance(s: &str) -> Result<Balance> {
    let t = s.trim().to_ascii_lowercase();
    let hours = |num: &str, scale: f64| -> Result<Balance> {
        let v: f64 = num
            .parse()
            .map_err(|_| usage(format!("balanced: cannot parse `{s}` (use off, equal, 8h or 90m)")))?;
        if !(v >= 0.0) {
            return Err(usage(format!("balanced: negative duration `{s}`")));
        }
        Ok(Balance::Hours(v * scale))
    };
    match t.as_str() {
        "off" | "no" | "none" => Ok(Balance::Off),
        "equal" | "equalize" => Ok(Balance::Equalize),
        _ if t.ends_with('h') => hours(&t[..t.len() - 1], 1.0),
        _ if t.ends_with('m') => hours(&t[..t.len() - 1], 1.0 / 60.0),
        _ => hours(&t, 1.0),
    }
}

/// Fully resolved settings, recorded next to every output.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub features_spec: String,
    #[serde(skip)]
    pub features: Vec<FeatureId>,
    pub experiment: ExperimentConfig,
    pub extraction: FeatureConfig,
}

fn check_fraction(name: &str, v: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { (0.0..1.0).contains(&v) } else { v > 0.0 && v < 1.0 };
    if !ok {
        bail!(usage(format!("{name} = {v} is outside the allowed range")));
    }
    Ok(())
}

impl TrainingArgs {
    pub fn resolve(&self, seed: Option<u64>, default_features: &str) -> Result<Resolved> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let mut e = ExperimentConfig::default();
        macro_rules! pick {
            ($field:ident) => {
                if let Some(v) = self.$field.clone().or(file.$field.clone()) {
                    e.$field = v;
                }
            };
        }
        pick!(arch);
        pick!(batch_size);
        pick!(epochs);
        pick!(patience);
        pick!(folds);
        pick!(test_fraction);
        pick!(validation_fraction);
        e.optimizer = self.optimizer.or(file.optimizer);
        e.learning_rate = self.learning_rate.or(file.learning_rate);
        e.segment_s = self.segment_s.or(file.segment_s);
        if let Some(b) = self.balanced.as_ref().or(file.balanced.as_ref()) {
            e.balance = parse_balance(b)?;
        }
        e.seed = seed.or(file.seed).unwrap_or(0);

        e.arch_spec().map_err(|err| usage(format!("arch: {err}")))?;
        if let Some(lr) = e.learning_rate {
            if !(lr >= 0.0) {
                bail!(usage(format!("learning_rate = {lr} must be non-negative")));
            }
        }
        if e.epochs == 0 || e.batch_size == 0 {
            bail!(usage("epochs and batch_size must be at least 1"));
        }
        if e.folds < 2 {
            bail!(usage(format!("folds = {} must be at least 2", e.folds)));
        }
        check_fraction("test_fraction", e.test_fraction, false)?;
        check_fraction("validation_fraction", e.validation_fraction, true)?;
        if let Some(s) = e.segment_s {
            if !(s > 0.0) {
                bail!(usage(format!("segment_s = {s} must be positive")));
            }
        }

        let spec = self
            .features
            .clone()
            .or(file.features.clone())
            .unwrap_or_else(|| default_features.to_string());
        let features = parse_feature_set(&spec).map_err(|err| usage(format!("features: {err}")))?;
        Ok(Resolved {
            features_spec: spec,
            features,
            experiment: e,
            extraction: file.extraction.unwrap_or_default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balance_forms() {
        assert_eq!(parse_balance("8h").unwrap(), Balance::Hours(8.0));
        assert_eq!(parse_balance("90m").unwrap(), Balance::Hours(1.5));
        assert_eq!(parse_balance("equal").unwrap(), Balance::Equalize);
        assert_eq!(parse_balance("off").unwrap(), Balance::Off);
        assert!(parse_balance("lots").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "arch = \"CA02\"\nepochs = 3\nfeatures = \"top3\"\n").unwrap();
        let args = TrainingArgs {
            config: Some(path.clone()),
            epochs: Some(7),
            ..TrainingArgs::default()
        };
        let r = args.resolve(Some(5), "handcrafted").unwrap();
        assert_eq!(r.experiment.arch, "CA02");
        assert_eq!(r.experiment.epochs, 7);
        assert_eq!(r.experiment.seed, 5);
        assert_eq!(r.features.len(), 3);

        std::fs::write(&path, "epochz = 3\n").unwrap();
        let err = args.resolve(None, "handcrafted").unwrap_err();
        assert!(err.is::<UsageError>());
        assert!(err.to_string().contains("epochz"));
    }
}
