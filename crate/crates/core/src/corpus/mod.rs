//! Labelled utterances: manifests, WAV decoding, balanced subsets and the
//! synthetic two-class corpus.

mod manifest;
pub mod synth;
mod wav;

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use manifest::{load_manifest, write_manifest};
pub use synth::{synth_corpus, synth_utterance, SynthSpec};
pub use wav::{read_wav, wav_duration_s, write_wav_pcm16};

/// The two target classes. `Lt` has class index 0, `Ct` index 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dialect {
    /// Literary (formal, read-style) speech.
    #[serde(rename = "LT")]
    Lt,
    /// Colloquial (casual, spontaneous) speech.
    #[serde(rename = "CT")]
    Ct,
}

impl Dialect {
    pub const ALL: [Dialect; 2] = [Dialect::Lt, Dialect::Ct];

    pub fn index(self) -> usize {
        match self {
            Dialect::Lt => 0,
            Dialect::Ct => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Dialect> {
        match i {
            0 => Some(Dialect::Lt),
            1 => Some(Dialect::Ct),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dialect::Lt => "LT",
            Dialect::Ct => "CT",
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dialect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LT" => Ok(Dialect::Lt),
            "CT" => Ok(Dialect::Ct),
            other => Err(Error::InvalidArgument(format!(
                "unknown dialect label `{other}` (expected LT or CT)"
            ))),
        }
    }
}

/// Mono PCM audio with values in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidArgument("sample rate must be > 0".into()));
        }
        if samples.is_empty() {
            return Err(Error::InvalidArgument("waveform has no samples".into()));
        }
        Ok(Waveform {
            samples,
            sample_rate_hz,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub id: String,
    pub audio_path: PathBuf,
    pub dialect: Dialect,
    pub duration_s: f64,
}

/// An immutable, validated list of utterances with per-class duration totals.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    records: Vec<UtteranceRecord>,
    total_duration_per_class: [f64; 2],
}

impl CorpusManifest {
    /// Validates id uniqueness and positive durations.
    pub fn new(records: Vec<UtteranceRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        let mut totals = [0.0; 2];
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate utterance id `{}`", r.id)));
            }
            if !(r.duration_s > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "utterance `{}` has non-positive duration",
                    r.id
                )));
            }
            totals[r.dialect.index()] += r.duration_s;
        }
        Ok(CorpusManifest {
            records,
            total_duration_per_class: totals,
        })
    }

    pub fn empty() -> Self {
        CorpusManifest {
            records: Vec::new(),
            total_duration_per_class: [0.0; 2],
        }
    }

    pub fn records(&self) -> &[UtteranceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Total seconds of audio labelled `d`.
    pub fn total_duration(&self, d: Dialect) -> f64 {
        self.total_duration_per_class[d.index()]
    }

    pub fn count(&self, d: Dialect) -> usize {
        self.records.iter().filter(|r| r.dialect == d).count()
    }

    pub fn max_duration(&self) -> f64 {
        self.records.iter().map(|r| r.duration_s).fold(0.0, f64::max)
    }

    /// Records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        CorpusManifest::new(indices.iter().map(|&i| self.records[i].clone()).collect())
    }
}

/// Pick utterances per class in seeded-shuffled order until the class total
/// first reaches `hours_per_class`. The output keeps manifest order.
pub fn derive_balanced_subset(
    manifest: &CorpusManifest,
    hours_per_class: f64,
    seed: u64,
) -> Result<CorpusManifest> {
    if !(hours_per_class >= 0.0) {
        return Err(Error::InvalidArgument("hours_per_class must be >= 0".into()));
    }
    balanced_subset_seconds(manifest, hours_per_class * 3600.0, seed)
}

/// [`derive_balanced_subset`] with the per-class target in seconds. Passing
/// the smaller class total exactly keeps that whole class.
pub fn balanced_subset_seconds(manifest: &CorpusManifest, target_s: f64, seed: u64) -> Result<CorpusManifest> {
    if !(target_s >= 0.0) {
        return Err(Error::InvalidArgument("target duration must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; manifest.len()];
    for d in Dialect::ALL {
        let have = manifest.total_duration(d);
        if have < target_s {
            return Err(Error::InsufficientData(format!(
                "class {d} has {:.3} h, {:.3} h requested",
                have / 3600.0,
                target_s / 3600.0
            )));
        }
        let mut idx: Vec<usize> = (0..manifest.len())
            .filter(|&i| manifest.records[i].dialect == d)
            .collect();
        idx.shuffle(&mut rng);
        let mut acc = 0.0;
        for i in idx {
            if acc >= target_s {
                break;
            }
            acc += manifest.records[i].duration_s;
            keep[i] = true;
        }
    }
    let chosen: Vec<usize> = (0..manifest.len()).filter(|&i| keep[i]).collect();
    manifest.subset(&chosen)
}
