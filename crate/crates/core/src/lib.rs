//! Literary vs colloquial speech dialect identification.
//!
//! The pipeline runs from audio to decision:
//!
//! ```text
//! WAV -> frames -> {pitch, handcrafted features, MFCC} -> FeatureMatrix
//!     -> z-score -> fixed-length segments -> 1D-CNN -> averaged activations
//! ```
//!
//! [`experiments`] wraps that pipeline in cross-validation, feature ablation
//! (recursive elimination and independent evaluation) and feature-combination
//! runs. [`corpus::synth`] generates a small two-class corpus so the whole
//! thing can be exercised without the original recordings.

pub mod cnn;
pub mod corpus;
pub mod dsp;
pub mod error;
pub mod experiments;
pub mod features;
pub mod fsutil;
pub mod pitch;
pub mod segmenter;

pub use corpus::{CorpusManifest, Dialect, UtteranceRecord, Waveform};
pub use error::{Error, Result};
pub use features::{FeatureId, FeatureMatrix};

/// All analysis runs at this rate; other rates are rejected rather than resampled.
pub const SAMPLE_RATE_HZ: u32 = 16_000;

/// Hop between successive analysis frames for every feature channel.
pub const HOP_MS: f64 = 10.0;
