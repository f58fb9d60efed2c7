use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::descriptors::{energy, hnr, jitter, jitter_derivative, sharpness, shimmer, spectral_flux, zcr};
use super::{FeatureGroup, FeatureId, FeatureMatrix, Mfcc, MfccConfig};
use crate::corpus::{read_wav, CorpusManifest, Waveform};
use crate::dsp::{frame_signal, Spectrum, SpectrumAnalyzer};
use crate::error::{Error, Result};
use crate::pitch::{shs_estimate, track_periods, PitchConfig};
use crate::{HOP_MS, SAMPLE_RATE_HZ};

/// Shortest waveform accepted for extraction.
pub const MIN_DURATION_MS: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Frame for F0, ENERGY and VPROB.
    pub prosodic_frame_ms: f64,
    /// Frame for JITTER, DJITTER, SHIMMER and HNR. These need several pitch
    /// periods, so they share the long prosodic frame by default.
    pub voice_quality_frame_ms: f64,
    /// Frame for SFLUX, SHARP, ZCR and MFCC.
    pub short_frame_ms: f64,
    pub long_fft: usize,
    pub short_fft: usize,
    pub pitch: PitchConfig,
    pub mfcc: MfccConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            prosodic_frame_ms: 60.0,
            voice_quality_frame_ms: 60.0,
            short_frame_ms: 20.0,
            long_fft: 1024,
            short_fft: 512,
            pitch: PitchConfig::default(),
            mfcc: MfccConfig::default(),
        }
    }
}

/// Reusable extractor with FFT plans and filterbanks built once.
pub struct FeatureExtractor {
    cfg: FeatureConfig,
    long: SpectrumAnalyzer,
    short: SpectrumAnalyzer,
    mfcc: Mfcc,
}

#[derive(Default)]
struct PitchTrack {
    f0: Vec<f64>,
    vprob: Vec<f64>,
}

impl FeatureExtractor {
    pub fn new(cfg: FeatureConfig) -> Result<Self> {
        let sr = SAMPLE_RATE_HZ;
        let len = |ms: f64| crate::dsp::ms_to_samples(ms, sr);
        if cfg.voice_quality_frame_ms != cfg.prosodic_frame_ms && cfg.voice_quality_frame_ms != cfg.short_frame_ms {
            return Err(Error::InvalidArgument(
                "voice-quality frame must equal the prosodic or the short frame".into(),
            ));
        }
        Ok(FeatureExtractor {
            long: SpectrumAnalyzer::new(len(cfg.prosodic_frame_ms), cfg.long_fft, sr)?,
            short: SpectrumAnalyzer::new(len(cfg.short_frame_ms), cfg.short_fft, sr)?,
            mfcc: Mfcc::new(cfg.mfcc.clone(), len(cfg.short_frame_ms), sr)?,
            cfg,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    /// Extract `ids` from `w`. Rows come out in canonical [`FeatureId`] order
    /// whatever the order of `ids`.
    pub fn extract(&self, w: &Waveform, ids: &[FeatureId], source_id: &str) -> Result<FeatureMatrix> {
        if w.sample_rate_hz != SAMPLE_RATE_HZ {
            return Err(Error::SampleRate {
                got: w.sample_rate_hz,
                expected: SAMPLE_RATE_HZ,
            });
        }
        if w.duration_s() * 1000.0 < MIN_DURATION_MS {
            return Err(Error::TooShort(format!(
                "{source_id}: {:.1} ms waveform, need at least {MIN_DURATION_MS} ms",
                w.duration_s() * 1000.0
            )));
        }
        let mut ids = ids.to_vec();
        ids.sort();
        ids.dedup();
        if ids.is_empty() {
            return Err(Error::InvalidArgument("empty feature set".into()));
        }

        let cfg = &self.cfg;
        let long = frame_signal(w, cfg.prosodic_frame_ms, HOP_MS)?;
        let short = frame_signal(w, cfg.short_frame_ms, HOP_MS)?;
        let n = long.num_frames.min(short.num_frames);
        let vq_frames = if cfg.voice_quality_frame_ms == cfg.prosodic_frame_ms { &long } else { &short };

        let needs_pitch = ids.iter().any(|id| {
            matches!(id, FeatureId::F0 | FeatureId::Vprob) || id.group() == FeatureGroup::VoiceQuality
        });
        let pitch = if needs_pitch {
            let mut p = PitchTrack::default();
            for i in 0..n {
                let est = shs_estimate(&self.long.magnitude(long.frame(i)), &cfg.pitch);
                p.f0.push(est.f0_hz);
                p.vprob.push(est.voicing_prob);
            }
            p
        } else {
            PitchTrack::default()
        };
        let needs_short_spec = ids.iter().any(|id| matches!(id, FeatureId::Sflux | FeatureId::Sharp));
        let short_specs: Vec<Spectrum> = if needs_short_spec {
            (0..n).map(|i| self.short.magnitude(short.frame(i))).collect()
        } else {
            Vec::new()
        };
        let needs_vq = ids.iter().any(|id| id.group() == FeatureGroup::VoiceQuality);
        let periods: Vec<Option<_>> = if needs_vq {
            (0..n)
                .map(|i| track_periods(vq_frames.frame(i), pitch.f0[i], SAMPLE_RATE_HZ, &cfg.pitch).ok())
                .collect()
        } else {
            Vec::new()
        };
        let mfccs: Vec<Vec<f64>> = if ids.iter().any(|id| matches!(id, FeatureId::Mfcc(_))) {
            (0..n).map(|i| self.mfcc.compute(short.frame(i))).collect()
        } else {
            Vec::new()
        };

        let vq = |i: usize, f: fn(&crate::pitch::PeriodSequence) -> Result<f64>| -> f64 {
            periods[i].as_ref().and_then(|p| f(p).ok()).unwrap_or(0.0)
        };
        let rows = ids
            .iter()
            .map(|&id| -> Vec<f64> {
                match id {
                    FeatureId::F0 => pitch.f0.clone(),
                    FeatureId::Vprob => pitch.vprob.clone(),
                    FeatureId::Energy => (0..n).map(|i| energy(long.frame(i))).collect(),
                    FeatureId::Jitter => (0..n).map(|i| vq(i, jitter)).collect(),
                    FeatureId::Djitter => (0..n).map(|i| vq(i, jitter_derivative)).collect(),
                    FeatureId::Shimmer => (0..n).map(|i| vq(i, shimmer)).collect(),
                    FeatureId::Hnr => (0..n)
                        .map(|i| {
                            if pitch.f0[i] > 0.0 {
                                hnr(vq_frames.frame(i), pitch.f0[i], SAMPLE_RATE_HZ).unwrap_or(0.0)
                            } else {
                                0.0
                            }
                        })
                        .collect(),
                    FeatureId::Sflux => (0..n)
                        .map(|i| if i == 0 { 0.0 } else { spectral_flux(&short_specs[i], &short_specs[i - 1]) })
                        .collect(),
                    FeatureId::Sharp => short_specs.iter().map(sharpness).collect(),
                    FeatureId::Zcr => (0..n).map(|i| zcr(short.frame(i), SAMPLE_RATE_HZ)).collect(),
                    FeatureId::Mfcc(k) => mfccs.iter().map(|c| c[k as usize]).collect(),
                }
            })
            .collect();
        FeatureMatrix::new(rows, ids, HOP_MS, source_id)
    }
}

/// Extract with the default configuration.
pub fn extract_matrix(w: &Waveform, ids: &[FeatureId]) -> Result<FeatureMatrix> {
    FeatureExtractor::new(FeatureConfig::default())?.extract(w, ids, "")
}

/// Read and extract every utterance of `manifest` in parallel. Output order
/// follows the manifest.
pub fn extract_corpus(manifest: &CorpusManifest, ids: &[FeatureId], cfg: &FeatureConfig) -> Result<Vec<FeatureMatrix>> {
    let ex = FeatureExtractor::new(cfg.clone())?;
    manifest
        .records()
        .par_iter()
        .map(|r| ex.extract(&read_wav(&r.audio_path)?, ids, &r.id))
        .collect()
}
