//! Desk-scale two-class corpus.
//!
//! Both classes come from one source-filter generator: a jittered pulse train
//! through two time-varying resonances. The LT-like class gets fast pitch and
//! loudness modulation, quickly moving resonances, rougher voicing and short
//! pauses; the CT-like class is smooth and continuous.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{write_manifest, write_wav_pcm16, CorpusManifest, Dialect, UtteranceRecord, Waveform};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_utterances: usize,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
    pub sample_rate_hz: u32,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_utterances: 200,
            min_duration_s: 1.0,
            max_duration_s: 4.0,
            sample_rate_hz: crate::SAMPLE_RATE_HZ,
        }
    }
}

struct Style {
    /// Relative depth and rate (Hz) of two F0 modulators.
    f0_mod: [(f64, f64); 2],
    /// Depth and rate of the loudness modulation.
    amp_mod: (f64, f64),
    jitter: f64,
    shimmer: f64,
    /// Seconds between new resonance targets.
    formant_hold_s: f64,
    /// Mean seconds between pauses; `None` for continuous speech.
    pause_every_s: Option<f64>,
}

fn style(d: Dialect) -> Style {
    match d {
        Dialect::Lt => Style {
            f0_mod: [(0.08, 4.5), (0.04, 9.0)],
            amp_mod: (0.7, 5.0),
            jitter: 0.02,
            shimmer: 0.12,
            formant_hold_s: 0.08,
            pause_every_s: Some(0.8),
        },
        Dialect::Ct => Style {
            f0_mod: [(0.03, 0.7), (0.0, 0.0)],
            amp_mod: (0.2, 1.2),
            jitter: 0.003,
            shimmer: 0.02,
            formant_hold_s: 0.4,
            pause_every_s: None,
        },
    }
}

const NOISE_FLOOR: f64 = 3e-4;
const PEAK: f64 = 0.6;

/// Two-pole resonator with per-sample coefficients.
#[derive(Default)]
struct Resonator {
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn step(&mut self, x: f64, freq: f64, bw: f64, sr: f64) -> f64 {
        let r = (-PI * bw / sr).exp();
        let a1 = 2.0 * r * (2.0 * PI * freq / sr).cos();
        let a2 = -r * r;
        let y = (1.0 - r) * x + a1 * self.y1 + a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Piecewise-constant targets smoothed by a one-pole glide.
struct Glide {
    value: f64,
    target: f64,
    coeff: f64,
}

impl Glide {
    fn new(v: f64, tau_s: f64, sr: f64) -> Self {
        Glide {
            value: v,
            target: v,
            coeff: (-1.0 / (tau_s * sr)).exp(),
        }
    }

    fn step(&mut self) -> f64 {
        self.value = self.target + (self.value - self.target) * self.coeff;
        self.value
    }
}

/// Pause mask: 1 in speech, 0 in pauses, with 5 ms linear ramps.
fn pause_mask(n: usize, sr: f64, every_s: Option<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut mask = vec![1.0; n];
    let Some(every) = every_s else { return mask };
    let ramp = (0.005 * sr) as usize;
    let mut t = rng.random_range(0.3..every + 0.3);
    let dur = n as f64 / sr;
    while t < dur - 0.2 {
        let len = rng.random_range(0.06..0.15);
        let start = (t * sr) as usize;
        let end = (((t + len) * sr) as usize).min(n);
        for (i, m) in mask.iter_mut().enumerate().take(end + ramp).skip(start.saturating_sub(ramp)) {
            let g = if i < start {
                (start - i) as f64 / ramp as f64
            } else if i >= end {
                (i - end) as f64 / ramp as f64
            } else {
                0.0
            };
            *m = m.min(g.min(1.0));
        }
        t += len + rng.random_range(0.5 * every..1.5 * every);
    }
    mask
}

/// One utterance of `dialect`, fully determined by `seed`.
pub fn synth_utterance(dialect: Dialect, duration_s: f64, sample_rate_hz: u32, seed: u64) -> Result<Waveform> {
    if !(duration_s > 0.0) || sample_rate_hz == 0 {
        return Err(Error::InvalidArgument(format!(
            "cannot synthesise {duration_s} s at {sample_rate_hz} Hz"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let st = style(dialect);
    let sr = sample_rate_hz as f64;
    let n = (duration_s * sr).round().max(1.0) as usize;
    let unit = Normal::new(0.0, 1.0).unwrap();

    let base_f0 = rng.random_range(100.0..220.0);
    let phases: [f64; 3] = [
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
    ];
    let f0_at = |t: f64| {
        let m: f64 = st
            .f0_mod
            .iter()
            .zip(&phases)
            .map(|(&(depth, rate), ph)| depth * (2.0 * PI * rate * t + ph).sin())
            .sum();
        base_f0 * (1.0 + m)
    };
    let amp_at = |t: f64| 1.0 + st.amp_mod.0 * (2.0 * PI * st.amp_mod.1 * t + phases[2]).sin();

    // Excitation: one impulse per glottal cycle, split across two samples at
    // its fractional position.
    let mut source = vec![0.0; n + 2];
    let mut pos = rng.random_range(0.0..sr / base_f0);
    while pos < n as f64 {
        let t = pos / sr;
        let a = (amp_at(t) * (1.0 + st.shimmer * unit.sample(&mut rng))).max(0.0);
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        source[i] += a * (1.0 - frac);
        source[i + 1] += a * frac;
        let period = sr / f0_at(t) * (1.0 + st.jitter * unit.sample(&mut rng));
        pos += period.max(sr / 500.0);
    }

    let mask = pause_mask(n, sr, st.pause_every_s, &mut rng);
    let hold = ((st.formant_hold_s * sr) as usize).max(1);
    let mut f1 = Glide::new(rng.random_range(300.0..800.0), 0.015, sr);
    let mut f2 = Glide::new(rng.random_range(900.0..2200.0), 0.015, sr);
    let (mut r1, mut r2) = (Resonator::default(), Resonator::default());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i % hold == 0 && i > 0 {
            f1.target = rng.random_range(300.0..800.0);
            f2.target = rng.random_range(900.0..2200.0);
        }
        let (a, b) = (f1.step(), f2.step());
        let y = r2.step(r1.step(source[i], a, 80.0, sr), b, 120.0, sr);
        out.push(y * mask[i]);
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = if peak > 0.0 { PEAK / peak } else { 0.0 };
    for v in &mut out {
        *v = (*v * gain + NOISE_FLOOR * unit.sample(&mut rng)).clamp(-1.0, 1.0);
    }
    Waveform::new(out, sample_rate_hz)
}

fn utterance_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Write `spec.n_utterances` WAVs plus `manifest.tsv` into `out_dir`.
/// Classes alternate, starting with LT.
pub fn synth_corpus(spec: &SynthSpec, out_dir: &Path, seed: u64) -> Result<CorpusManifest> {
    if !(spec.min_duration_s > 0.0 && spec.min_duration_s <= spec.max_duration_s) {
        return Err(Error::InvalidArgument(format!(
            "bad duration range {}..{} s",
            spec.min_duration_s, spec.max_duration_s
        )));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut records = Vec::with_capacity(spec.n_utterances);
    for i in 0..spec.n_utterances {
        let s = utterance_seed(seed, i);
        let dialect = if i % 2 == 0 { Dialect::Lt } else { Dialect::Ct };
        let duration = if spec.max_duration_s > spec.min_duration_s {
            ChaCha8Rng::seed_from_u64(s ^ 0xD1A1).random_range(spec.min_duration_s..spec.max_duration_s)
        } else {
            spec.min_duration_s
        };
        let w = synth_utterance(dialect, duration, spec.sample_rate_hz, s)?;
        let id = format!("synth_{i:04}_{dialect}");
        let path = out_dir.join(format!("{id}.wav"));
        write_wav_pcm16(&path, &w)?;
        records.push(UtteranceRecord {
            id,
            audio_path: path,
            dialect,
            duration_s: w.duration_s(),
        });
    }
    let manifest = CorpusManifest::new(records)?;
    write_manifest(&manifest, &out_dir.join("manifest.tsv"))?;
    Ok(manifest)
}
