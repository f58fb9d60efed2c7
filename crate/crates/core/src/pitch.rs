//! Subharmonic-summation pitch estimation and glottal-period tracking.
//!
//! The estimator resamples the magnitude spectrum onto a log-frequency grid,
//! applies an arctangent auditory weight and sums compressed copies shifted
//! by `log2(h)`, `h = 1..=H`. Harmonic energy piles up at the fundamental even
//! when the fundamental itself carries no energy.

use serde::{Deserialize, Serialize};

use crate::dsp::Spectrum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchConfig {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    /// Number of summed subharmonics `H`.
    pub harmonics: usize,
    /// Weight of harmonic `h` is `compression^(h-1)`.
    pub compression: f64,
    pub points_per_octave: usize,
    /// Candidates kept by the greedy peak picker.
    pub candidates: usize,
    /// Frames with voicing probability below this are unvoiced (`f0 = 0`).
    pub voicing_threshold: f64,
    /// Centre of the arctangent low-frequency roll-off.
    pub auditory_knee_hz: f64,
    /// Steepness of the roll-off per octave.
    pub auditory_slope: f64,
    /// Evaluate voicing on the sum divided by what a flat spectrum would
    /// produce at each grid point. Without it the auditory weight tilts the
    /// sum upward and white noise reads as partly voiced.
    pub flatten_trend: bool,
}

impl Default for PitchConfig {
    fn default() -> Self {
        PitchConfig {
            f_min_hz: 60.0,
            f_max_hz: 400.0,
            harmonics: 15,
            compression: 0.84,
            points_per_octave: 96,
            candidates: 5,
            voicing_threshold: 0.45,
            auditory_knee_hz: 1250.0,
            auditory_slope: 1.0,
            flatten_trend: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchEstimate {
    /// Zero when the frame is unvoiced.
    pub f0_hz: f64,
    pub voicing_prob: f64,
    /// `(frequency, subharmonic-sum amplitude)`, strongest first.
    pub candidates: Vec<(f64, f64)>,
}

impl PitchEstimate {
    fn unvoiced() -> Self {
        PitchEstimate {
            f0_hz: 0.0,
            voicing_prob: 0.0,
            candidates: Vec::new(),
        }
    }

    pub fn is_voiced(&self) -> bool {
        self.f0_hz > 0.0
    }
}

/// Voicing probability of one candidate: `1 - mean(S) / amplitude`, clamped to [0, 1].
pub fn voicing_probability(mean_shs: f64, candidate_amp: f64) -> f64 {
    if !(candidate_amp > 0.0) {
        return 0.0;
    }
    (1.0 - mean_shs / candidate_amp).clamp(0.0, 1.0)
}

fn auditory_weight(f: f64, cfg: &PitchConfig) -> f64 {
    0.5 + (cfg.auditory_slope * (f / cfg.auditory_knee_hz).log2()).atan() / std::f64::consts::PI
}

/// Linear interpolation of the magnitude spectrum at `f` Hz; DC counts as 0.
fn interp(spec: &Spectrum, f: f64) -> f64 {
    let pos = f / spec.bin_hz;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    let at = |bin: usize| -> f64 {
        if bin == 0 {
            0.0
        } else {
            spec.magnitudes.get(bin - 1).copied().unwrap_or(0.0)
        }
    };
    at(lo) * (1.0 - frac) + at(lo + 1) * frac
}

/// Subharmonic sum over the log-frequency search grid.
#[derive(Debug, Clone)]
pub struct SubharmonicSum {
    pub freqs: Vec<f64>,
    pub raw: Vec<f64>,
    /// `raw` divided by the response to a flat spectrum.
    pub flattened: Vec<f64>,
}

pub fn subharmonic_sum(spec: &Spectrum, cfg: &PitchConfig) -> SubharmonicSum {
    let nyquist = spec.bin_hz * spec.magnitudes.len() as f64;
    let octaves = (cfg.f_max_hz / cfg.f_min_hz).log2();
    let n = (octaves * cfg.points_per_octave as f64).floor() as usize + 1;
    let mut freqs = Vec::with_capacity(n);
    let mut raw = Vec::with_capacity(n);
    let mut flattened = Vec::with_capacity(n);
    for j in 0..n {
        let f = cfg.f_min_hz * (j as f64 / cfg.points_per_octave as f64).exp2();
        let mut s = 0.0;
        let mut flat = 0.0;
        let mut w = 1.0;
        for h in 1..=cfg.harmonics {
            let fh = h as f64 * f;
            if fh >= nyquist {
                break;
            }
            let aw = w * auditory_weight(fh, cfg);
            s += aw * interp(spec, fh);
            flat += aw;
            w *= cfg.compression;
        }
        freqs.push(f);
        raw.push(s);
        flattened.push(if flat > 0.0 { s / flat } else { 0.0 });
    }
    SubharmonicSum { freqs, raw, flattened }
}

/// Estimate F0 and voicing probability from a (60 ms) magnitude spectrum.
pub fn shs_estimate(spec: &Spectrum, cfg: &PitchConfig) -> PitchEstimate {
    let shs = subharmonic_sum(spec, cfg);
    let SubharmonicSum { freqs, raw: sums, .. } = &shs;
    let n = sums.len();
    if n == 0 {
        return PitchEstimate::unvoiced();
    }
    let voicing_sums = if cfg.flatten_trend { &shs.flattened } else { sums };
    let mean = voicing_sums.iter().sum::<f64>() / n as f64;
    if !(mean > 0.0) || !mean.is_finite() {
        return PitchEstimate::unvoiced();
    }

    let mut peaks: Vec<usize> = (0..n)
        .filter(|&j| {
            let left = if j > 0 { sums[j - 1] } else { f64::NEG_INFINITY };
            let right = if j + 1 < n { sums[j + 1] } else { f64::NEG_INFINITY };
            sums[j] > left && sums[j] >= right
        })
        .collect();
    // Greedy: strongest local maxima first.
    peaks.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    peaks.truncate(cfg.candidates);
    let Some(&best) = peaks.first() else {
        return PitchEstimate::unvoiced();
    };
    let candidates: Vec<(f64, f64)> = peaks.iter().map(|&j| (freqs[j], sums[j])).collect();
    let voicing_prob = voicing_probability(mean, voicing_sums[best]);

    if voicing_prob < cfg.voicing_threshold {
        return PitchEstimate {
            f0_hz: 0.0,
            voicing_prob,
            candidates,
        };
    }

    // Sub-grid peak position by a parabola through the log-grid neighbours.
    let mut pos = best as f64;
    if best > 0 && best + 1 < n {
        let (a, b, c) = (sums[best - 1], sums[best], sums[best + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            pos += (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    let coarse = cfg.f_min_hz * (pos / cfg.points_per_octave as f64).exp2();
    let f0 = refine_from_harmonics(spec, coarse, cfg)
        .unwrap_or(coarse)
        .clamp(cfg.f_min_hz, cfg.f_max_hz);

    PitchEstimate {
        f0_hz: f0,
        voicing_prob,
        candidates,
    }
}

/// Least-squares F0 from the interpolated positions of the harmonic peaks
/// near multiples of `coarse`. Returns `None` when no harmonic peak is found.
fn refine_from_harmonics(spec: &Spectrum, coarse: f64, cfg: &PitchConfig) -> Option<f64> {
    let mags = &spec.magnitudes;
    let nyq = spec.bin_hz * mags.len() as f64;
    let mut found: Vec<(f64, f64, f64)> = Vec::new(); // (h, freq, amplitude)
    for h in 1..=cfg.harmonics {
        let target = h as f64 * coarse;
        if target + spec.bin_hz >= nyq {
            break;
        }
        let tol = (0.03 * target).max(spec.bin_hz);
        let lo = (((target - tol) / spec.bin_hz).floor() as usize).max(2);
        let hi = (((target + tol) / spec.bin_hz).ceil() as usize).min(mags.len() - 1);
        // bins are 1-based: magnitude of bin b is mags[b - 1]
        let mut best: Option<usize> = None;
        for b in lo..=hi {
            let m = mags[b - 1];
            if m > mags[b - 2] && m >= mags[b] && best.is_none_or(|k| m > mags[k - 1]) {
                best = Some(b);
            }
        }
        let Some(b) = best else { continue };
        let (a, m, c) = (mags[b - 2].max(1e-300).ln(), mags[b - 1].max(1e-300).ln(), mags[b].max(1e-300).ln());
        let denom = a - 2.0 * m + c;
        let delta = if denom < 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
        let f = (b as f64 + delta) * spec.bin_hz;
        if (f - target).abs() <= tol {
            found.push((h as f64, f, mags[b - 1]));
        }
    }
    let peak = found.iter().map(|x| x.2).fold(0.0, f64::max);
    let (num, den) = found
        .iter()
        .filter(|x| x.2 >= 0.1 * peak)
        .fold((0.0, 0.0), |(n, d), &(h, f, a)| (n + a * h * f, d + a * h * h));
    (den > 0.0).then(|| num / den)
}

/// Successive glottal-cycle lengths and per-cycle peak-to-peak amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSequence {
    pub periods_s: Vec<f64>,
    pub peak_amps: Vec<f64>,
}

impl PeriodSequence {
    pub fn len(&self) -> usize {
        self.periods_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods_s.is_empty()
    }
}

fn argmax(x: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo..=hi {
        if x[i] > x[best] {
            best = i;
        }
    }
    best
}

/// Mark cycle starts by amplitude-peak picking: the first mark is the largest
/// sample in the first period, and each following mark is the largest sample
/// within ±25 % of one period around the predicted position.
pub fn track_periods(frame: &[f64], f0_hz: f64, sample_rate_hz: u32, cfg: &PitchConfig) -> Result<PeriodSequence> {
    if !(f0_hz > 0.0) {
        return Err(Error::Unvoiced);
    }
    let sr = sample_rate_hz as f64;
    let n = frame.len();
    let period = sr / f0_hz;
    let min_p = sr / cfg.f_max_hz;
    let max_p = sr / cfg.f_min_hz;
    if n < 2 {
        return Err(Error::TooFewPeriods { needed: 3, found: 0 });
    }

    let first_hi = (period.ceil() as usize).min(n - 1);
    let first = argmax(frame, 0, first_hi);
    let mut marks = vec![refine_mark(frame, first)];
    let mut last_int = first;
    loop {
        let lo = (last_int as f64 + (0.75 * period).max(min_p)).ceil() as usize;
        let hi = (last_int as f64 + (1.25 * period).min(max_p)).floor() as usize;
        if hi >= n || lo > hi {
            break;
        }
        let m = argmax(frame, lo, hi);
        let prev = *marks.last().unwrap();
        marks.push(refine_mark(frame, m).clamp(prev + min_p, prev + max_p));
        last_int = m;
    }

    let found = marks.len().saturating_sub(1);
    if found < 3 {
        return Err(Error::TooFewPeriods { needed: 3, found });
    }
    let mut periods_s = Vec::with_capacity(found);
    let mut peak_amps = Vec::with_capacity(found);
    for w in marks.windows(2) {
        periods_s.push((w[1] - w[0]) / sr);
        let a = w[0].round() as usize;
        let b = (w[1].round() as usize).min(n);
        let cycle = &frame[a..b.max(a + 1)];
        let hi = cycle.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = cycle.iter().copied().fold(f64::INFINITY, f64::min);
        peak_amps.push(hi - lo);
    }
    Ok(PeriodSequence { periods_s, peak_amps })
}

/// Fractional peak position from a parabola through the neighbours.
fn refine_mark(x: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= x.len() {
        return i as f64;
    }
    let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom < 0.0 {
        i as f64 + (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        i as f64
    }
}
