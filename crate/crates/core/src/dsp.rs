//! Framing, Hamming windowing, magnitude spectra and the Bark transform.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::corpus::Waveform;
use crate::error::{Error, Result};

/// Number of samples spanned by `ms` milliseconds.
pub fn ms_to_samples(ms: f64, sample_rate_hz: u32) -> usize {
    (ms * sample_rate_hz as f64 / 1000.0).round() as usize
}

/// Overlapping frames stored row-major, `num_frames × frame_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeries {
    data: Vec<f64>,
    pub frame_len: usize,
    pub hop: usize,
    pub num_frames: usize,
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub sample_rate_hz: u32,
}

impl FrameSeries {
    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.frame_len..(i + 1) * self.frame_len]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.frame_len)
    }
}

/// Number of whole frames of `frame_len` at stride `hop` in `n` samples.
pub fn num_frames(n: usize, frame_len: usize, hop: usize) -> usize {
    if n < frame_len || frame_len == 0 || hop == 0 {
        0
    } else {
        (n - frame_len) / hop + 1
    }
}

/// Cut `w` into frames starting every `hop_ms`. No window is applied.
pub fn frame_signal(w: &Waveform, frame_ms: f64, hop_ms: f64) -> Result<FrameSeries> {
    let frame_len = ms_to_samples(frame_ms, w.sample_rate_hz);
    let hop = ms_to_samples(hop_ms, w.sample_rate_hz);
    if frame_len == 0 || hop == 0 {
        return Err(Error::InvalidArgument(format!(
            "frame {frame_ms} ms / hop {hop_ms} ms round to zero samples"
        )));
    }
    let n = w.samples.len();
    if n < frame_len {
        return Err(Error::TooShort(format!(
            "{n} samples is shorter than one {frame_ms} ms frame ({frame_len} samples)"
        )));
    }
    let count = num_frames(n, frame_len, hop);
    let mut data = Vec::with_capacity(count * frame_len);
    for i in 0..count {
        data.extend_from_slice(&w.samples[i * hop..i * hop + frame_len]);
    }
    Ok(FrameSeries {
        data,
        frame_len,
        hop,
        num_frames: count,
        frame_ms,
        hop_ms,
        sample_rate_hz: w.sample_rate_hz,
    })
}

/// Symmetric Hamming window.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / denom).cos())
        .collect()
}

/// Magnitudes of bins `1..=K/2` (DC excluded). `magnitudes[j]` is bin `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub magnitudes: Vec<f64>,
    pub bin_hz: f64,
    pub fft_size: usize,
}

impl Spectrum {
    /// Centre frequency of `magnitudes[j]`.
    #[inline]
    pub fn freq(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.bin_hz
    }

    pub fn scaled(&self, c: f64) -> Spectrum {
        Spectrum {
            magnitudes: self.magnitudes.iter().map(|m| m * c).collect(),
            ..self.clone()
        }
    }

    pub fn is_silent(&self) -> bool {
        self.magnitudes.iter().all(|&m| m == 0.0)
    }
}

/// Smallest power of two that is at least `n`.
pub fn fft_size_for(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Windowed FFT with a cached plan, for repeated frames of one length.
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    fft_size: usize,
    sample_rate_hz: u32,
}

impl SpectrumAnalyzer {
    pub fn new(frame_len: usize, fft_size: usize, sample_rate_hz: u32) -> Result<Self> {
        if !fft_size.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("FFT size {fft_size} is not a power of two")));
        }
        if fft_size < frame_len {
            return Err(Error::InvalidArgument(format!(
                "FFT size {fft_size} is smaller than the frame ({frame_len} samples)"
            )));
        }
        let fft = FftPlanner::new().plan_fft_forward(fft_size);
        Ok(SpectrumAnalyzer {
            fft,
            window: hamming(frame_len),
            fft_size,
            sample_rate_hz,
        })
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn frame_len(&self) -> usize {
        self.window.len()
    }

    /// Full complex spectrum (all K bins) of the Hamming-windowed,
    /// zero-padded frame.
    pub fn complex_spectrum(&self, frame: &[f64]) -> Vec<Complex<f64>> {
        assert_eq!(frame.len(), self.window.len(), "frame length does not match analyzer");
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_size];
        for ((b, &x), &w) in buf.iter_mut().zip(frame).zip(&self.window) {
            b.re = x * w;
        }
        self.fft.process(&mut buf);
        buf
    }

    pub fn magnitude(&self, frame: &[f64]) -> Spectrum {
        let buf = self.complex_spectrum(frame);
        Spectrum {
            magnitudes: buf[1..=self.fft_size / 2].iter().map(|c| c.norm()).collect(),
            bin_hz: self.sample_rate_hz as f64 / self.fft_size as f64,
            fft_size: self.fft_size,
        }
    }
}

/// One-off magnitude spectrum of `frame`. Prefer [`SpectrumAnalyzer`] in loops.
pub fn magnitude_spectrum(frame: &[f64], fft_size: usize, sample_rate_hz: u32) -> Result<Spectrum> {
    Ok(SpectrumAnalyzer::new(frame.len(), fft_size, sample_rate_hz)?.magnitude(frame))
}

/// Traunmüller's Bark approximation, floored at zero so that 0 Hz maps to
/// 0 Bark (the raw formula dips to -0.53 below about 40 Hz).
pub fn bark(f_hz: f64) -> f64 {
    (26.81 * f_hz / (1960.0 + f_hz) - 0.53).max(0.0)
}

pub fn hz_to_bark(f_hz: f64) -> Result<f64> {
    if f_hz < 0.0 || f_hz.is_nan() {
        return Err(Error::InvalidArgument(format!("negative frequency {f_hz}")));
    }
    Ok(bark(f_hz))
}
