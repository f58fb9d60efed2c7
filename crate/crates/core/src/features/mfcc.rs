//! Mel-frequency cepstral coefficients.

use serde::{Deserialize, Serialize};

use crate::dsp::SpectrumAnalyzer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub num_coeffs: usize,
    pub num_filters: usize,
    pub pre_emphasis: f64,
    pub fft_size: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    /// Filter energies are floored here before the log.
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            num_coeffs: 13,
            num_filters: 26,
            pre_emphasis: 0.97,
            fft_size: 512,
            low_hz: 0.0,
            high_hz: 8000.0,
            log_floor: 1e-10,
        }
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Precomputed filterbank and DCT for one frame length.
pub struct Mfcc {
    cfg: MfccConfig,
    analyzer: SpectrumAnalyzer,
    /// `num_filters × (fft_size/2 + 1)` triangular weights on the power spectrum.
    filters: Vec<Vec<f64>>,
    /// `num_coeffs × num_filters` orthonormal DCT-II rows.
    dct: Vec<Vec<f64>>,
}

impl Mfcc {
    pub fn new(cfg: MfccConfig, frame_len: usize, sample_rate_hz: u32) -> Result<Self> {
        let nyquist = sample_rate_hz as f64 / 2.0;
        if cfg.num_coeffs == 0 || cfg.num_coeffs > cfg.num_filters {
            return Err(Error::InvalidArgument(format!(
                "need 1..={} cepstral coefficients, got {}",
                cfg.num_filters, cfg.num_coeffs
            )));
        }
        if !(0.0 <= cfg.low_hz && cfg.low_hz < cfg.high_hz && cfg.high_hz <= nyquist) {
            return Err(Error::InvalidArgument(format!(
                "mel range {}..{} Hz outside 0..{nyquist} Hz",
                cfg.low_hz, cfg.high_hz
            )));
        }
        let analyzer = SpectrumAnalyzer::new(frame_len, cfg.fft_size, sample_rate_hz)?;
        let bins = cfg.fft_size / 2 + 1;
        let bin_hz = sample_rate_hz as f64 / cfg.fft_size as f64;
        let (m_lo, m_hi) = (hz_to_mel(cfg.low_hz), hz_to_mel(cfg.high_hz));
        let edges: Vec<f64> = (0..cfg.num_filters + 2)
            .map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (cfg.num_filters + 1) as f64))
            .collect();
        let filters = (0..cfg.num_filters)
            .map(|m| {
                let (l, c, r) = (edges[m], edges[m + 1], edges[m + 2]);
                (0..bins)
                    .map(|j| {
                        let f = j as f64 * bin_hz;
                        if f > l && f <= c {
                            (f - l) / (c - l)
                        } else if f > c && f < r {
                            (r - f) / (r - c)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let n = cfg.num_filters as f64;
        let dct = (0..cfg.num_coeffs)
            .map(|k| {
                let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
                (0..cfg.num_filters)
                    .map(|m| scale * (std::f64::consts::PI * k as f64 * (m as f64 + 0.5) / n).cos())
                    .collect()
            })
            .collect();
        Ok(Mfcc {
            cfg,
            analyzer,
            filters,
            dct,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    /// Log mel filterbank energies of one frame.
    pub fn log_mel(&self, frame: &[f64]) -> Vec<f64> {
        let a = self.cfg.pre_emphasis;
        let emphasized: Vec<f64> = frame
            .iter()
            .enumerate()
            .map(|(i, &x)| if i == 0 { x } else { x - a * frame[i - 1] })
            .collect();
        let spec = self.analyzer.complex_spectrum(&emphasized);
        let power: Vec<f64> = spec[..=self.cfg.fft_size / 2].iter().map(|c| c.norm_sqr()).collect();
        self.filters
            .iter()
            .map(|w| {
                let e: f64 = w.iter().zip(&power).map(|(w, p)| w * p).sum();
                e.max(self.cfg.log_floor).ln()
            })
            .collect()
    }

    pub fn compute(&self, frame: &[f64]) -> Vec<f64> {
        let logs = self.log_mel(frame);
        self.dct
            .iter()
            .map(|row| row.iter().zip(&logs).map(|(d, l)| d * l).sum())
            .collect()
    }
}
