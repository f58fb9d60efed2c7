//! Per-frame descriptors.

use crate::dsp::{bark, Spectrum};
use crate::error::{Error, Result};
use crate::pitch::PeriodSequence;

/// Sum of squared samples.
pub fn energy(frame: &[f64]) -> f64 {
    frame.iter().map(|x| x * x).sum()
}

/// Sign changes per second. A zero sample counts as a crossing when its two
/// neighbours have opposite signs.
pub fn zcr(frame: &[f64], sample_rate_hz: u32) -> f64 {
    let n = frame.len();
    if n == 0 {
        return 0.0;
    }
    let mut crossings = 0usize;
    for i in 1..n {
        let crossed = if frame[i] != 0.0 {
            frame[i - 1] * frame[i] < 0.0
        } else {
            i + 1 < n && frame[i - 1] * frame[i + 1] < 0.0
        };
        crossings += crossed as usize;
    }
    crossings as f64 * sample_rate_hz as f64 / n as f64
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn need(p: &PeriodSequence, n: usize) -> Result<()> {
    if p.len() < n {
        Err(Error::TooFewPeriods {
            needed: n,
            found: p.len(),
        })
    } else {
        Ok(())
    }
}

/// Mean absolute difference of successive periods over the mean period.
pub fn jitter(p: &PeriodSequence) -> Result<f64> {
    need(p, 3)?;
    let t = &p.periods_s;
    let diffs: f64 = t.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok(diffs / (t.len() - 1) as f64 / mean(t))
}

/// Mean absolute change of the local jitter `|T(n) - T(n-1)|` over the
/// mean period.
pub fn jitter_derivative(p: &PeriodSequence) -> Result<f64> {
    need(p, 4)?;
    let t = &p.periods_s;
    let local: Vec<f64> = t.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let second: f64 = local.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok(second / (t.len() - 2) as f64 / mean(t))
}

/// Mean absolute difference of successive peak-to-peak amplitudes over the
/// mean amplitude.
pub fn shimmer(p: &PeriodSequence) -> Result<f64> {
    need(p, 3)?;
    let a = &p.peak_amps;
    let m = mean(a);
    if !(m > 0.0) {
        return Ok(0.0);
    }
    let diffs: f64 = a.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok(diffs / (a.len() - 1) as f64 / m)
}

pub const HNR_MIN: f64 = 1e-4;
pub const HNR_MAX: f64 = 1e4;

fn normalized_autocorr(x: &[f64], lag: usize) -> f64 {
    let n = x.len() - lag;
    let (mut num, mut e0, mut e1) = (0.0, 0.0, 0.0);
    for i in 0..n {
        num += x[i] * x[i + lag];
        e0 += x[i] * x[i];
        e1 += x[i + lag] * x[i + lag];
    }
    let d = (e0 * e1).sqrt();
    if d > 0.0 {
        num / d
    } else {
        0.0
    }
}

/// log10 harmonic-to-noise ratio from the normalised autocorrelation `r` at
/// the pitch period: `HNR = r / (1 - r)`, clamped to [1e-4, 1e4]. The lag is
/// the best one within ±10 % of `1/f0`.
pub fn hnr(frame: &[f64], f0_hz: f64, sample_rate_hz: u32) -> Result<f64> {
    if !(f0_hz > 0.0) {
        return Err(Error::Unvoiced);
    }
    let period = sample_rate_hz as f64 / f0_hz;
    let lo = ((0.9 * period).floor() as usize).max(1);
    let hi = (1.1 * period).ceil() as usize;
    if hi + 2 > frame.len() {
        return Err(Error::TooShort(format!(
            "{}-sample frame cannot hold two periods of {f0_hz:.1} Hz",
            frame.len()
        )));
    }
    let r = (lo..=hi)
        .map(|lag| normalized_autocorr(frame, lag))
        .fold(f64::NEG_INFINITY, f64::max);
    let ratio = if r >= 1.0 { HNR_MAX } else { r / (1.0 - r) };
    Ok(ratio.clamp(HNR_MIN, HNR_MAX).log10())
}

fn weighted_mean(spec: &Spectrum, map: impl Fn(f64) -> f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (j, &x) in spec.magnitudes.iter().enumerate() {
        num += map(spec.freq(j)) * x;
        den += x;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Amplitude-weighted mean frequency in Hz over bins `1..=K/2`; 0 for silence.
pub fn spectral_centroid(spec: &Spectrum) -> f64 {
    weighted_mean(spec, |f| f)
}

/// Spectral centroid on the Bark scale.
pub fn sharpness(spec: &Spectrum) -> f64 {
    weighted_mean(spec, bark)
}

/// Squared distance between successive L2-normalised spectra; 0 if either
/// spectrum is silent. Always within [0, 4].
pub fn spectral_flux(cur: &Spectrum, prev: &Spectrum) -> f64 {
    let norm = |s: &Spectrum| s.magnitudes.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (mc, mp) = (norm(cur), norm(prev));
    if mc == 0.0 || mp == 0.0 {
        return 0.0;
    }
    cur.magnitudes
        .iter()
        .zip(&prev.magnitudes)
        .map(|(a, b)| (a / mc - b / mp).powi(2))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    fn seq(periods_ms: &[f64]) -> PeriodSequence {
        PeriodSequence {
            periods_s: periods_ms.iter().map(|p| p / 1000.0).collect(),
            peak_amps: vec![1.0; periods_ms.len()],
        }
    }

    fn spec_of(m: Vec<f64>) -> Spectrum {
        Spectrum {
            magnitudes: m,
            bin_hz: 31.25,
            fft_size: 512,
        }
    }

    #[test]
    fn energy_values() {
        assert_eq!(energy(&[0.0; 16]), 0.0);
        assert_eq!(energy(&[0.5; 4]), 1.0);
    }

    #[test]
    fn zcr_values() {
        assert_eq!(zcr(&[0.3; 320], 16_000), 0.0);
        let alt: Vec<f64> = (0..320).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(zcr(&alt, 16_000), 15_950.0);
        // 100 Hz over 20 ms: two cycles, two crossings each. The phase offset
        // keeps zeros off the frame edges, where no crossing can be counted.
        let sine: Vec<f64> = (0..320)
            .map(|i| (2.0 * PI * 100.0 * i as f64 / 16_000.0 + 0.1).sin())
            .collect();
        assert_eq!(zcr(&sine, 16_000), 200.0);
    }

    #[test]
    fn zcr_zero_sample_rule() {
        // x(n) = 0 counts when the neighbours straddle zero, once.
        assert_eq!(zcr(&[1.0, 0.0, -1.0, -1.0], 4), 1.0);
        assert_eq!(zcr(&[1.0, 0.0, 1.0, 1.0], 4), 0.0);
        assert_eq!(zcr(&[1.0, 1.0, 1.0, 0.0], 4), 0.0);
    }

    #[test]
    fn jitter_hand_arithmetic() {
        assert_eq!(jitter(&seq(&[5.0; 6])).unwrap(), 0.0);
        let j = jitter(&seq(&[10.0, 10.0, 12.0, 12.0])).unwrap();
        assert!((j - (2.0 / 3.0) / 11.0).abs() < 1e-15);
        assert!((j - 0.060_606_060_606).abs() < 1e-12);
        let j2 = jitter(&seq(&[20.0, 20.0, 24.0, 24.0])).unwrap();
        assert!((j - j2).abs() < 1e-15);
        assert!(jitter(&seq(&[5.0, 5.0])).is_err());
    }

    #[test]
    fn jitter_derivative_hand_arithmetic() {
        assert!(jitter_derivative(&seq(&[10.0, 11.0, 12.0, 13.0])).unwrap().abs() < 1e-12);
        let d = jitter_derivative(&seq(&[10.0, 10.0, 12.0, 12.0])).unwrap();
        assert!((d - 2.0 / 11.0).abs() < 1e-15);
        assert_eq!(jitter_derivative(&seq(&[7.0; 5])).unwrap(), 0.0);
        assert!(jitter_derivative(&seq(&[5.0, 6.0, 5.0])).is_err());
    }

    #[test]
    fn shimmer_hand_arithmetic() {
        let mut p = seq(&[5.0; 4]);
        assert_eq!(shimmer(&p).unwrap(), 0.0);
        p.peak_amps = vec![1.0, 1.0, 0.8, 0.8];
        let s = shimmer(&p).unwrap();
        assert!((s - (0.2 / 3.0) / 0.9).abs() < 1e-15);
        assert!((s - 0.074_074).abs() < 1e-6);
        p.peak_amps.iter_mut().for_each(|a| *a *= 7.5);
        assert!((shimmer(&p).unwrap() - s).abs() < 1e-15);
    }

    #[test]
    fn hnr_pure_tone_is_clamped_high() {
        let x: Vec<f64> = (0..960).map(|i| (2.0 * PI * 200.0 * i as f64 / 16_000.0).sin()).collect();
        assert!(hnr(&x, 200.0, 16_000).unwrap() >= 3.0);
        assert!(matches!(hnr(&x, 0.0, 16_000), Err(Error::Unvoiced)));
    }

    #[test]
    fn hnr_equal_energies_near_zero() {
        let mut acc = 0.0;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phase: f64 = rng.random_range(0.0..2.0 * PI);
            let tone: Vec<f64> = (0..960)
                .map(|i| (2.0 * PI * 200.0 * i as f64 / 16_000.0 + phase).sin())
                .collect();
            let noise: Vec<f64> = (0..960).map(|_| StandardNormal.sample(&mut rng)).collect();
            let et = energy(&tone);
            let en = energy(&noise);
            let k = (et / en).sqrt();
            let x: Vec<f64> = tone.iter().zip(&noise).map(|(t, n)| t + k * n).collect();
            acc += hnr(&x, 200.0, 16_000).unwrap();
        }
        let mean = acc / 50.0;
        assert!(mean.abs() <= 0.15, "mean log-HNR {mean}");
    }

    #[test]
    fn centroid_and_sharpness_simple_cases() {
        let mut m = vec![0.0; 256];
        m[9] = 2.0;
        let s = spec_of(m.clone());
        assert_eq!(spectral_centroid(&s), s.freq(9));
        assert_eq!(sharpness(&s), bark(s.freq(9)));
        m[29] = 2.0;
        let s = spec_of(m);
        assert!((spectral_centroid(&s) - (s.freq(9) + s.freq(29)) / 2.0).abs() < 1e-9);
        let z = spec_of(vec![0.0; 256]);
        assert_eq!(spectral_centroid(&z), 0.0);
        assert_eq!(sharpness(&z), 0.0);
    }

    #[test]
    fn flux_simple_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = spec_of((0..256).map(|_| rng.random_range(0.0..1.0)).collect());
        assert_eq!(spectral_flux(&a, &a), 0.0);
        assert!(spectral_flux(&a.scaled(2.0), &a) < 1e-24);
        let mut u = vec![0.0; 256];
        let mut v = vec![0.0; 256];
        u[3] = 1.0;
        v[50] = 1.0;
        assert_eq!(spectral_flux(&spec_of(u.clone()), &spec_of(v)), 2.0);
        assert_eq!(spectral_flux(&spec_of(u), &spec_of(vec![0.0; 256])), 0.0);
    }

    proptest! {
        #[test]
        fn ratio_features_scale_invariant(seed in 0u64..500, c in 0.001f64..1000.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = spec_of((0..256).map(|_| rng.random_range(0.0..1.0)).collect());
            let b = spec_of((0..256).map(|_| rng.random_range(0.0..1.0)).collect());
            let tol = |x: f64| 1e-9 * (1.0 + x.abs());
            let ca = spectral_centroid(&a);
            prop_assert!((spectral_centroid(&a.scaled(c)) - ca).abs() <= tol(ca));
            let sa = sharpness(&a);
            prop_assert!((sharpness(&a.scaled(c)) - sa).abs() <= tol(sa));
            let f = spectral_flux(&a, &b);
            prop_assert!((spectral_flux(&a.scaled(c), &b) - f).abs() <= tol(f));
            prop_assert!((0.0..=4.0).contains(&f));

            let frame: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
            let scaled: Vec<f64> = frame.iter().map(|x| x * c).collect();
            let e = energy(&frame);
            prop_assert!((energy(&scaled) - c * c * e).abs() <= 1e-9 * c * c * e);

            let periods: Vec<f64> = (0..8).map(|_| rng.random_range(0.003..0.01)).collect();
            let amps: Vec<f64> = (0..8).map(|_| rng.random_range(0.1..1.0)).collect();
            let p = PeriodSequence { periods_s: periods.clone(), peak_amps: amps.clone() };
            let q = PeriodSequence {
                periods_s: periods.iter().map(|t| t * c).collect(),
                peak_amps: amps.iter().map(|a| a * c).collect(),
            };
            let (j, jq) = (jitter(&p).unwrap(), jitter(&q).unwrap());
            prop_assert!((j - jq).abs() <= tol(j));
            let (s, sq) = (shimmer(&p).unwrap(), shimmer(&q).unwrap());
            prop_assert!((s - sq).abs() <= tol(s));
        }
    }
}
