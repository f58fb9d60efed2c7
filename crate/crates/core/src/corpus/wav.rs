//! RIFF/WAVE decoding (PCM16 and IEEE float32) and PCM16 encoding.

use std::io::Cursor;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::Waveform;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

fn map_hound(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::Unsupported => Error::UnsupportedEncoding(format!("{}", path.display())),
        hound::Error::IoError(io)
            if matches!(io.kind(), std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other) =>
        {
            Error::TruncatedAudio(format!("{}", path.display()))
        }
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::TruncatedAudio(format!("{}: {other}", path.display())),
    }
}

/// Errors while pulling samples after a good header mean the data chunk is short.
fn map_sample_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(_) => Error::TruncatedAudio(format!("{}: data chunk ends early", path.display())),
        other => map_hound(path, other),
    }
}

/// Decode a WAV file to mono. Multi-channel audio is averaged per frame.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let reader = WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::UnsupportedEncoding("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_sample_err(path, e))?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| (v as f64).clamp(-1.0, 1.0)))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_sample_err(path, e))?,
        (fmt, bits) => {
            return Err(Error::UnsupportedEncoding(format!(
                "{}: {bits}-bit {fmt:?}",
                path.display()
            )))
        }
    };
    if interleaved.len() % channels != 0 {
        return Err(Error::TruncatedAudio(format!("{}: partial frame", path.display())));
    }
    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|fr| fr.iter().sum::<f64>() / channels as f64)
        .collect();
    if mono.is_empty() {
        return Err(Error::TruncatedAudio(format!("{}: no samples", path.display())));
    }
    Waveform::new(mono, spec.sample_rate)
}

/// Duration from the header alone, without decoding samples.
pub fn wav_duration_s(path: &Path) -> Result<f64> {
    let reader = WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let d = reader.duration() as f64 / spec.sample_rate as f64;
    if d <= 0.0 {
        return Err(Error::TruncatedAudio(format!("{}: no samples", path.display())));
    }
    Ok(d)
}

/// Encode as mono 16-bit PCM. Values are scaled by 32768 and clamped, so a
/// decode of the result is within half an LSB of the input.
pub fn write_wav_pcm16(path: &Path, w: &Waveform) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: w.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut buf = Cursor::new(Vec::with_capacity(44 + 2 * w.samples.len()));
    {
        let mut writer = WavWriter::new(&mut buf, spec).map_err(|e| map_hound(path, e))?;
        for &s in &w.samples {
            let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            writer.write_sample(q).map_err(|e| map_hound(path, e))?;
        }
        writer.finalize().map_err(|e| map_hound(path, e))?;
    }
    write_atomic(path, buf.get_ref())
}
