//! Fixed-length segmentation of feature matrices and segment-vote
//! aggregation.
//!
//! Utterances are cut into `n_s = ceil(u / s)` segments of `s` frames; the
//! last is zero-padded by `n_s·s − u` frames. All arithmetic is done in whole
//! 10 ms frames so the identities hold exactly.

use crate::corpus::Dialect;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::HOP_MS;

/// First quartile as the `((n+1)/4)`-th smallest value (1-based), linearly
/// interpolated when fractional and clamped to the first/last value.
pub fn first_quartile(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("first quartile of an empty set".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let q = (n as f64 + 1.0) / 4.0;
    if q <= 1.0 {
        return Ok(v[0]);
    }
    if q >= n as f64 {
        return Ok(v[n - 1]);
    }
    let lo = q.floor() as usize;
    let frac = q - lo as f64;
    Ok(v[lo - 1] + frac * (v[lo] - v[lo - 1]))
}

/// Segment length in frames for a segment duration in seconds.
pub fn segment_frames(d_s: f64) -> Result<usize> {
    let f = (d_s * 1000.0 / HOP_MS).round();
    if !(f >= 1.0) {
        return Err(Error::InvalidArgument(format!("segment duration {d_s} s is shorter than one frame")));
    }
    Ok(f as usize)
}

/// How an utterance of `u` frames splits into segments of `s` frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentPlan {
    pub n_segments: usize,
    /// Real frames in the last segment (`d_l`).
    pub last_len: usize,
    /// Zero frames appended to the last segment (`d_z = s − d_l`).
    pub pad_frames: usize,
}

pub fn plan(u: usize, s: usize) -> Result<SegmentPlan> {
    if u == 0 || s == 0 {
        return Err(Error::InvalidArgument(format!("cannot split {u} frames into {s}-frame segments")));
    }
    let n_segments = u.div_ceil(s);
    let last_len = u - (n_segments - 1) * s;
    Ok(SegmentPlan {
        n_segments,
        last_len,
        pad_frames: s - last_len,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Exactly `s` frames; the trailing `pad_frames` are zero.
    pub matrix: FeatureMatrix,
    pub pad_frames: usize,
    pub parent_id: String,
    pub label: Option<Dialect>,
}

pub fn split(m: &FeatureMatrix, s: usize, label: Option<Dialect>) -> Result<Vec<Segment>> {
    if m.num_frames() == 0 || m.num_channels() == 0 {
        return Err(Error::InvalidArgument(format!("empty feature matrix for {}", m.source_id)));
    }
    let p = plan(m.num_frames(), s)?;
    (0..p.n_segments)
        .map(|k| {
            let start = k * s;
            let end = (start + s).min(m.num_frames());
            let pad = s - (end - start);
            let rows = m
                .rows()
                .iter()
                .map(|r| {
                    let mut row = r[start..end].to_vec();
                    row.resize(s, 0.0);
                    row
                })
                .collect();
            Ok(Segment {
                matrix: FeatureMatrix::new(rows, m.channel_ids().to_vec(), m.hop_ms, m.source_id.clone())?,
                pad_frames: pad,
                parent_id: m.source_id.clone(),
                label,
            })
        })
        .collect()
}

/// Concatenate segments with their padding removed.
pub fn unsplit(segments: &[Segment]) -> Result<FeatureMatrix> {
    let first = segments
        .first()
        .ok_or_else(|| Error::InvalidArgument("no segments to join".into()))?;
    let c = first.matrix.num_channels();
    let mut rows = vec![Vec::new(); c];
    for seg in segments {
        let keep = seg.matrix.num_frames() - seg.pad_frames;
        for (dst, src) in rows.iter_mut().zip(seg.matrix.rows()) {
            dst.extend_from_slice(&src[..keep]);
        }
    }
    FeatureMatrix::new(rows, first.matrix.channel_ids().to_vec(), first.matrix.hop_ms, first.parent_id.clone())
}

/// Column means of per-segment softmax outputs `[p_LT, p_CT]`.
pub fn mean_activations(activations: &[[f64; 2]]) -> Result<[f64; 2]> {
    if activations.is_empty() {
        return Err(Error::InvalidArgument("no segment activations".into()));
    }
    let mut sum = [0.0; 2];
    for (i, row) in activations.iter().enumerate() {
        let total = row[0] + row[1];
        if !((total - 1.0).abs() <= 1e-6) || row.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "segment {i}: activations {row:?} are not a distribution"
            )));
        }
        sum[0] += row[0];
        sum[1] += row[1];
    }
    let n = activations.len() as f64;
    Ok([sum[0] / n, sum[1] / n])
}

/// Utterance decision from averaged segment activations; ties go to LT.
pub fn aggregate(activations: &[[f64; 2]]) -> Result<Dialect> {
    mean_activations(activations)?;
    Ok(argmax_of_means(activations))
}

/// The decision rule alone, without checking that rows are distributions.
pub fn argmax_of_means(scores: &[[f64; 2]]) -> Dialect {
    let (lt, ct) = scores.iter().fold((0.0, 0.0), |(a, b), r| (a + r[0], b + r[1]));
    if ct > lt {
        Dialect::Ct
    } else {
        Dialect::Lt
    }
}
