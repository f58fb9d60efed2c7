use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::FeatureId;
use crate::error::{Error, Result};

/// Standard deviations are floored here so constant channels normalise to 0.
pub const STD_FLOOR: f64 = 1e-8;

/// Feature values for one utterance, `channels × frames`, on a 10 ms grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    values: Vec<Vec<f64>>,
    channel_ids: Vec<FeatureId>,
    pub hop_ms: f64,
    pub source_id: String,
}

impl FeatureMatrix {
    pub fn new(values: Vec<Vec<f64>>, channel_ids: Vec<FeatureId>, hop_ms: f64, source_id: impl Into<String>) -> Result<Self> {
        if values.len() != channel_ids.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows for {} channel ids",
                values.len(),
                channel_ids.len()
            )));
        }
        if let Some(first) = values.first() {
            if values.iter().any(|r| r.len() != first.len()) {
                return Err(Error::ShapeMismatch("channels have different lengths".into()));
            }
        }
        for (row, id) in values.iter().zip(&channel_ids) {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite value in channel {id}")));
            }
        }
        Ok(FeatureMatrix {
            values,
            channel_ids,
            hop_ms,
            source_id: source_id.into(),
        })
    }

    pub fn num_channels(&self) -> usize {
        self.channel_ids.len()
    }

    pub fn num_frames(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn channel_ids(&self) -> &[FeatureId] {
        &self.channel_ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.values[c]
    }

    pub fn channel(&self, id: FeatureId) -> Option<&[f64]> {
        self.channel_ids.iter().position(|&c| c == id).map(|i| self.values[i].as_slice())
    }

    /// Keep `ids`, in the order given.
    pub fn select(&self, ids: &[FeatureId]) -> Result<FeatureMatrix> {
        let values = ids
            .iter()
            .map(|&id| {
                self.channel(id).map(<[f64]>::to_vec).ok_or_else(|| {
                    Error::ShapeMismatch(format!("channel {id} not present in matrix for {}", self.source_id))
                })
            })
            .collect::<Result<_>>()?;
        Ok(FeatureMatrix {
            values,
            channel_ids: ids.to_vec(),
            hop_ms: self.hop_ms,
            source_id: self.source_id.clone(),
        })
    }

    /// Frames `start..end` of every channel.
    pub fn slice_frames(&self, start: usize, end: usize) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.iter().map(|r| r[start..end].to_vec()).collect(),
            channel_ids: self.channel_ids.clone(),
            hop_ms: self.hop_ms,
            source_id: self.source_id.clone(),
        }
    }

    /// Row-major `frames × channels`, the layout the network consumes.
    pub fn frame_major(&self) -> Vec<f64> {
        let (c, t) = (self.num_channels(), self.num_frames());
        let mut out = vec![0.0; c * t];
        for (ci, row) in self.values.iter().enumerate() {
            for (ti, &v) in row.iter().enumerate() {
                out[ti * c + ci] = v;
            }
        }
        out
    }

    /// One row per frame, header `time_s` then the channel ids.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time_s");
        for id in &self.channel_ids {
            write!(s, ",{id}").unwrap();
        }
        s.push('\n');
        for t in 0..self.num_frames() {
            write!(s, "{:.3}", t as f64 * self.hop_ms / 1000.0).unwrap();
            for row in &self.values {
                write!(s, ",{}", row[t]).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

/// Per-channel z-score parameters fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub channel_ids: Vec<FeatureId>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Mean and (population) standard deviation of every channel over all frames
/// of `matrices`.
pub fn fit_norm<'a>(matrices: impl IntoIterator<Item = &'a FeatureMatrix>) -> Result<NormStats> {
    let mut iter = matrices.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InsufficientData("no training matrices to fit normalisation".into()))?;
    let ids = first.channel_ids.clone();
    let c = ids.len();
    let mut count = 0usize;
    let mut sum = vec![0.0; c];
    let mut sumsq = vec![0.0; c];
    let mut shift = vec![0.0; c];
    // Shifted sums keep the variance accurate for channels with a large offset.
    for (k, row) in first.values.iter().enumerate() {
        shift[k] = row.first().copied().unwrap_or(0.0);
    }
    for m in std::iter::once(first).chain(iter) {
        if m.channel_ids != ids {
            return Err(Error::ShapeMismatch(format!("channel layout of {} differs from the first matrix", m.source_id)));
        }
        for (k, row) in m.values.iter().enumerate() {
            for &v in row {
                let d = v - shift[k];
                sum[k] += d;
                sumsq[k] += d * d;
            }
        }
        count += m.num_frames();
    }
    if count < 2 {
        return Err(Error::InsufficientData(format!("{count} training frames; need at least 2")));
    }
    let n = count as f64;
    let mean = (0..c).map(|k| shift[k] + sum[k] / n).collect();
    let std = (0..c)
        .map(|k| {
            let m = sum[k] / n;
            ((sumsq[k] / n - m * m).max(0.0)).sqrt().max(STD_FLOOR)
        })
        .collect();
    Ok(NormStats {
        channel_ids: ids,
        mean,
        std,
    })
}

pub fn apply_norm(m: &FeatureMatrix, stats: &NormStats) -> Result<FeatureMatrix> {
    if m.channel_ids != stats.channel_ids {
        return Err(Error::ShapeMismatch(format!(
            "matrix channels [{}] do not match normalisation channels [{}]",
            join(&m.channel_ids),
            join(&stats.channel_ids)
        )));
    }
    let values = m
        .values
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let (mu, sd) = (stats.mean[k], stats.std[k]);
            if sd <= STD_FLOOR {
                vec![0.0; row.len()]
            } else {
                row.iter().map(|v| (v - mu) / sd).collect()
            }
        })
        .collect();
    Ok(FeatureMatrix {
        values,
        channel_ids: m.channel_ids.clone(),
        hop_ms: m.hop_ms,
        source_id: m.source_id.clone(),
    })
}

fn join(ids: &[FeatureId]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}
