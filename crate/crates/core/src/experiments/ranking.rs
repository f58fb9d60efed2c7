use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureId;

/// Which direction of accuracy earns the better rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOrder {
    /// Accuracy measured with the feature removed: lower is more important.
    Ablation,
    /// Accuracy with the feature alone: higher is more important.
    Individual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub feature: FeatureId,
    pub accuracy: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub order: RankOrder,
    /// Best rank first; equal ranks keep canonical feature order.
    pub rows: Vec<RankingRow>,
    /// Training/evaluation runs spent producing this table.
    pub runs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl RankingTable {
    /// Standard competition ranking: equal accuracies share a rank and the
    /// following rank numbers are skipped (1, 2, 2, 4).
    pub fn from_accuracies(acc: &[(FeatureId, f64)], order: RankOrder) -> Self {
        let better = |a: f64, b: f64| match order {
            RankOrder::Ablation => a < b,
            RankOrder::Individual => a > b,
        };
        let mut rows: Vec<RankingRow> = acc
            .iter()
            .map(|&(feature, accuracy)| RankingRow {
                feature,
                accuracy,
                rank: 1 + acc.iter().filter(|&&(_, other)| better(other, accuracy)).count(),
            })
            .collect();
        rows.sort_by(|a, b| a.rank.cmp(&b.rank).then(a.feature.cmp(&b.feature)));
        RankingTable {
            order,
            rows,
            runs: acc.len(),
        }
    }

    pub fn rank_of(&self, f: FeatureId) -> Option<usize> {
        self.rows.iter().find(|r| r.feature == f).map(|r| r.rank)
    }

    /// Absolute accuracy differences between successive distinct ranks.
    /// `None` when every feature shares one rank.
    pub fn gap_stats(&self) -> Option<GapStats> {
        let mut levels: Vec<f64> = Vec::new();
        for r in &self.rows {
            if levels.last() != Some(&r.accuracy) {
                levels.push(r.accuracy);
            }
        }
        let gaps: Vec<f64> = levels.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        if gaps.is_empty() {
            return None;
        }
        Some(GapStats {
            min: gaps.iter().copied().fold(f64::INFINITY, f64::min),
            max: gaps.iter().copied().fold(0.0, f64::max),
            mean: gaps.iter().sum::<f64>() / gaps.len() as f64,
        })
    }

    /// `feature,accuracy,rank`, best rank first.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature,accuracy,rank\n");
        for r in &self.rows {
            writeln!(s, "{},{},{}", r.feature, r.accuracy, r.rank).unwrap();
        }
        s
    }
}

/// Accuracy of a classifier trained on a feature subset.
pub trait Scorer: Sync {
    fn score(&self, features: &[FeatureId]) -> Result<f64>;
}

impl<F: Fn(&[FeatureId]) -> Result<f64> + Sync> Scorer for F {
    fn score(&self, features: &[FeatureId]) -> Result<f64> {
        self(features)
    }
}

/// Wraps a scorer and counts its evaluations.
pub struct CountingScorer<S> {
    inner: S,
    runs: AtomicUsize,
}

impl<S: Scorer> CountingScorer<S> {
    pub fn new(inner: S) -> Self {
        CountingScorer {
            inner,
            runs: AtomicUsize::new(0),
        }
    }

    pub fn runs(&self) -> usize {
        self.runs.load(Ordering::SeqCst)
    }
}

impl<S: Scorer> Scorer for CountingScorer<S> {
    fn score(&self, features: &[FeatureId]) -> Result<f64> {
        self.runs.fetch_add(1, Ordering::SeqCst);
        self.inner.score(features)
    }
}

fn check_unique(features: &[FeatureId]) -> Result<()> {
    for (i, f) in features.iter().enumerate() {
        if features[..i].contains(f) {
            return Err(Error::InvalidArgument(format!("feature {f} listed twice")));
        }
    }
    Ok(())
}

fn score_all<S: Scorer + ?Sized>(subsets: Vec<(FeatureId, Vec<FeatureId>)>, scorer: &S) -> Result<Vec<(FeatureId, f64)>> {
    subsets
        .into_par_iter()
        .map(|(f, set)| {
            scorer.score(&set).map(|a| (f, a)).map_err(|e| match e {
                Error::Diverged(msg) => Error::Diverged(format!("run for {f}: {msg}")),
                other => other,
            })
        })
        .collect()
}

/// One round of recursive feature elimination: score every subset with one
/// feature removed (`n_f` runs) and rank by ablation impact.
pub fn rfe_round<S: Scorer + ?Sized>(features: &[FeatureId], scorer: &S) -> Result<RankingTable> {
    check_unique(features)?;
    if features.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "recursive elimination needs at least 2 features, got {}",
            features.len()
        )));
    }
    let subsets = features
        .iter()
        .map(|&f| (f, features.iter().copied().filter(|&g| g != f).collect()))
        .collect();
    Ok(RankingTable::from_accuracies(&score_all(subsets, scorer)?, RankOrder::Ablation))
}

/// Recursive elimination down to `keep` features. Each round drops the
/// worst-ranked feature; among tied worst features the last in canonical
/// order goes. Returns every round's table.
pub fn rfe<S: Scorer + ?Sized>(features: &[FeatureId], keep: usize, scorer: &S) -> Result<Vec<RankingTable>> {
    if keep == 0 || keep >= features.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot reduce {} features to {keep}",
            features.len()
        )));
    }
    let mut current = features.to_vec();
    let mut rounds = Vec::new();
    while current.len() > keep {
        let table = rfe_round(&current, scorer)?;
        let drop = table.rows.last().unwrap().feature;
        current.retain(|&f| f != drop);
        rounds.push(table);
    }
    Ok(rounds)
}

/// Independent feature evaluation: score each feature alone (`n_f` runs)
/// and rank by accuracy, highest first.
pub fn ife<S: Scorer + ?Sized>(features: &[FeatureId], scorer: &S) -> Result<RankingTable> {
    check_unique(features)?;
    if features.is_empty() {
        return Err(Error::InvalidArgument("no features to evaluate".into()));
    }
    let subsets = features.iter().map(|&f| (f, vec![f])).collect();
    Ok(RankingTable::from_accuracies(&score_all(subsets, scorer)?, RankOrder::Individual))
}
