use serde::{Deserialize, Serialize};

use crate::corpus::Dialect;
use crate::error::{Error, Result};

/// One-vs-rest counts and scores for a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub dialect: Dialect,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `confusion[truth][predicted]`, indexed by [`Dialect::index`].
    pub confusion: [[usize; 2]; 2],
    pub classes: [ClassMetrics; 2],
    pub accuracy: f64,
    pub total: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_from_pr(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

impl EvalReport {
    pub fn from_confusion(confusion: [[usize; 2]; 2]) -> Result<Self> {
        let total: usize = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(Error::InsufficientData("no trials to evaluate".into()));
        }
        let class = |k: usize| {
            let o = 1 - k;
            let (tp, fn_, fp, tn) = (confusion[k][k], confusion[k][o], confusion[o][k], confusion[o][o]);
            ClassMetrics {
                dialect: Dialect::from_index(k).unwrap(),
                tp,
                fp,
                fn_,
                tn,
                precision: ratio(tp, tp + fp),
                recall: ratio(tp, tp + fn_),
                // Equal to 2PR/(P+R), but from integers in one rounding.
                f1: ratio(2 * tp, 2 * tp + fp + fn_),
            }
        };
        Ok(EvalReport {
            confusion,
            classes: [class(0), class(1)],
            accuracy: ratio(confusion[0][0] + confusion[1][1], total),
            total,
        })
    }

    pub fn from_predictions(truth: &[Dialect], predicted: &[Dialect]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels vs {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut c = [[0usize; 2]; 2];
        for (t, p) in truth.iter().zip(predicted) {
            c[t.index()][p.index()] += 1;
        }
        Self::from_confusion(c)
    }

    pub fn class(&self, d: Dialect) -> &ClassMetrics {
        &self.classes[d.index()]
    }

    pub fn min_f1(&self) -> f64 {
        self.classes[0].f1.min(self.classes[1].f1)
    }
}
