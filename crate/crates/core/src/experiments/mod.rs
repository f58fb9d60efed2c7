//! Evaluation protocol: metrics, stratified folds, feature ranking by
//! recursive elimination (RFE) and independent evaluation (IFE), and the
//! train/evaluate pipeline behind them.

mod folds;
mod metrics;
mod pipeline;
mod ranking;

pub use folds::{complement, kfold, kfold_indices, stratified_split};
pub use metrics::{f1_from_pr, ClassMetrics, EvalReport};
pub use pipeline::{
    combine_and_eval, cross_validate, evaluate, holdout, run_seed, train_model, Balance, Dataset,
    ExperimentConfig, ModelMeta, PipelineScorer, RunResult, TrainedModel,
};
pub use ranking::{ife, rfe, rfe_round, CountingScorer, GapStats, RankOrder, RankingRow, RankingTable, Scorer};
