//! Prediction, empirical total variation, cross-validation and scoring.

mod cv;
mod filter;

pub use cv::{
    assign_folds, cross_validate, evaluate_model, score, score_models, CVConfig, CvOutcome, EvaluationRecord,
    FittedModel, ModelKind, ScoreTable, INFINITE_SCORE,
};
pub use filter::{etv, etv_values, filter_predict, Prediction, UNSYNC_POLICY};
