//! GDS regression, severity classification and evaluation.
//!
//! The pieces: lasso regression from weekly features to GDS points, a
//! three-level severity split of the score, participant-level leave-one-out
//! cross-validation with optional minority oversampling, greedy wrapper
//! feature selection, three classifiers (SVM, KNN, MLP) and the metrics
//! used to compare them.

mod cv;
mod gds;
mod knn;
mod lasso;
mod metrics;
mod mlp;
mod svm;

pub use cv::{
    lasso_loocv_rmsd, loocv_classify, loocv_regress, oversample, pooled_rmsd, wrapper_select,
    ClassifyFold, RegressFold, WrapperReport,
};
pub use gds::{classify_level, rmsd, DepressionLevel, GdsScore, ParticipantWeek};
pub use knn::{fit_knn, KnnModel, DEFAULT_K};
pub use lasso::{fit_lasso, fit_lasso_cv, lambda_max, LassoCvReport, LassoModel};
pub use metrics::{
    auc, evaluate, metrics_csv, roc_csv, roc_points, ClassMetrics, ConfusionMatrix, EvalReport,
    RocPoint,
};
pub use mlp::{fit_mlp, mlp_gradient_check, MlpConfig, MlpModel};
pub use svm::{fit_svm, SvmConfig, SvmModel};

#[derive(Debug, thiserror::Error)]
pub enum PredictError {
    #[error("GDS score {0} outside 0..=15")]
    BadGds(i64),
    #[error("no samples")]
    EmptyData,
    #[error("length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("penalty {0} must be finite and >= 0")]
    BadLambda(f64),
    #[error("unknown feature {0:?}")]
    FeatureMismatch(String),
    #[error("cross-validation needs at least two participants")]
    SingleParticipant,
    #[error("no {0} samples to balance against")]
    EmptyClass(DepressionLevel),
    #[error("no candidate features")]
    NoCandidates,
    #[error("training set is degenerate: {0}")]
    DegenerateTraining(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("metric undefined: {0}")]
    Undefined(&'static str),
}
