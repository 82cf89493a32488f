//! Power-law learning-curve fitting and labeled-sample planning.
//!
//! Classifier ROC-AUC measured at a handful of small training sizes is fitted
//! with `alpha - beta * n^(-gamma)`; the fitted curve is then extrapolated to
//! predict the performance plateau and the number of positive cases needed to
//! reach a target ROC-AUC.

pub mod analysis;
pub mod curve;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod format;
pub mod planner;
pub mod synth;

pub use analysis::{
    build_report, extrapolation_mae, pearson, roc_auc, slope_correlation, CorrelationStudy,
    MaeStudy, PathologyReportRow,
};
pub use curve::{PowerLawCurve, SampleSizeEstimate, DEFAULT_CAP};
pub use error::{Error, Result};
pub use experiments::{aggregate, ingest, ExperimentPoint, InputFormat, LearningCurveSeries};
pub use fit::{fit, fit_with_cutoff, jacobian, FitConfig, FitResult, FitTarget, Termination};
pub use planner::{
    budget_for, next_action, split_sizes, NextAction, SamplingSchedule, StoppingRule,
};
pub use synth::{generate, SynthSpec};
