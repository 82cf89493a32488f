//! Evaluation studies over collections of learning-curve series: required
//! sample-size reports, early-slope versus plateau correlation, and
//! extrapolation error as a function of the fitting cutoff.
//!
//! Per-series fits run in parallel; results are collected in input order and
//! sorted before they are returned, so output never depends on scheduling.

pub mod plot;
pub mod roc;
pub mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{PowerLawCurve, SampleSizeEstimate};
use crate::error::{Error, Result};
use crate::experiments::LearningCurveSeries;
use crate::fit::{FitConfig, FitResult};

pub use roc::{pair_counts, roc_auc, PairCounts};
pub use stats::pearson;

pub const DEFAULT_FIT_CUTOFF: u32 = 50;
pub const DEFAULT_THRESHOLD: f64 = 0.9;
pub const DEFAULT_SLOPE_N: u32 = 5;

/// Fits each series at `cutoff` (or on all of its points), in input order.
pub fn fit_each(
    series_set: &[LearningCurveSeries],
    cutoff: Option<u32>,
    config: &FitConfig,
) -> Vec<Result<FitResult>> {
    series_set
        .par_iter()
        .map(|s| match cutoff {
            Some(c) => s.fit_with_cutoff(c, config),
            None => s.fit(config),
        })
        .collect()
}

fn by_key(series_set: &[LearningCurveSeries]) -> Vec<&LearningCurveSeries> {
    let mut sorted: Vec<&LearningCurveSeries> = series_set.iter().collect();
    sorted.sort_by(|a, b| (&a.pathology, &a.model).cmp(&(&b.pathology, &b.model)));
    sorted
}

/// One line of a required-sample-size table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathologyReportRow {
    pub pathology: String,
    pub model: String,
    /// Observed mean ROC-AUC at the largest training size.
    pub roc_at_nmax: f64,
    pub n_max: u32,
    pub fit_cutoff: u32,
    pub threshold: f64,
    pub curve: Option<PowerLawCurve>,
    pub n_at_threshold: Option<SampleSizeEstimate>,
    /// Table cell: whole cases, `>1M`, `inf`, or `skip`.
    pub cell: String,
    /// Why the series could not be fitted, if it was skipped.
    pub skipped: Option<String>,
}

pub fn build_report(
    series_set: &[LearningCurveSeries],
    fit_cutoff: u32,
    threshold: f64,
    cap: u64,
    config: &FitConfig,
) -> Result<Vec<PathologyReportRow>> {
    // Surface argument errors once, not as a skip marker on every row.
    PowerLawCurve::new(1.0, 0.0, 0.0)?.n_at_threshold(threshold, cap)?;
    let ordered = by_key(series_set);
    ordered
        .par_iter()
        .map(|s| {
            let mut row = PathologyReportRow {
                pathology: s.pathology.clone(),
                model: s.model.clone(),
                roc_at_nmax: s.observed_at_max(),
                n_max: s.n_max,
                fit_cutoff,
                threshold,
                curve: None,
                n_at_threshold: None,
                cell: "skip".into(),
                skipped: None,
            };
            match s.fit_with_cutoff(fit_cutoff, config) {
                Ok(fit) => {
                    let estimate = fit.curve.n_at_threshold(threshold, cap)?;
                    row.curve = Some(fit.curve);
                    row.cell = estimate.render();
                    row.n_at_threshold = Some(estimate);
                }
                Err(e) => row.skipped = Some(e.to_string()),
            }
            Ok(row)
        })
        .collect()
}

/// Series left out of a study, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub pathology: String,
    pub model: String,
    pub reason: String,
}

impl Exclusion {
    fn new(series: &LearningCurveSeries, err: &Error) -> Self {
        Self {
            pathology: series.pathology.clone(),
            model: series.model.clone(),
            reason: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopePair {
    pub pathology: String,
    pub model: String,
    /// Derivative of the fitted curve at `slope_eval_n`.
    pub slope: f64,
    pub roc_at_nmax: f64,
    /// Largest training size in the series (plot marker size).
    pub n_total: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationStudy {
    pub fit_cutoff: u32,
    pub slope_eval_n: u32,
    pub pairs: Vec<SlopePair>,
    pub pearson_r: f64,
    pub excluded: Vec<Exclusion>,
}

/// Correlates the early slope of each cutoff-restricted fit with the
/// observed ROC-AUC at the largest training size.
pub fn slope_correlation(
    series_set: &[LearningCurveSeries],
    fit_cutoff: u32,
    slope_eval_n: u32,
    config: &FitConfig,
) -> Result<CorrelationStudy> {
    let ordered = by_key(series_set);
    let outcomes: Vec<Result<SlopePair>> = ordered
        .par_iter()
        .map(|s| {
            let fit = s.fit_with_cutoff(fit_cutoff, config)?;
            Ok(SlopePair {
                pathology: s.pathology.clone(),
                model: s.model.clone(),
                slope: fit.curve.slope(f64::from(slope_eval_n))?,
                roc_at_nmax: s.observed_at_max(),
                n_total: s.n_max,
            })
        })
        .collect();

    let mut pairs = Vec::new();
    let mut excluded = Vec::new();
    for (s, outcome) in ordered.iter().zip(outcomes) {
        match outcome {
            Ok(p) => pairs.push(p),
            Err(e @ Error::Domain(_)) => return Err(e),
            Err(e) => excluded.push(Exclusion::new(s, &e)),
        }
    }
    let slopes: Vec<f64> = pairs.iter().map(|p| p.slope).collect();
    let plateaus: Vec<f64> = pairs.iter().map(|p| p.roc_at_nmax).collect();
    let pearson_r = pearson(&slopes, &plateaus)?;
    Ok(CorrelationStudy {
        fit_cutoff,
        slope_eval_n,
        pairs,
        pearson_r,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationError {
    pub pathology: String,
    pub model: String,
    pub cutoff: u32,
    pub n_max: u32,
    pub predicted: f64,
    pub observed: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaeStudy {
    pub cutoffs: Vec<u32>,
    /// `None` where no series could be fitted at that cutoff.
    pub mae_per_cutoff: Vec<Option<f64>>,
    pub n_eligible: Vec<usize>,
    pub n_excluded: Vec<usize>,
    pub errors: Vec<ExtrapolationError>,
}

impl MaeStudy {
    pub fn mae_at(&self, cutoff: u32) -> Option<f64> {
        self.cutoffs
            .iter()
            .position(|&c| c == cutoff)
            .and_then(|i| self.mae_per_cutoff[i])
    }
}

/// Mean absolute error between each cutoff-restricted fit extrapolated to
/// `n_max` and the observed mean there. Series that cannot be fitted at a
/// cutoff are excluded from that cutoff's mean and tallied.
pub fn extrapolation_mae(
    series_set: &[LearningCurveSeries],
    cutoffs: &[u32],
    config: &FitConfig,
) -> Result<MaeStudy> {
    if cutoffs.is_empty() {
        return Err(Error::Validation("at least one cutoff is required".into()));
    }
    if cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation(
            "cutoffs must be strictly increasing".into(),
        ));
    }
    let ordered = by_key(series_set);
    let jobs: Vec<(u32, &LearningCurveSeries)> = cutoffs
        .iter()
        .flat_map(|&c| ordered.iter().map(move |&s| (c, s)))
        .collect();
    let outcomes: Vec<Result<ExtrapolationError>> = jobs
        .par_iter()
        .map(|&(cutoff, s)| {
            let fit = s.fit_with_cutoff(cutoff, config)?;
            let predicted = fit.curve.evaluate(f64::from(s.n_max))?;
            let observed = s.observed_at_max();
            Ok(ExtrapolationError {
                pathology: s.pathology.clone(),
                model: s.model.clone(),
                cutoff,
                n_max: s.n_max,
                predicted,
                observed,
                abs_error: (predicted - observed).abs(),
            })
        })
        .collect();

    let mut study = MaeStudy {
        cutoffs: cutoffs.to_vec(),
        mae_per_cutoff: Vec::with_capacity(cutoffs.len()),
        n_eligible: Vec::with_capacity(cutoffs.len()),
        n_excluded: Vec::with_capacity(cutoffs.len()),
        errors: Vec::new(),
    };
    for chunk in outcomes.chunks(ordered.len().max(1)) {
        let mut abs_errors = Vec::new();
        let mut excluded = 0;
        for outcome in chunk {
            match outcome {
                Ok(e) => {
                    abs_errors.push(e.abs_error);
                    study.errors.push(e.clone());
                }
                Err(_) => excluded += 1,
            }
        }
        study.mae_per_cutoff.push(stats::mean(&abs_errors));
        study.n_eligible.push(abs_errors.len());
        study.n_excluded.push(excluded);
    }
    if ordered.is_empty() {
        study.mae_per_cutoff = vec![None; cutoffs.len()];
        study.n_eligible = vec![0; cutoffs.len()];
        study.n_excluded = vec![0; cutoffs.len()];
    }
    Ok(study)
}
