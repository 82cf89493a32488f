//! Annotation-campaign arithmetic: training-size schedule, class-ratio
//! budgets, split sizes and a progressive-sampling stopping rule.

use serde::{Deserialize, Serialize};

use crate::curve::{SampleSizeEstimate, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::experiments::LearningCurveSeries;
use crate::fit::FitConfig;

/// Positive-case counts used when sampling training sets.
pub const DEFAULT_SCHEDULE: [u32; 14] =
    [5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 100, 250, 500, 1000];

pub const DEFAULT_NEGATIVE_RATIO: u32 = 5;
pub const DEFAULT_STABILITY_WINDOW: usize = 3;
pub const DEFAULT_STABILITY_TOL: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct SamplingSchedule {
    sizes: Vec<u32>,
}

impl SamplingSchedule {
    pub fn new(sizes: Vec<u32>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Validation("schedule must not be empty".into()));
        }
        if sizes[0] == 0 {
            return Err(Error::Validation("schedule sizes must be >= 1".into()));
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(
                "schedule must be strictly increasing".into(),
            ));
        }
        Ok(Self { sizes })
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    /// Smallest scheduled size strictly greater than `n`.
    pub fn successor(&self, n: u32) -> Option<u32> {
        self.sizes.iter().copied().find(|&s| s > n)
    }
}

impl Default for SamplingSchedule {
    fn default() -> Self {
        Self {
            sizes: DEFAULT_SCHEDULE.to_vec(),
        }
    }
}

impl TryFrom<Vec<u32>> for SamplingSchedule {
    type Error = Error;

    fn try_from(sizes: Vec<u32>) -> Result<Self> {
        Self::new(sizes)
    }
}

impl From<SamplingSchedule> for Vec<u32> {
    fn from(s: SamplingSchedule) -> Self {
        s.sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignBudget {
    pub n_positive: u64,
    pub negative_ratio: u32,
    pub n_negative: u64,
    pub total: u64,
    /// Negatives that must be duplicated because too few are available.
    pub duplicated_negatives: u64,
}

/// Training-set composition for `n_positive` cases at `1:ratio` balance.
pub fn budget_for(n_positive: u64, negatives_available: u64, ratio: u32) -> Result<CampaignBudget> {
    if n_positive == 0 {
        return Err(Error::Validation("n_positive must be >= 1".into()));
    }
    if ratio == 0 {
        return Err(Error::Validation("negative ratio must be >= 1".into()));
    }
    let n_negative = n_positive * u64::from(ratio);
    Ok(CampaignBudget {
        n_positive,
        negative_ratio: ratio,
        n_negative,
        total: n_positive + n_negative,
        duplicated_negatives: n_negative.saturating_sub(negatives_available),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: u64,
    pub validation: u64,
    pub test: u64,
}

/// 80/10/10 split. Each 10% share is rounded to the nearest integer with
/// exact halves rounded down; the remainder goes to training.
pub fn split_sizes(total: u64) -> Result<SplitSizes> {
    if total < 10 {
        return Err(Error::Validation(format!(
            "total must be >= 10 for a 80/10/10 split, got {total}"
        )));
    }
    let share = (total + 4) / 10;
    Ok(SplitSizes {
        train: total - 2 * share,
        validation: share,
        test: share,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum NextAction {
    /// The latest observed mean already meets the threshold.
    StopPredictedReached { observed: f64 },
    /// Successive estimates of the required size agree within tolerance.
    StopEstimateStable { estimates: Vec<f64> },
    /// Label up to this many positive cases next.
    Continue { next_n: u32 },
    /// No larger schedule size remains.
    ScheduleExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingRule {
    pub threshold: f64,
    pub window: usize,
    /// Bound on `(max - min) / mean` over the windowed estimates.
    pub tolerance: f64,
    pub cap: u64,
    pub schedule: SamplingSchedule,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            threshold: 0.9,
            window: DEFAULT_STABILITY_WINDOW,
            tolerance: DEFAULT_STABILITY_TOL,
            cap: DEFAULT_CAP,
            schedule: SamplingSchedule::default(),
        }
    }
}

/// Decides whether a labeling campaign can stop or which training size to
/// run next.
///
/// The required-size estimate is refit at each of the last `window` observed
/// training sizes used as cutoffs; the campaign is stable when all of those
/// estimates are finite and close together.
pub fn next_action(
    series: &LearningCurveSeries,
    rule: &StoppingRule,
    config: &FitConfig,
) -> Result<NextAction> {
    if rule.window < 2 {
        return Err(Error::Validation("stability window must be >= 2".into()));
    }
    if series.points.len() < crate::fit::MIN_DISTINCT_N {
        return Err(Error::InsufficientData {
            needed: crate::fit::MIN_DISTINCT_N,
            found: series.points.len(),
        });
    }
    let observed = series.observed_at_max();
    if observed >= rule.threshold {
        return Ok(NextAction::StopPredictedReached { observed });
    }

    if let Some(estimates) = windowed_estimates(series, rule, config)? {
        let max = estimates.iter().copied().fold(f64::MIN, f64::max);
        let min = estimates.iter().copied().fold(f64::MAX, f64::min);
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        if (max - min) / mean <= rule.tolerance {
            return Ok(NextAction::StopEstimateStable { estimates });
        }
    }

    Ok(match rule.schedule.successor(series.n_max) {
        Some(next_n) => NextAction::Continue { next_n },
        None => NextAction::ScheduleExhausted,
    })
}

fn windowed_estimates(
    series: &LearningCurveSeries,
    rule: &StoppingRule,
    config: &FitConfig,
) -> Result<Option<Vec<f64>>> {
    let count = series.points.len();
    if count < rule.window {
        return Ok(None);
    }
    let mut estimates = Vec::with_capacity(rule.window);
    for p in &series.points[count - rule.window..] {
        let Ok(fit) = series.fit_with_cutoff(p.n_cases, config) else {
            return Ok(None);
        };
        match fit.curve.n_at_threshold(rule.threshold, rule.cap)? {
            SampleSizeEstimate::Finite { n_required } => estimates.push(n_required),
            _ => return Ok(None),
        }
    }
    Ok(Some(estimates))
}
