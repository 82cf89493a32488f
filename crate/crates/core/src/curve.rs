//! The three-parameter power-law learning curve
//! `roc_auc(n) = alpha - beta * n^(-gamma)`.
//!
//! `alpha` is the plateau the curve approaches as the number of positive
//! training cases grows, `beta` scales the gap to that plateau and `gamma`
//! sets how quickly the gap closes.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ALPHA_MIN: f64 = 0.8;
pub const ALPHA_MAX: f64 = 1.0;

/// Below this, `gamma` or `alpha - threshold` are treated as zero when
/// inverting the curve.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Default reporting cap for required sample sizes.
pub const DEFAULT_CAP: u64 = 1_000_000;

/// Smallest training size on which the curve is defined.
pub const MIN_N: f64 = 1.0;

/// A learning curve with parameters inside the fitting box
/// `alpha in [0.8, 1]`, `beta >= 0`, `gamma >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve")]
pub struct PowerLawCurve {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

#[derive(Deserialize)]
struct RawCurve {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl TryFrom<RawCurve> for PowerLawCurve {
    type Error = Error;

    fn try_from(raw: RawCurve) -> Result<Self> {
        Self::new(raw.alpha, raw.beta, raw.gamma)
    }
}

impl PowerLawCurve {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(ALPHA_MIN..=ALPHA_MAX).contains(&alpha) {
            return Err(Error::Domain(format!(
                "alpha must lie in [{ALPHA_MIN}, {ALPHA_MAX}], got {alpha}"
            )));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!(
                "beta must be finite and >= 0, got {beta}"
            )));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!(
                "gamma must be finite and >= 0, got {gamma}"
            )));
        }
        Ok(Self { alpha, beta, gamma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Predicted ROC-AUC at `n` positive training cases.
    pub fn evaluate(&self, n: f64) -> Result<f64> {
        check_n(n)?;
        Ok(self.value_unchecked(n))
    }

    /// Derivative of the curve with respect to `n`: `beta * gamma / n^(gamma + 1)`.
    pub fn slope(&self, n: f64) -> Result<f64> {
        check_n(n)?;
        if self.beta == 0.0 || self.gamma == 0.0 {
            return Ok(0.0);
        }
        Ok(self.beta * self.gamma * n.powf(-(self.gamma + 1.0)))
    }

    pub(crate) fn value_unchecked(&self, n: f64) -> f64 {
        self.alpha - self.beta * n.powf(-self.gamma)
    }

    /// Number of positive cases at which the curve first reaches `threshold`.
    ///
    /// Solves `alpha - beta * n^(-gamma) = threshold` in closed form. A curve
    /// whose plateau does not clear the threshold is `Unreachable`; a crossing
    /// beyond `cap` is `AboveCap`; crossings below `n = 1` are clamped to 1.
    pub fn n_at_threshold(&self, threshold: f64, cap: u64) -> Result<SampleSizeEstimate> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::Domain(format!(
                "threshold must lie in (0, 1), got {threshold}"
            )));
        }
        if cap == 0 {
            return Err(Error::Domain("cap must be >= 1".into()));
        }
        let headroom = self.alpha - threshold;
        if headroom < DEGENERACY_TOL {
            return Ok(SampleSizeEstimate::Unreachable);
        }
        if self.beta == 0.0 {
            return Ok(SampleSizeEstimate::Finite { n_required: 1.0 });
        }
        if self.gamma < DEGENERACY_TOL {
            // Flat curve sitting at alpha - beta for every n.
            return Ok(if self.alpha - self.beta < threshold {
                SampleSizeEstimate::Unreachable
            } else {
                SampleSizeEstimate::Finite { n_required: 1.0 }
            });
        }
        let n = (self.beta / headroom).powf(1.0 / self.gamma);
        Ok(if n <= 1.0 {
            SampleSizeEstimate::Finite { n_required: 1.0 }
        } else if n > cap as f64 {
            SampleSizeEstimate::AboveCap { cap }
        } else {
            SampleSizeEstimate::Finite { n_required: n }
        })
    }
}

fn check_n(n: f64) -> Result<()> {
    if n >= MIN_N && n.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "n must be a finite value >= 1, got {n}"
        )))
    }
}

/// Outcome of inverting a learning curve at a target ROC-AUC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SampleSizeEstimate {
    Finite {
        n_required: f64,
    },
    /// The crossing exists but lies beyond the reporting cap.
    AboveCap {
        cap: u64,
    },
    /// The curve's plateau never reaches the threshold.
    Unreachable,
}

impl SampleSizeEstimate {
    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite { .. })
    }

    pub fn n_required(&self) -> Option<f64> {
        match *self {
            Self::Finite { n_required } => Some(n_required),
            _ => None,
        }
    }

    /// Whole number of cases to label. Values within 1e-12 (relative) of an
    /// integer are snapped first so that rounding noise in the closed form
    /// does not add a spurious case.
    pub fn cases_required(&self) -> Option<u64> {
        self.n_required().map(|n| {
            let nearest = n.round();
            if (n - nearest).abs() <= 1e-12 * n.max(1.0) {
                nearest as u64
            } else {
                n.ceil() as u64
            }
        })
    }

    /// Table cell text: the whole number of cases, `>1M` style for capped
    /// values, `inf` for unreachable targets.
    pub fn render(&self) -> String {
        match self {
            Self::Finite { .. } => self.cases_required().unwrap_or(1).to_string(),
            Self::AboveCap { cap } => format!(">{}", abbreviate(*cap)),
            Self::Unreachable => "inf".to_string(),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Self::Finite { .. } => 0,
            Self::AboveCap { .. } => 1,
            Self::Unreachable => 2,
        }
    }
}

impl PartialOrd for SampleSizeEstimate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Self::Finite { n_required: a }, Self::Finite { n_required: b }) => a.partial_cmp(b),
            _ => Some(self.rank().cmp(&other.rank())),
        }
    }
}

impl fmt::Display for SampleSizeEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn abbreviate(cap: u64) -> String {
    if cap >= 1_000_000 && cap.is_multiple_of(1_000_000) {
        format!("{}M", cap / 1_000_000)
    } else if cap >= 1_000 && cap.is_multiple_of(1_000) {
        format!("{}K", cap / 1_000)
    } else {
        cap.to_string()
    }
}
