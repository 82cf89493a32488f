//! ROC-AUC as the Mann-Whitney pair statistic.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Pair tallies over all (positive, negative) combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    /// Pairs where the positive scores strictly higher.
    pub wins: u64,
    pub ties: u64,
    pub n_pos: u64,
    pub n_neg: u64,
}

impl PairCounts {
    /// `(wins + ties / 2) / (n_pos * n_neg)`, computed from integers so that
    /// equal tallies always give the identical `f64`.
    pub fn auc(&self) -> f64 {
        (2 * self.wins + self.ties) as f64 / (2 * self.n_pos * self.n_neg) as f64
    }
}

/// Counts concordant and tied pairs in `O(k log k)` by sorting scores and
/// sweeping groups of equal score.
pub fn pair_counts(scores: &[f64], labels: &[bool]) -> Result<PairCounts> {
    if scores.len() != labels.len() {
        return Err(Error::Validation(format!(
            "scores and labels differ in length ({} vs {})",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Validation(format!("score {bad} is not comparable")));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "ROC-AUC needs at least one positive and one negative label".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));

    let mut wins = 0u64;
    let mut ties = 0u64;
    let mut negatives_below = 0u64;
    let mut start = 0;
    while start < order.len() {
        let value = scores[order[start]];
        let mut end = start;
        let (mut pos, mut neg) = (0u64, 0u64);
        while end < order.len() && scores[order[end]] == value {
            if labels[order[end]] {
                pos += 1;
            } else {
                neg += 1;
            }
            end += 1;
        }
        wins += pos * negatives_below;
        ties += pos * neg;
        negatives_below += neg;
        start = end;
    }
    Ok(PairCounts {
        wins,
        ties,
        n_pos,
        n_neg,
    })
}

pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    pair_counts(scores, labels).map(|c| c.auc())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::synth::KeyedNormal;

    /// Exhaustive O(n_pos * n_neg) reference.
    pub(crate) fn brute_force(scores: &[f64], labels: &[bool]) -> PairCounts {
        let mut c = PairCounts {
            wins: 0,
            ties: 0,
            n_pos: 0,
            n_neg: 0,
        };
        for (i, &li) in labels.iter().enumerate() {
            if li {
                c.n_pos += 1;
            } else {
                c.n_neg += 1;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    if scores[i] > scores[j] {
                        c.wins += 1;
                    } else if scores[i] == scores[j] {
                        c.ties += 1;
                    }
                }
            }
        }
        c
    }

    #[test]
    fn perfect_separation_and_ties() {
        assert_eq!(
            roc_auc(&[1.0, 2.0, 3.0, 4.0], &[false, false, true, true]).unwrap(),
            1.0
        );
        assert_eq!(
            roc_auc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap(),
            0.5
        );
        assert_eq!(
            roc_auc(&[4.0, 3.0, 2.0, 1.0], &[false, false, true, true]).unwrap(),
            0.0
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(
            roc_auc(&[1.0, 2.0], &[true, true]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(matches!(
            roc_auc(&[1.0], &[true, false]),
            Err(Error::Validation(_))
        ));
        assert!(roc_auc(&[f64::NAN, 1.0], &[true, false]).is_err());
    }

    #[test]
    fn signed_zero_counts_as_tie() {
        let c = pair_counts(&[0.0, -0.0], &[true, false]).unwrap();
        assert_eq!(c, brute_force(&[0.0, -0.0], &[true, false]));
        assert_eq!(c.ties, 1);
    }

    #[test]
    fn random_eight_element_case() {
        let src = KeyedNormal::from_key(9);
        let scores: Vec<f64> = (0..8).map(|i| (src.uniform(i, 0) * 4.0).floor()).collect();
        let labels: Vec<bool> = (0..8).map(|i| i % 3 == 0).collect();
        assert_eq!(
            pair_counts(&scores, &labels).unwrap(),
            brute_force(&scores, &labels)
        );
    }

    #[test]
    fn invariant_under_monotone_transform_and_negation() {
        let src = KeyedNormal::from_key(11);
        for case in 0..50 {
            let scores: Vec<f64> = (0..40).map(|i| src.sample(case, i)).collect();
            let labels: Vec<bool> = (0..40).map(|i| src.uniform(case, 100 + i) < 0.4).collect();
            let Ok(base) = roc_auc(&scores, &labels) else {
                continue;
            };
            let warped: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 + 1.0).collect();
            assert_eq!(roc_auc(&warped, &labels).unwrap(), base);
            let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
            let flipped = roc_auc(&negated, &labels).unwrap();
            assert!((base + flipped - 1.0).abs() < 1e-15);
        }
    }
}
