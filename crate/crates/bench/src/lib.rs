//! Fixtures shared by the benchmarks.

use plateau_core::planner::DEFAULT_SCHEDULE;
use plateau_core::synth::{generate, KeyedNormal, SynthSpec};
use plateau_core::{aggregate, LearningCurveSeries, PowerLawCurve};

/// Seed-mean points for one noisy series on the default schedule.
pub fn noisy_points(seed: u64) -> Vec<(f64, f64)> {
    let curve = PowerLawCurve::new(0.92, 0.6, 0.8).expect("valid curve");
    let spec = SynthSpec::new(curve, seed).with_sigma(0.02);
    let series = aggregate(&generate(&spec, "p", "m").expect("valid spec")).remove(0);
    series
        .points
        .iter()
        .map(|p| (f64::from(p.n_cases), p.mean_roc_auc))
        .collect()
}

pub fn noiseless_points() -> Vec<(f64, f64)> {
    let curve = PowerLawCurve::new(0.92, 0.6, 0.8).expect("valid curve");
    DEFAULT_SCHEDULE
        .iter()
        .map(|&n| (f64::from(n), curve.evaluate(f64::from(n)).expect("n >= 1")))
        .collect()
}

/// `count` series with plateaus spread over [0.82, 0.98].
pub fn ensemble(count: u64, seed: u64) -> Vec<LearningCurveSeries> {
    let src = KeyedNormal::from_key(seed);
    let mut rows = Vec::new();
    for i in 0..count {
        let curve = PowerLawCurve::new(
            0.82 + 0.16 * src.uniform(i, 0),
            0.3 + 0.5 * src.uniform(i, 1),
            0.5 + 0.5 * src.uniform(i, 2),
        )
        .expect("valid curve");
        let spec = SynthSpec::new(curve, seed.wrapping_add(i)).with_sigma(0.02);
        rows.extend(generate(&spec, &format!("p{i:03}"), "m").expect("valid spec"));
    }
    aggregate(&rows)
}

/// Scores on a coarse grid (many ties) with roughly 30% positives.
pub fn scored_labels(len: u64, seed: u64) -> (Vec<f64>, Vec<bool>) {
    let src = KeyedNormal::from_key(seed);
    let scores = (0..len)
        .map(|k| (src.uniform(k, 0) * 100.0).floor())
        .collect();
    let labels = (0..len).map(|k| src.uniform(k, 1) < 0.3).collect();
    (scores, labels)
}
