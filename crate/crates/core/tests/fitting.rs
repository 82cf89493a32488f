use plateau_core::fit::{self, FitConfig, Termination, UNBOUNDED_CEILING};
use plateau_core::planner::{SamplingSchedule, DEFAULT_SCHEDULE};
use plateau_core::synth::{generate, SynthSpec};
use plateau_core::{aggregate, PowerLawCurve};
use proptest::prelude::*;

fn sse_of(curve: &PowerLawCurve, pts: &[(f64, f64)]) -> f64 {
    pts.iter()
        .map(|&(n, y)| (y - curve.evaluate(n).unwrap()).powi(2))
        .sum()
}

fn synth_points(curve: PowerLawCurve, sigma: f64, seed: u64) -> Vec<(f64, f64)> {
    let spec = SynthSpec::new(curve, seed).with_sigma(sigma);
    let series = aggregate(&generate(&spec, "p", "m").unwrap());
    series[0]
        .points
        .iter()
        .map(|p| (f64::from(p.n_cases), p.mean_roc_auc))
        .collect()
}

fn assert_certificate(fit: &plateau_core::FitResult, cfg: &FitConfig) {
    match fit.termination {
        Termination::GradientSmall => assert!(fit.projected_gradient <= cfg.gradient_tolerance),
        Termination::StepSmall => {}
        Termination::MaxIterations => assert_eq!(fit.iterations, cfg.max_iterations),
    }
    assert_eq!(fit.converged, fit.termination != Termination::MaxIterations);
}

#[test]
fn noisy_fit_never_worse_than_generator() {
    let truth = PowerLawCurve::new(0.92, 0.6, 0.8).unwrap();
    let cfg = FitConfig::default();
    for seed in 0..50 {
        let pts = synth_points(truth, 0.01, seed);
        let fit = fit::fit(&pts, &cfg).unwrap();
        assert!(fit.sse <= sse_of(&truth, &pts), "seed {seed}: {fit:?}");
        assert!(fit.converged, "seed {seed}: {fit:?}");
        assert_certificate(&fit, &cfg);
        let recomputed = sse_of(&fit.curve, &pts);
        assert!((fit.sse - recomputed).abs() <= 1e-15 * recomputed.max(1e-300) + 1e-30);
        assert!((fit.rmse - (fit.sse / pts.len() as f64).sqrt()).abs() < 1e-15);
    }
}

#[test]
fn raw_point_fitting_uses_every_run() {
    let truth = PowerLawCurve::new(0.9, 0.5, 0.7).unwrap();
    let spec = SynthSpec::new(truth, 4).with_sigma(0.01);
    let series = aggregate(&generate(&spec, "p", "m").unwrap()).remove(0);
    let cfg = FitConfig {
        target: fit::FitTarget::RawPoints,
        ..FitConfig::default()
    };
    let raw = series.fit(&cfg).unwrap();
    assert_eq!(raw.n_observations, 140);
    assert_eq!(raw.n_points, 14);
    assert!((raw.curve.alpha() - 0.9).abs() < 0.02);
    assert!((raw.rmse - (raw.sse / 140.0).sqrt()).abs() < 1e-15);
}

#[test]
fn fits_are_bit_identical_across_calls() {
    let pts = synth_points(PowerLawCurve::new(0.88, 0.7, 0.6).unwrap(), 0.02, 99);
    let a = fit::fit(&pts, &FitConfig::default()).unwrap();
    let b = fit::fit(&pts, &FitConfig::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.sse.to_bits(), b.sse.to_bits());
}

#[test]
fn synthetic_round_trip_without_noise() {
    let truth = PowerLawCurve::new(0.87, 0.45, 0.65).unwrap();
    let spec = SynthSpec::new(truth, 0).with_sigma(0.0);
    let series = aggregate(&generate(&spec, "p", "m").unwrap()).remove(0);
    let fit = series.fit(&FitConfig::default()).unwrap();
    assert!((fit.curve.alpha() - 0.87).abs() < 1e-6);
    assert!((fit.curve.beta() - 0.45).abs() < 1e-6);
    assert!((fit.curve.gamma() - 0.65).abs() < 1e-6);
}

#[test]
fn cutoff_twenty_uses_first_four_sizes() {
    let truth = PowerLawCurve::new(0.92, 0.6, 0.8).unwrap();
    let pts = synth_points(truth, 0.01, 3);
    let restricted = fit::fit_with_cutoff(&pts, 20, &FitConfig::default()).unwrap();
    let manual: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 <= 20.0).collect();
    assert_eq!(manual.len(), 4);
    let direct = fit::fit(&manual, &FitConfig::default()).unwrap();
    assert_eq!(restricted.curve, direct.curve);
    assert_eq!(restricted.n_points, 4);
}

#[test]
fn decreasing_data_pins_beta_at_zero() {
    // A learning curve that gets worse with more data has no feasible
    // increasing fit; the best box-constrained answer is flat.
    let pts = [(5.0, 0.9), (10.0, 0.88), (20.0, 0.86), (40.0, 0.84)];
    let fit = fit::fit(&pts, &FitConfig::default()).unwrap();
    assert_eq!(fit.curve.beta(), 0.0);
    assert!(fit.gamma_unidentifiable);
    assert!((fit.curve.alpha() - 0.87).abs() < 1e-12);
}

#[test]
fn low_data_clamps_alpha_at_lower_bound() {
    let pts = [(5.0, 0.5), (10.0, 0.55), (20.0, 0.58), (50.0, 0.6)];
    let fit = fit::fit(&pts, &FitConfig::default()).unwrap();
    assert_eq!(fit.curve.alpha(), 0.8);
    assert!(fit.converged);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn exact_recovery_inside_bounds(
        alpha in 0.82f64..0.98, beta in 0.2f64..1.5, gamma in 0.3f64..1.5,
    ) {
        let truth = PowerLawCurve::new(alpha, beta, gamma).unwrap();
        prop_assume!(truth.evaluate(5.0).unwrap() >= 0.0);
        let pts: Vec<(f64, f64)> = DEFAULT_SCHEDULE
            .iter()
            .map(|&n| (f64::from(n), truth.evaluate(f64::from(n)).unwrap()))
            .collect();
        let fit = fit::fit(&pts, &FitConfig::default()).unwrap();
        prop_assert!(fit.sse <= 1e-12, "{:?}", fit);
        prop_assert!((fit.curve.alpha() - alpha).abs() < 1e-6, "{:?}", fit);
        prop_assert!((fit.curve.beta() - beta).abs() < 1e-6, "{:?}", fit);
        prop_assert!((fit.curve.gamma() - gamma).abs() < 1e-6, "{:?}", fit);
    }

    #[test]
    fn bounds_and_truth_dominance_on_noisy_data(
        alpha in 0.8f64..=1.0, beta in 0.0f64..2.0, gamma in 0.0f64..2.0,
        sigma in 0.0f64..0.05, seed in any::<u64>(),
    ) {
        let truth = PowerLawCurve::new(alpha, beta, gamma).unwrap();
        let spec = SynthSpec::new(truth, seed)
            .with_sigma(sigma)
            .with_schedule(SamplingSchedule::new(vec![5, 10, 20, 50, 100]).unwrap());
        let series = aggregate(&generate(&spec, "p", "m").unwrap()).remove(0);
        let pts: Vec<(f64, f64)> = series.points.iter().map(|p| (f64::from(p.n_cases), p.mean_roc_auc)).collect();
        let cfg = FitConfig::default();
        let fit = fit::fit(&pts, &cfg).unwrap();
        let c = fit.curve;
        prop_assert!((0.8..=1.0).contains(&c.alpha()));
        prop_assert!(c.beta() >= 0.0 && c.beta() <= UNBOUNDED_CEILING);
        prop_assert!(c.gamma() >= 0.0 && c.gamma() <= UNBOUNDED_CEILING);
        let truth_sse = sse_of(&truth, &pts);
        prop_assert!(fit.sse <= truth_sse * (1.0 + 1e-9) + 1e-18, "fit {} truth {}", fit.sse, truth_sse);
        if fit.converged && fit.termination == Termination::GradientSmall {
            prop_assert!(fit.projected_gradient <= cfg.gradient_tolerance);
        }
    }
}
