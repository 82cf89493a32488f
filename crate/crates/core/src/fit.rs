//! Box-constrained least-squares fitting of [`PowerLawCurve`] parameters.
//!
//! The solver is a projected Levenberg-Marquardt iteration. Each trial step
//! solves the damped normal equations over the parameters that are not held
//! at a bound, projects the result back into the box, and is accepted or
//! rejected by comparing the actual decrease of the objective with the
//! decrease predicted by the local quadratic model (the gain ratio).
//!
//! Residuals are `model(n_i) - observed_i`, so the Jacobian rows are the
//! partial derivatives of the model itself.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::curve::{PowerLawCurve, ALPHA_MAX, ALPHA_MIN, MIN_N};
use crate::error::{Error, Result};

/// Finite stand-in for the unbounded upper limits of `beta` and `gamma`.
pub const UNBOUNDED_CEILING: f64 = 1e12;

/// Minimum number of distinct training sizes for a three-parameter fit.
pub const MIN_DISTINCT_N: usize = 3;

/// Relative size of the model-predicted decrease below which a point with a
/// small projected gradient is accepted as stationary.
const NEGLIGIBLE_DECREASE: f64 = 1e-10;

const LOWER: [f64; 3] = [ALPHA_MIN, 0.0, 0.0];
const UPPER: [f64; 3] = [ALPHA_MAX, UNBOUNDED_CEILING, UNBOUNDED_CEILING];

/// Which observations of a learning-curve series are handed to the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTarget {
    /// One point per training size: the mean over replicate seeds.
    #[default]
    SeedMeans,
    /// Every replicate run as its own observation.
    RawPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialGuess {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for InitialGuess {
    fn default() -> Self {
        Self {
            alpha: 0.95,
            beta: 0.5,
            gamma: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub initial_guess: InitialGuess,
    pub max_iterations: usize,
    /// Bound on the infinity norm of the projected gradient of `sse / 2`.
    pub gradient_tolerance: f64,
    /// Bound on the step length relative to the parameter norm.
    pub step_tolerance: f64,
    pub target: FitTarget,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            initial_guess: InitialGuess::default(),
            max_iterations: 200,
            gradient_tolerance: 1e-8,
            step_tolerance: 1e-10,
            target: FitTarget::SeedMeans,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let g = self.initial_guess;
        let start = [g.alpha, g.beta, g.gamma];
        for (i, name) in ["alpha", "beta", "gamma"].iter().enumerate() {
            if !(start[i] >= LOWER[i] && start[i] <= UPPER[i]) {
                return Err(Error::Validation(format!(
                    "initial {name} = {} lies outside [{}, {}]",
                    start[i], LOWER[i], UPPER[i]
                )));
            }
        }
        if !(self.gradient_tolerance > 0.0 && self.step_tolerance > 0.0) {
            return Err(Error::Validation("fit tolerances must be > 0".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Validation("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientSmall,
    StepSmall,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub curve: PowerLawCurve,
    /// Largest training size admitted into the fit, if the data were restricted.
    pub cutoff: Option<u32>,
    pub sse: f64,
    /// `sqrt(sse / n_observations)`; equals `sqrt(sse / n_points)` for seed means.
    pub rmse: f64,
    /// Distinct training sizes used.
    pub n_points: usize,
    pub n_observations: usize,
    pub converged: bool,
    pub iterations: usize,
    pub termination: Termination,
    /// Infinity norm of the projected gradient at the returned parameters.
    pub projected_gradient: f64,
    /// Set when `beta` collapsed to zero; `gamma` is then reported as the
    /// initial guess because any value fits equally well.
    pub gamma_unidentifiable: bool,
}

/// Partial derivatives of the model with respect to `(alpha, beta, gamma)`
/// at each `n`.
pub fn jacobian(curve: &PowerLawCurve, n_values: &[f64]) -> Result<Vec<[f64; 3]>> {
    n_values
        .iter()
        .map(|&n| {
            curve.evaluate(n)?;
            Ok(jacobian_row(curve.beta(), curve.gamma(), n))
        })
        .collect()
}

fn jacobian_row(beta: f64, gamma: f64, n: f64) -> [f64; 3] {
    let decay = n.powf(-gamma);
    [1.0, -decay, beta * decay * n.ln()]
}

/// Fits the power law to `(n, roc_auc)` observations.
pub fn fit(points: &[(f64, f64)], config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    validate_points(points)?;
    let distinct = distinct_n(points);
    if distinct < MIN_DISTINCT_N {
        return Err(Error::InsufficientData {
            needed: MIN_DISTINCT_N,
            found: distinct,
        });
    }
    let mut result = Solver::new(points, config).run();
    result.n_points = distinct;
    Ok(result)
}

/// Fits only the observations with `n <= cutoff`.
pub fn fit_with_cutoff(
    points: &[(f64, f64)],
    cutoff: u32,
    config: &FitConfig,
) -> Result<FitResult> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(n, _)| n <= f64::from(cutoff))
        .collect();
    let mut result = fit(&kept, config)?;
    result.cutoff = Some(cutoff);
    Ok(result)
}

fn validate_points(points: &[(f64, f64)]) -> Result<()> {
    for (i, &(n, y)) in points.iter().enumerate() {
        if !(n >= MIN_N && n.is_finite()) {
            return Err(Error::Validation(format!(
                "point {i}: n must be >= 1, got {n}"
            )));
        }
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::Validation(format!(
                "point {i}: roc_auc must lie in [0, 1], got {y}"
            )));
        }
    }
    Ok(())
}

fn distinct_n(points: &[(f64, f64)]) -> usize {
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    ns.len()
}

struct Solver<'a> {
    points: &'a [(f64, f64)],
    config: &'a FitConfig,
}

struct Linearization {
    /// Half the sum of squared residuals.
    cost: f64,
    gradient: Vector3<f64>,
    normal: Matrix3<f64>,
}

impl<'a> Solver<'a> {
    fn new(points: &'a [(f64, f64)], config: &'a FitConfig) -> Self {
        Self { points, config }
    }

    fn cost(&self, x: &Vector3<f64>) -> f64 {
        0.5 * self
            .points
            .iter()
            .map(|&(n, y)| {
                let r = x[0] - x[1] * n.powf(-x[2]) - y;
                r * r
            })
            .sum::<f64>()
    }

    fn linearize(&self, x: &Vector3<f64>) -> Linearization {
        let mut cost = 0.0;
        let mut gradient = Vector3::zeros();
        let mut normal = Matrix3::zeros();
        for &(n, y) in self.points {
            let row = Vector3::from(jacobian_row(x[1], x[2], n));
            let r = x[0] - x[1] * n.powf(-x[2]) - y;
            cost += r * r;
            gradient += row * r;
            normal += row * row.transpose();
        }
        Linearization {
            cost: 0.5 * cost,
            gradient,
            normal,
        }
    }

    fn run(&self) -> FitResult {
        let cfg = self.config;
        let g0 = cfg.initial_guess;
        let mut x = Vector3::new(g0.alpha, g0.beta, g0.gamma);
        let mut lin = self.linearize(&x);
        let mut scale = column_scale(&lin.normal, &Vector3::zeros());
        let mut damping = 1e-3 * lin.normal.diagonal().max();
        if damping <= 0.0 {
            damping = 1e-3;
        }
        let mut growth = 2.0;
        let mut iterations = 0;

        let termination = loop {
            let (pg, free) = projected_gradient(&x, &lin.gradient);
            if iterations >= cfg.max_iterations {
                break Termination::MaxIterations;
            }

            let Some(delta) = solve_damped(&lin, &scale, damping, &free) else {
                iterations += 1;
                damping *= growth;
                growth *= 2.0;
                continue;
            };
            let trial = project(&(x + delta));
            let step = trial - x;
            let predicted = -(lin.gradient.dot(&step) + 0.5 * step.dot(&(lin.normal * step)));

            // A small gradient alone is not enough on this badly conditioned
            // problem; the next step must also be unable to lower the cost.
            if pg.amax() <= cfg.gradient_tolerance && predicted <= NEGLIGIBLE_DECREASE * lin.cost {
                break Termination::GradientSmall;
            }
            if step.norm() <= cfg.step_tolerance * (x.norm() + cfg.step_tolerance) {
                break Termination::StepSmall;
            }
            iterations += 1;

            let trial_cost = self.cost(&trial);
            let actual = lin.cost - trial_cost;
            let ratio = if predicted > 0.0 {
                actual / predicted
            } else {
                -1.0
            };

            if ratio > 1e-4 {
                x = trial;
                lin = self.linearize(&x);
                scale = column_scale(&lin.normal, &scale);
                damping *= (1.0 - (2.0 * ratio - 1.0).powi(3)).max(1.0 / 3.0);
                growth = 2.0;
            } else {
                damping *= growth;
                growth *= 2.0;
            }
        };

        self.finish(x, iterations, termination)
    }

    fn finish(
        &self,
        mut x: Vector3<f64>,
        iterations: usize,
        termination: Termination,
    ) -> FitResult {
        let mut gamma_unidentifiable = false;

        // The constant curve is always a candidate; iterating towards beta = 0
        // only converges linearly, so compare against it directly.
        let count = self.points.len() as f64;
        let mean = self.points.iter().map(|p| p.1).sum::<f64>() / count;
        let flat = Vector3::new(mean.clamp(ALPHA_MIN, ALPHA_MAX), 0.0, x[2]);
        if x[1] == 0.0 || self.cost(&flat) <= self.cost(&x) {
            x = flat;
        }
        if x[1] == 0.0 {
            x[2] = self.config.initial_guess.gamma;
            gamma_unidentifiable = true;
        }

        let lin = self.linearize(&x);
        let sse = 2.0 * lin.cost;
        let (pg, _) = projected_gradient(&x, &lin.gradient);
        let curve = PowerLawCurve::new(x[0], x[1], x[2])
            .expect("solver iterates are projected onto the parameter box");
        FitResult {
            curve,
            cutoff: None,
            sse,
            rmse: (sse / count).sqrt(),
            n_points: 0,
            n_observations: self.points.len(),
            converged: termination != Termination::MaxIterations,
            iterations,
            termination,
            projected_gradient: pg.amax(),
            gamma_unidentifiable,
        }
    }
}

fn project(x: &Vector3<f64>) -> Vector3<f64> {
    Vector3::from_fn(|i, _| x[i].clamp(LOWER[i], UPPER[i]))
}

/// Gradient with the components that point out of the box at an active
/// bound zeroed, plus the mask of parameters left free to move.
fn projected_gradient(x: &Vector3<f64>, g: &Vector3<f64>) -> (Vector3<f64>, [bool; 3]) {
    let mut pg = *g;
    let mut free = [true; 3];
    for i in 0..3 {
        // A descent step moves along -g.
        let blocked = (x[i] <= LOWER[i] && g[i] > 0.0) || (x[i] >= UPPER[i] && g[i] < 0.0);
        if blocked {
            pg[i] = 0.0;
            free[i] = false;
        }
    }
    (pg, free)
}

/// Running maximum of the normal-matrix diagonal, used as the damping metric.
fn column_scale(normal: &Matrix3<f64>, previous: &Vector3<f64>) -> Vector3<f64> {
    Vector3::from_fn(|i, _| {
        let d = normal[(i, i)].max(previous[i]);
        if d > 0.0 {
            d
        } else {
            1.0
        }
    })
}

fn solve_damped(
    lin: &Linearization,
    scale: &Vector3<f64>,
    damping: f64,
    free: &[bool; 3],
) -> Option<Vector3<f64>> {
    let mut lhs = lin.normal;
    let mut rhs = -lin.gradient;
    for i in 0..3 {
        if free[i] {
            lhs[(i, i)] += damping * scale[i];
        } else {
            for j in 0..3 {
                lhs[(i, j)] = 0.0;
                lhs[(j, i)] = 0.0;
            }
            lhs[(i, i)] = 1.0;
            rhs[i] = 0.0;
        }
    }
    let delta = lhs.cholesky()?.solve(&rhs);
    delta.iter().all(|v| v.is_finite()).then_some(delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule_points(curve: &PowerLawCurve, ns: &[f64]) -> Vec<(f64, f64)> {
        ns.iter()
            .map(|&n| (n, curve.evaluate(n).unwrap()))
            .collect()
    }

    const FIVE_TO_FIFTY: [f64; 10] = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0];

    #[test]
    fn recovers_noiseless_curve() {
        let truth = PowerLawCurve::new(0.92, 0.6, 0.8).unwrap();
        let pts = schedule_points(&truth, &FIVE_TO_FIFTY);
        let fit = fit(&pts, &FitConfig::default()).unwrap();
        assert!(fit.converged, "{fit:?}");
        assert!((fit.curve.alpha() - 0.92).abs() < 1e-6, "{fit:?}");
        assert!((fit.curve.beta() - 0.6).abs() < 1e-6, "{fit:?}");
        assert!((fit.curve.gamma() - 0.8).abs() < 1e-6, "{fit:?}");
        assert!(fit.sse <= 1e-12);
        assert_eq!(fit.n_points, 10);
    }

    #[test]
    fn constant_data_gives_flat_curve() {
        let pts = [(5.0, 0.95), (10.0, 0.95), (20.0, 0.95)];
        let fit = fit(&pts, &FitConfig::default()).unwrap();
        assert_eq!(fit.curve.beta(), 0.0);
        assert!((fit.curve.alpha() - 0.95).abs() < 1e-15);
        assert!(fit.sse < 1e-28);
        assert!(fit.gamma_unidentifiable);
        assert_eq!(fit.curve.gamma(), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        let two = [(5.0, 0.9), (10.0, 0.91), (5.0, 0.92)];
        match fit(&two, &FitConfig::default()) {
            Err(Error::InsufficientData {
                needed: 3,
                found: 2,
            }) => {}
            other => panic!("{other:?}"),
        }
        let bad_auc = [(5.0, 0.9), (10.0, 1.2), (15.0, 0.92)];
        assert!(matches!(
            fit(&bad_auc, &FitConfig::default()),
            Err(Error::Validation(_))
        ));
        let bad_n = [(0.5, 0.9), (10.0, 0.91), (15.0, 0.92)];
        assert!(matches!(
            fit(&bad_n, &FitConfig::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = FitConfig::default();
        cfg.initial_guess.alpha = 0.5;
        assert!(cfg.validate().is_err());
        let cfg = FitConfig {
            gradient_tolerance: 0.0,
            ..FitConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn jacobian_examples() {
        let flat = PowerLawCurve::new(0.9, 0.0, 0.7).unwrap();
        assert_eq!(jacobian(&flat, &[10.0]).unwrap()[0][2], 0.0);
        let c = PowerLawCurve::new(0.92, 0.6, 0.8).unwrap();
        assert_eq!(jacobian(&c, &[1.0]).unwrap()[0][2], 0.0);
        assert!(jacobian(&c, &[0.5]).is_err());

        let n = 25.0;
        let row = jacobian(&c, &[n]).unwrap()[0];
        let h = 1e-6;
        let params = [0.92, 0.6, 0.8];
        for k in 0..3 {
            let mut up = params;
            let mut down = params;
            up[k] += h;
            down[k] -= h;
            let m = |p: [f64; 3]| p[0] - p[1] * n.powf(-p[2]);
            let fd = (m(up) - m(down)) / (2.0 * h);
            assert!(
                (row[k] - fd).abs() <= 1e-6 * row[k].abs().max(1.0),
                "column {k}: {} vs {fd}",
                row[k]
            );
        }
    }

    #[test]
    fn cutoff_filters_points() {
        let truth = PowerLawCurve::new(0.92, 0.6, 0.8).unwrap();
        let mut ns = FIVE_TO_FIFTY.to_vec();
        ns.extend([100.0, 250.0, 500.0, 1000.0]);
        let pts = schedule_points(&truth, &ns);

        let r = fit_with_cutoff(&pts, 20, &FitConfig::default()).unwrap();
        assert_eq!(r.n_points, 4);
        assert_eq!(r.cutoff, Some(20));

        let restricted = fit_with_cutoff(&pts, 1000, &FitConfig::default()).unwrap();
        let full = fit(&pts, &FitConfig::default()).unwrap();
        assert_eq!(restricted.curve, full.curve);
        assert_eq!(restricted.sse, full.sse);

        match fit_with_cutoff(&pts, 12, &FitConfig::default()) {
            Err(Error::InsufficientData { found: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn alpha_pinned_at_upper_bound() {
        // Data generated with a plateau above 1 must land exactly on alpha = 1.
        let pts: Vec<(f64, f64)> = FIVE_TO_FIFTY
            .iter()
            .map(|&n: &f64| (n, (1.05 - 0.9 * n.powf(-0.5)).min(1.0)))
            .collect();
        let fit = fit(&pts, &FitConfig::default()).unwrap();
        assert_eq!(fit.curve.alpha(), 1.0);
        assert!(fit.converged);
    }
}
