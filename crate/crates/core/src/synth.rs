//! Synthetic experiment campaigns drawn from a known power law.
//!
//! Every ROC-AUC value is the true curve plus Gaussian noise. The noise draw
//! for a run is a pure function of `(rng_seed, pathology, model, n, seed)`,
//! so values do not depend on generation order.

use serde::{Deserialize, Serialize};

use crate::curve::PowerLawCurve;
use crate::error::{Error, Result};
use crate::experiments::ExperimentPoint;
use crate::planner::SamplingSchedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub true_curve: PowerLawCurve,
    pub schedule: SamplingSchedule,
    pub n_seeds: u32,
    pub noise_sigma: f64,
    pub rng_seed: u64,
    /// Clamp noisy values into `[0, 1]`.
    pub clamp: bool,
}

impl SynthSpec {
    pub fn new(true_curve: PowerLawCurve, rng_seed: u64) -> Self {
        Self {
            true_curve,
            schedule: SamplingSchedule::default(),
            n_seeds: 10,
            noise_sigma: 0.02,
            rng_seed,
            clamp: true,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_seeds(mut self, n_seeds: u32) -> Self {
        self.n_seeds = n_seeds;
        self
    }

    pub fn with_schedule(mut self, schedule: SamplingSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Validation(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        if self.n_seeds == 0 {
            return Err(Error::Validation("n_seeds must be >= 1".into()));
        }
        Ok(())
    }
}

/// One row per (training size, seed), ordered by size then seed.
pub fn generate(spec: &SynthSpec, pathology: &str, model: &str) -> Result<Vec<ExperimentPoint>> {
    spec.validate()?;
    let pathology = pathology.trim().to_lowercase();
    let model = model.trim().to_lowercase();
    let base = KeyedNormal::new(spec.rng_seed, &pathology, &model);
    let mut points = Vec::with_capacity(spec.schedule.sizes().len() * spec.n_seeds as usize);
    for &n in spec.schedule.sizes() {
        let mean = spec.true_curve.evaluate(f64::from(n))?;
        for seed in 0..u64::from(spec.n_seeds) {
            let mut value = mean;
            if spec.noise_sigma > 0.0 {
                value += spec.noise_sigma * base.sample(u64::from(n), seed);
            }
            if spec.clamp {
                value = value.clamp(0.0, 1.0);
            }
            points.push(ExperimentPoint {
                pathology: pathology.clone(),
                model: model.clone(),
                n_cases: n,
                seed,
                roc_auc: value,
            });
        }
    }
    Ok(points)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Uniform in (0, 1] from the top 53 bits.
fn unit_open_closed(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Counter-based standard normal source keyed by a 64-bit stream id.
#[derive(Debug, Clone, Copy)]
pub struct KeyedNormal {
    key: u64,
}

impl KeyedNormal {
    pub fn new(rng_seed: u64, pathology: &str, model: &str) -> Self {
        let mut key = mix64(rng_seed);
        key = mix64(key ^ fnv1a(pathology.as_bytes()));
        key = mix64(key ^ fnv1a(model.as_bytes()).rotate_left(17));
        Self { key }
    }

    pub fn from_key(key: u64) -> Self {
        Self { key: mix64(key) }
    }

    /// Standard normal draw for counter pair `(a, b)` via Box-Muller.
    pub fn sample(&self, a: u64, b: u64) -> f64 {
        let cell = mix64(mix64(self.key ^ a).wrapping_add(b.rotate_left(32)));
        let u1 = unit_open_closed(mix64(cell ^ 0x5555_5555_5555_5555));
        let u2 = unit_open_closed(mix64(cell ^ 0xAAAA_AAAA_AAAA_AAAA));
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform draw in (0, 1] for counter pair `(a, b)`.
    pub fn uniform(&self, a: u64, b: u64) -> f64 {
        let cell = mix64(mix64(self.key ^ a).wrapping_add(b.rotate_left(32)));
        unit_open_closed(mix64(cell ^ 0x3C3C_3C3C_3C3C_3C3C))
    }
}
