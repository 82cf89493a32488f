//! Experiment records and their aggregation into learning-curve series.
//!
//! Input files carry one row per training run with the columns
//! `pathology,model,n_cases,seed,roc_auc`. Runs that share a pathology, model
//! and training size are replicate seeds; [`aggregate`] collapses them to a
//! mean and a population standard deviation.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{self, FitConfig, FitResult, FitTarget};

pub const COLUMNS: [&str; 5] = ["pathology", "model", "n_cases", "seed", "roc_auc"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPoint {
    pub pathology: String,
    pub model: String,
    /// Distinct positive training cases.
    pub n_cases: u32,
    /// Replicate id.
    pub seed: u64,
    pub roc_auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Json,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Validation(format!("unknown input format `{other}`"))),
        }
    }
}

/// Reads and validates experiment rows, preserving their order.
pub fn ingest<R: Read>(source: R, format: InputFormat) -> Result<Vec<ExperimentPoint>> {
    let points = match format {
        InputFormat::Csv => read_csv(source)?,
        InputFormat::Json => read_json(source)?,
    };
    check_unique(&points)?;
    Ok(points)
}

struct FieldError {
    field: &'static str,
    message: String,
}

fn field_err(field: &'static str, message: impl Into<String>) -> FieldError {
    FieldError {
        field,
        message: message.into(),
    }
}

fn parse_identifier(field: &'static str, raw: &str) -> Result<String, FieldError> {
    let id = raw.trim().to_lowercase();
    if id.is_empty() {
        return Err(field_err(field, "identifier must not be empty"));
    }
    Ok(id)
}

fn parse_n_cases(raw: &str) -> Result<u32, FieldError> {
    let n: u32 = raw.trim().parse().map_err(|_| {
        field_err(
            "n_cases",
            format!("expected a positive integer, got `{raw}`"),
        )
    })?;
    if n == 0 {
        return Err(field_err("n_cases", "must be >= 1"));
    }
    Ok(n)
}

fn parse_seed(raw: &str) -> Result<u64, FieldError> {
    raw.trim().parse().map_err(|_| {
        field_err(
            "seed",
            format!("expected a non-negative integer, got `{raw}`"),
        )
    })
}

fn check_roc_auc(value: f64) -> Result<f64, FieldError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(field_err(
            "roc_auc",
            format!("value {value} outside range [0, 1]"),
        ))
    }
}

fn parse_roc_auc(raw: &str) -> Result<f64, FieldError> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| field_err("roc_auc", format!("expected a decimal, got `{raw}`")))?;
    check_roc_auc(v)
}

fn read_csv<R: Read>(source: R) -> Result<Vec<ExperimentPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let mut index = [0usize; 5];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Row {
                line: 1,
                field: name.to_string(),
                message: "missing column in header".into(),
            })?;
    }

    let mut points = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: usize| record.get(index[i]).unwrap_or("");
        let parsed = (|| -> Result<ExperimentPoint, FieldError> {
            Ok(ExperimentPoint {
                pathology: parse_identifier("pathology", get(0))?,
                model: parse_identifier("model", get(1))?,
                n_cases: parse_n_cases(get(2))?,
                seed: parse_seed(get(3))?,
                roc_auc: parse_roc_auc(get(4))?,
            })
        })();
        points.push(parsed.map_err(|e| Error::Row {
            line,
            field: e.field.to_string(),
            message: e.message,
        })?);
    }
    Ok(points)
}

fn read_json<R: Read>(source: R) -> Result<Vec<ExperimentPoint>> {
    let records: Vec<serde_json::Value> = serde_json::from_reader(source)?;
    records
        .iter()
        .enumerate()
        .map(|(i, value)| {
            json_record(value).map_err(|e| Error::Record {
                record: i as u64 + 1,
                field: e.field.to_string(),
                message: e.message,
            })
        })
        .collect()
}

fn json_record(value: &serde_json::Value) -> Result<ExperimentPoint, FieldError> {
    let obj = value
        .as_object()
        .ok_or_else(|| field_err("record", "expected a JSON object"))?;
    let get = |field: &'static str| obj.get(field).ok_or_else(|| field_err(field, "missing"));
    let string = |field: &'static str| -> Result<String, FieldError> {
        let v = get(field)?;
        let s = v
            .as_str()
            .ok_or_else(|| field_err(field, "expected a string"))?;
        parse_identifier(field, s)
    };
    let n_cases = get("n_cases")?
        .as_u64()
        .and_then(|n| u32::try_from(n).ok())
        .filter(|&n| n >= 1)
        .ok_or_else(|| field_err("n_cases", "expected a positive integer"))?;
    let seed = get("seed")?
        .as_u64()
        .ok_or_else(|| field_err("seed", "expected a non-negative integer"))?;
    let roc_auc = get("roc_auc")?
        .as_f64()
        .ok_or_else(|| field_err("roc_auc", "expected a number"))?;
    Ok(ExperimentPoint {
        pathology: string("pathology")?,
        model: string("model")?,
        n_cases,
        seed,
        roc_auc: check_roc_auc(roc_auc)?,
    })
}

fn check_unique(points: &[ExperimentPoint]) -> Result<()> {
    let mut seen = HashSet::with_capacity(points.len());
    for p in points {
        if !seen.insert((p.pathology.as_str(), p.model.as_str(), p.n_cases, p.seed)) {
            return Err(Error::DuplicateKey {
                pathology: p.pathology.clone(),
                model: p.model.clone(),
                n_cases: p.n_cases,
                seed: p.seed,
            });
        }
    }
    Ok(())
}

/// Writes rows in the CSV schema accepted by [`ingest`]. ROC-AUC values are
/// printed with the shortest representation that parses back to the same
/// `f64`.
pub fn write_csv<W: Write>(points: &[ExperimentPoint], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(COLUMNS)?;
    for p in points {
        writer.write_record([
            p.pathology.clone(),
            p.model.clone(),
            p.n_cases.to_string(),
            p.seed.to_string(),
            p.roc_auc.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Seed-aggregated ROC-AUC at one training size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub n_cases: u32,
    pub mean_roc_auc: f64,
    /// Population standard deviation over seeds.
    pub std_roc_auc: f64,
    pub n_seeds: usize,
    /// Per-seed values ordered by seed.
    #[serde(skip)]
    pub runs: Vec<f64>,
}

impl SeriesPoint {
    fn from_runs(n_cases: u32, mut runs: Vec<(u64, f64)>) -> Self {
        runs.sort_by_key(|&(seed, _)| seed);
        let values: Vec<f64> = runs.into_iter().map(|(_, v)| v).collect();
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
        Self {
            n_cases,
            mean_roc_auc: mean,
            std_roc_auc: var.sqrt(),
            n_seeds: values.len(),
            runs: values,
        }
    }
}

/// Learning curve of one pathology/model pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurveSeries {
    pub pathology: String,
    pub model: String,
    /// Strictly increasing in `n_cases`.
    pub points: Vec<SeriesPoint>,
    pub n_max: u32,
}

impl LearningCurveSeries {
    /// Builds a series from already-aggregated `(n, mean)` pairs with a single
    /// notional seed each.
    pub fn from_means(
        pathology: impl Into<String>,
        model: impl Into<String>,
        means: &[(u32, f64)],
    ) -> Result<Self> {
        let mut points: Vec<SeriesPoint> = means
            .iter()
            .map(|&(n, m)| SeriesPoint::from_runs(n, vec![(0, m)]))
            .collect();
        points.sort_by_key(|p| p.n_cases);
        if points.windows(2).any(|w| w[0].n_cases == w[1].n_cases) {
            return Err(Error::Validation("duplicate n_cases in series".into()));
        }
        let n_max = points
            .last()
            .map(|p| p.n_cases)
            .ok_or(Error::InsufficientData {
                needed: 1,
                found: 0,
            })?;
        Ok(Self {
            pathology: pathology.into(),
            model: model.into(),
            points,
            n_max,
        })
    }

    /// Observed mean ROC-AUC at the largest training size.
    pub fn observed_at_max(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.mean_roc_auc)
    }

    /// Retains only the points with `n_cases <= cutoff`.
    pub fn restrict(&self, cutoff: u32) -> Result<Self> {
        let points: Vec<SeriesPoint> = self
            .points
            .iter()
            .filter(|p| p.n_cases <= cutoff)
            .cloned()
            .collect();
        let n_max = points
            .last()
            .map(|p| p.n_cases)
            .ok_or(Error::InsufficientData {
                needed: 1,
                found: 0,
            })?;
        Ok(Self {
            pathology: self.pathology.clone(),
            model: self.model.clone(),
            points,
            n_max,
        })
    }

    /// Observations handed to the solver under `target`.
    pub fn fit_points(&self, target: FitTarget) -> Vec<(f64, f64)> {
        match target {
            FitTarget::SeedMeans => self
                .points
                .iter()
                .map(|p| (f64::from(p.n_cases), p.mean_roc_auc))
                .collect(),
            FitTarget::RawPoints => self
                .points
                .iter()
                .flat_map(|p| p.runs.iter().map(move |&v| (f64::from(p.n_cases), v)))
                .collect(),
        }
    }

    pub fn fit(&self, config: &FitConfig) -> Result<FitResult> {
        fit::fit(&self.fit_points(config.target), config)
    }

    pub fn fit_with_cutoff(&self, cutoff: u32, config: &FitConfig) -> Result<FitResult> {
        fit::fit_with_cutoff(&self.fit_points(config.target), cutoff, config)
    }
}

type RunsBySize = BTreeMap<u32, Vec<(u64, f64)>>;

/// Groups runs by (pathology, model) and averages replicate seeds per
/// training size. Output is sorted by pathology, then model.
pub fn aggregate(points: &[ExperimentPoint]) -> Vec<LearningCurveSeries> {
    let mut groups: BTreeMap<(&str, &str), RunsBySize> = BTreeMap::new();
    for p in points {
        groups
            .entry((p.pathology.as_str(), p.model.as_str()))
            .or_default()
            .entry(p.n_cases)
            .or_default()
            .push((p.seed, p.roc_auc));
    }
    groups
        .into_iter()
        .map(|((pathology, model), by_n)| {
            let points: Vec<SeriesPoint> = by_n
                .into_iter()
                .map(|(n, runs)| SeriesPoint::from_runs(n, runs))
                .collect();
            let n_max = points.last().map_or(0, |p| p.n_cases);
            LearningCurveSeries {
                pathology: pathology.to_string(),
                model: model.to_string(),
                points,
                n_max,
            }
        })
        .collect()
}
