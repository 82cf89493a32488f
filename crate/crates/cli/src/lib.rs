//! `plateau` command-line front end.
//!
//! Every subcommand reads experiment rows (CSV or JSON), runs one analysis and
//! writes a JSON document, CSV rows or TSV plot data. Output files are written
//! to a temporary sibling and renamed into place only on success.
//!
//! Exit status: 0 on success, 1 when inputs fail validation or analysis, 2 on
//! usage errors.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use plateau_core::analysis::{self, plot, DEFAULT_FIT_CUTOFF, DEFAULT_SLOPE_N, DEFAULT_THRESHOLD};
use plateau_core::experiments::{self, ExperimentPoint, InputFormat, LearningCurveSeries};
use plateau_core::fit::{FitConfig, FitResult};
use plateau_core::format::round_json;
use plateau_core::planner::{self, NextAction, SamplingSchedule, StoppingRule};
use plateau_core::synth::{self, SynthSpec};
use plateau_core::{PowerLawCurve, DEFAULT_CAP};

pub const TOOL: &str = "plateau";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "plateau",
    version,
    about = "Fit power-law learning curves and plan labeling budgets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Experiments file; `-` or omitted reads standard input.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Input format; inferred from the file extension when omitted.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the power law to every (pathology, model) series.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, default_value_t = DEFAULT_FIT_CUTOFF)]
        cutoff: u32,
    },
    /// Required number of positive cases to reach a ROC-AUC threshold.
    PredictN {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_FIT_CUTOFF)]
        cutoff: u32,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
    },
    /// Derivative of each fitted curve at a given training size.
    Slope {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, default_value_t = DEFAULT_FIT_CUTOFF)]
        cutoff: u32,
        #[arg(long = "slope-n", default_value_t = DEFAULT_SLOPE_N)]
        slope_n: u32,
    },
    /// Pearson correlation between early slope and observed plateau.
    AnalyzeCorr {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, default_value_t = DEFAULT_FIT_CUTOFF)]
        cutoff: u32,
        #[arg(long = "slope-n", default_value_t = DEFAULT_SLOPE_N)]
        slope_n: u32,
    },
    /// Extrapolation error at the largest training size versus fit cutoff.
    AnalyzeMae {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, value_delimiter = ',', default_value = "20,35,50,100")]
        cutoffs: Vec<u32>,
    },
    /// Labeling budgets for the sampling schedule, and stop/continue
    /// decisions for observed series.
    Plan {
        #[command(flatten)]
        input: PlanInput,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, default_value_t = planner::DEFAULT_NEGATIVE_RATIO)]
        ratio: u32,
        /// Negative studies available for sampling (unlimited when omitted).
        #[arg(long)]
        available: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
        #[arg(long, default_value_t = planner::DEFAULT_STABILITY_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = planner::DEFAULT_STABILITY_TOL)]
        tol: f64,
    },
    /// Generate a synthetic experiments file from a known curve.
    Simulate {
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, default_value_t = 0.02, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replicate runs per training size.
        #[arg(long, default_value_t = 10)]
        seeds: u32,
        #[arg(long, default_value = "synthetic")]
        pathology: String,
        #[arg(long, default_value = "synthetic")]
        model: String,
        /// Output format.
        #[arg(long, value_parser = ["csv", "json"], default_value = "csv")]
        format: String,
    },
    /// Write TSV plot data for learning curves, slope/plateau and cutoff/MAE.
    ExportPlot {
        #[command(flatten)]
        input: InputArgs,
        /// Directory receiving the TSV files.
        #[arg(long, value_name = "DIR")]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FIT_CUTOFF)]
        cutoff: u32,
        #[arg(long, value_delimiter = ',', default_value = "20,35,50,100")]
        cutoffs: Vec<u32>,
        #[arg(long = "slope-n", default_value_t = DEFAULT_SLOPE_N)]
        slope_n: u32,
    },
}

#[derive(Debug, Args)]
struct PlanInput {
    /// Optional experiments file to evaluate the stopping rule on.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(err: E) -> Self {
        Failure::Validation(err.to_string())
    }
}

type CmdResult<T> = Result<T, Failure>;

/// Runs the CLI with `argv` (including the program name) and returns the
/// process exit status.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let text = err.render().to_string();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(Failure::Validation(msg)) => {
            let line = msg.replace('\n', " ");
            let _ = writeln!(stderr, "error: {line}");
            1
        }
    }
}

#[derive(Serialize)]
struct Document<C: Serialize, B: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: C,
    #[serde(flatten)]
    body: B,
}

fn document<C: Serialize, B: Serialize>(
    command: &'static str,
    config: C,
    body: B,
) -> CmdResult<Vec<u8>> {
    let doc = Document {
        tool: TOOL,
        version: VERSION,
        command,
        config,
        body,
    };
    let mut value = serde_json::to_value(&doc)?;
    round_json(&mut value);
    let mut bytes = serde_json::to_vec_pretty(&value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn execute(command: Command, stdout: &mut dyn Write) -> CmdResult<()> {
    let fit_config = FitConfig::default();
    match command {
        Command::Fit {
            input,
            output,
            cutoff,
        } => {
            let series = load_series(&input)?;
            let fits = analysis::fit_each(&series, Some(cutoff), &fit_config);
            let entries: Vec<FitEntry> = series
                .iter()
                .zip(fits)
                .map(|(s, r)| FitEntry::new(s, r))
                .collect();
            let n_skipped = entries.iter().filter(|e| e.fit.is_none()).count();
            let bytes = document(
                "fit",
                serde_json::json!({ "cutoff": cutoff, "fit": fit_config }),
                serde_json::json!({ "fits": entries, "n_skipped": n_skipped }),
            )?;
            emit(&output, &bytes, stdout)
        }
        Command::PredictN {
            input,
            output,
            threshold,
            cutoff,
            cap,
        } => {
            let series = load_series(&input)?;
            let rows = analysis::build_report(&series, cutoff, threshold, cap, &fit_config)?;
            let n_skipped = rows.iter().filter(|r| r.skipped.is_some()).count();
            let bytes = document(
                "predict-n",
                serde_json::json!({ "cutoff": cutoff, "threshold": threshold, "cap": cap, "fit": fit_config }),
                serde_json::json!({ "rows": rows, "n_skipped": n_skipped }),
            )?;
            emit(&output, &bytes, stdout)
        }
        Command::Slope {
            input,
            output,
            cutoff,
            slope_n,
        } => {
            let series = load_series(&input)?;
            let fits = analysis::fit_each(&series, Some(cutoff), &fit_config);
            let mut entries = Vec::new();
            for (s, r) in series.iter().zip(fits) {
                let slope = match &r {
                    Ok(f) => Some(f.curve.slope(f64::from(slope_n))?),
                    Err(_) => None,
                };
                entries.push(SlopeEntry {
                    pathology: s.pathology.clone(),
                    model: s.model.clone(),
                    slope,
                    curve: r.as_ref().ok().map(|f| f.curve),
                    skipped: r.err().map(|e| e.to_string()),
                });
            }
            let bytes = document(
                "slope",
                serde_json::json!({ "cutoff": cutoff, "slope_n": slope_n, "fit": fit_config }),
                serde_json::json!({ "slopes": entries }),
            )?;
            emit(&output, &bytes, stdout)
        }
        Command::AnalyzeCorr {
            input,
            output,
            cutoff,
            slope_n,
        } => {
            let series = load_series(&input)?;
            let study = analysis::slope_correlation(&series, cutoff, slope_n, &fit_config)?;
            let n_excluded = study.excluded.len();
            let bytes = document(
                "analyze-corr",
                serde_json::json!({ "cutoff": cutoff, "slope_n": slope_n, "fit": fit_config }),
                serde_json::json!({ "study": study, "n_excluded": n_excluded }),
            )?;
            emit(&output, &bytes, stdout)
        }
        Command::AnalyzeMae {
            input,
            output,
            cutoffs,
        } => {
            let series = load_series(&input)?;
            let study = analysis::extrapolation_mae(&series, &cutoffs, &fit_config)?;
            let bytes = document(
                "analyze-mae",
                serde_json::json!({ "cutoffs": cutoffs, "fit": fit_config }),
                serde_json::json!({ "study": study }),
            )?;
            emit(&output, &bytes, stdout)
        }
        Command::Plan {
            input,
            output,
            ratio,
            available,
            threshold,
            cap,
            window,
            tol,
        } => {
            let schedule = SamplingSchedule::default();
            let mut budgets = Vec::new();
            for &n in schedule.sizes() {
                let budget =
                    planner::budget_for(u64::from(n), available.unwrap_or(u64::MAX), ratio)?;
                let splits = if budget.total >= 10 {
                    Some(planner::split_sizes(budget.total)?)
                } else {
                    None
                };
                budgets.push(serde_json::json!({ "budget": budget, "splits_of_total": splits }));
            }
            let rule = StoppingRule {
                threshold,
                window,
                tolerance: tol,
                cap,
                schedule,
            };
            let mut decisions = Vec::new();
            if let Some(path) = &input.input {
                let series = load_series(&InputArgs {
                    input: Some(path.clone()),
                    format: input.format.clone(),
                })?;
                for s in &series {
                    let decision = planner::next_action(s, &rule, &fit_config);
                    decisions.push(PlanEntry {
                        pathology: s.pathology.clone(),
                        model: s.model.clone(),
                        n_max: s.n_max,
                        action: decision.as_ref().ok().cloned(),
                        skipped: decision.err().map(|e| e.to_string()),
                    });
                }
            }
            let bytes = document(
                "plan",
                serde_json::json!({
                    "ratio": ratio, "available": available, "threshold": threshold,
                    "cap": cap, "window": window, "tol": tol, "fit": fit_config,
                }),
                serde_json::json!({ "budgets": budgets, "decisions": decisions }),
            )?;
            emit(&output, &bytes, stdout)
        }
        Command::Simulate {
            output,
            alpha,
            beta,
            gamma,
            sigma,
            seed,
            seeds,
            pathology,
            model,
            format,
        } => {
            let curve = PowerLawCurve::new(alpha, beta, gamma)?;
            let spec = SynthSpec::new(curve, seed)
                .with_sigma(sigma)
                .with_seeds(seeds);
            let points = synth::generate(&spec, &pathology, &model)?;
            let bytes = match format.as_str() {
                "json" => {
                    let mut b = serde_json::to_vec_pretty(&points)?;
                    b.push(b'\n');
                    b
                }
                _ => {
                    let mut b = Vec::new();
                    experiments::write_csv(&points, &mut b)?;
                    b
                }
            };
            emit(&output, &bytes, stdout)
        }
        Command::ExportPlot {
            input,
            output,
            cutoff,
            cutoffs,
            slope_n,
        } => {
            let series = load_series(&input)?;
            let mut curve_cutoffs: Vec<Option<u32>> = cutoffs.iter().copied().map(Some).collect();
            curve_cutoffs.push(None);
            let curves = plot::learning_curves_tsv(&series, &curve_cutoffs, &fit_config)?;
            // Fewer than two usable series still gets a (header-only) scatter file.
            let scatter = match analysis::slope_correlation(&series, cutoff, slope_n, &fit_config) {
                Ok(corr) => plot::slope_plateau_tsv(&corr),
                Err(plateau_core::Error::UndefinedCorrelation(_)) => {
                    format!("pathology\tmodel\tslope_at_{slope_n}\troc_at_nmax\tn_total\n")
                }
                Err(e) => return Err(e.into()),
            };
            let mae = analysis::extrapolation_mae(&series, &cutoffs, &fit_config)?;
            let files = [
                ("learning_curves.tsv", curves),
                ("slope_plateau.tsv", scatter),
                ("cutoff_mae.tsv", plot::cutoff_mae_tsv(&mae)),
            ];
            fs::create_dir_all(&output).map_err(|e| {
                Failure::Validation(format!("cannot create {}: {e}", output.display()))
            })?;
            for (name, body) in &files {
                write_atomic(&output.join(name), body.as_bytes())?;
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct FitEntry {
    pathology: String,
    model: String,
    n_max: u32,
    fit: Option<FitResult>,
    skipped: Option<String>,
}

impl FitEntry {
    fn new(s: &LearningCurveSeries, r: plateau_core::Result<FitResult>) -> Self {
        let (fit, skipped) = match r {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            pathology: s.pathology.clone(),
            model: s.model.clone(),
            n_max: s.n_max,
            fit,
            skipped,
        }
    }
}

#[derive(Serialize)]
struct SlopeEntry {
    pathology: String,
    model: String,
    slope: Option<f64>,
    curve: Option<PowerLawCurve>,
    skipped: Option<String>,
}

#[derive(Serialize)]
struct PlanEntry {
    pathology: String,
    model: String,
    n_max: u32,
    action: Option<NextAction>,
    skipped: Option<String>,
}

fn load_series(args: &InputArgs) -> CmdResult<Vec<LearningCurveSeries>> {
    let points = load_points(args)?;
    if points.is_empty() {
        return Err(Failure::Validation(
            "input contains no experiment rows".into(),
        ));
    }
    Ok(experiments::aggregate(&points))
}

fn load_points(args: &InputArgs) -> CmdResult<Vec<ExperimentPoint>> {
    let path = args.input.as_deref().filter(|p| *p != Path::new("-"));
    let format = match (&args.format, path) {
        (Some(f), _) => f.parse::<InputFormat>()?,
        (None, Some(p))
            if p.extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("json")) =>
        {
            InputFormat::Json
        }
        _ => InputFormat::Csv,
    };
    let mut bytes = Vec::new();
    match path {
        Some(p) => {
            bytes = fs::read(p)
                .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", p.display())))?;
        }
        None => {
            io::stdin().read_to_end(&mut bytes)?;
        }
    }
    let label = path.map_or_else(|| "<stdin>".to_string(), |p| p.display().to_string());
    experiments::ingest(bytes.as_slice(), format)
        .map_err(|e| Failure::Validation(format!("{label}: {e}")))
}

fn emit(output: &OutputArgs, bytes: &[u8], stdout: &mut dyn Write) -> CmdResult<()> {
    match &output.output {
        Some(path) => write_atomic(path, bytes),
        None => {
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Writes to a temporary file next to `path` and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> CmdResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: &dyn std::fmt::Display| {
        Failure::Validation(format!("cannot write {}: {e}", path.display()))
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(bytes).map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}
