//! Tab-separated plot data: learning curves with fitted overlays, the
//! slope/plateau scatter, and the cutoff/MAE table.

use std::fmt::Write as _;

use crate::error::Result;
use crate::experiments::LearningCurveSeries;
use crate::fit::FitConfig;
use crate::format::sig;

use super::{fit_each, CorrelationStudy, MaeStudy};

/// Samples per fitted curve, log-spaced between the smallest and largest
/// observed training size.
pub const CURVE_SAMPLES: usize = 48;

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 || hi <= lo {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// Observed means plus curves fitted at each cutoff (`None` fits all points).
pub fn learning_curves_tsv(
    series_set: &[LearningCurveSeries],
    cutoffs: &[Option<u32>],
    config: &FitConfig,
) -> Result<String> {
    let mut out = String::from("pathology\tmodel\tkind\tcutoff\tn\troc_auc\tstd\n");
    let mut ordered: Vec<&LearningCurveSeries> = series_set.iter().collect();
    ordered.sort_by(|a, b| (&a.pathology, &a.model).cmp(&(&b.pathology, &b.model)));
    let owned: Vec<LearningCurveSeries> = ordered.iter().map(|s| (*s).clone()).collect();
    let fits: Vec<_> = cutoffs
        .iter()
        .map(|&c| fit_each(&owned, c, config))
        .collect();

    for (i, s) in owned.iter().enumerate() {
        for p in &s.points {
            writeln!(
                out,
                "{}\t{}\tobserved\t-\t{}\t{}\t{}",
                s.pathology,
                s.model,
                p.n_cases,
                sig(p.mean_roc_auc),
                sig(p.std_roc_auc)
            )
            .expect("writing to a String cannot fail");
        }
        let lo = s.points.first().map_or(1.0, |p| f64::from(p.n_cases));
        let grid = log_grid(lo, f64::from(s.n_max), CURVE_SAMPLES);
        for (cutoff, per_series) in cutoffs.iter().zip(&fits) {
            let Ok(fit) = &per_series[i] else { continue };
            let label = cutoff.map_or_else(|| "all".to_string(), |c| c.to_string());
            for &n in &grid {
                writeln!(
                    out,
                    "{}\t{}\tfit\t{}\t{}\t{}\t-",
                    s.pathology,
                    s.model,
                    label,
                    sig(n),
                    sig(fit.curve.evaluate(n)?)
                )
                .expect("writing to a String cannot fail");
            }
        }
    }
    Ok(out)
}

pub fn slope_plateau_tsv(study: &CorrelationStudy) -> String {
    let mut out = format!(
        "pathology\tmodel\tslope_at_{}\troc_at_nmax\tn_total\n",
        study.slope_eval_n
    );
    for p in &study.pairs {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            p.pathology,
            p.model,
            sig(p.slope),
            sig(p.roc_at_nmax),
            p.n_total
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn cutoff_mae_tsv(study: &MaeStudy) -> String {
    let mut out = String::from("cutoff\tmae\tn_eligible\tn_excluded\n");
    for (i, cutoff) in study.cutoffs.iter().enumerate() {
        let mae = study.mae_per_cutoff[i].map_or_else(|| "NA".to_string(), sig);
        writeln!(
            out,
            "{cutoff}\t{mae}\t{}\t{}",
            study.n_eligible[i], study.n_excluded[i]
        )
        .expect("writing to a String cannot fail");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::extrapolation_mae;
    use crate::curve::PowerLawCurve;
    use crate::planner::DEFAULT_SCHEDULE;

    fn series() -> LearningCurveSeries {
        let c = PowerLawCurve::new(0.92, 0.6, 0.8).unwrap();
        let means: Vec<(u32, f64)> = DEFAULT_SCHEDULE
            .iter()
            .map(|&n| (n, c.evaluate(f64::from(n)).unwrap()))
            .collect();
        LearningCurveSeries::from_means("lobe_mass", "xrayclip", &means).unwrap()
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(5.0, 1000.0, 10);
        assert_eq!(g.len(), 10);
        assert!((g[0] - 5.0).abs() < 1e-12);
        assert_eq!(g[9], 1000.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn learning_curve_table_shape() {
        let tsv = learning_curves_tsv(
            &[series()],
            &[Some(20), Some(50), None],
            &FitConfig::default(),
        )
        .unwrap();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 1 + 14 + 3 * CURVE_SAMPLES);
        assert_eq!(
            lines[1],
            "lobe_mass\txrayclip\tobserved\t-\t5\t0.754432\t0.00000"
        );
        assert!(lines.iter().all(|l| l.split('\t').count() == 7));
        assert!(lines.iter().any(|l| l.contains("\tfit\tall\t1000.00\t")));
    }

    #[test]
    fn mae_table_marks_absent_entries() {
        let study = extrapolation_mae(&[series()], &[10, 50], &FitConfig::default()).unwrap();
        let tsv = cutoff_mae_tsv(&study);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[1], "10\tNA\t0\t1");
        assert!(lines[2].starts_with("50\t"));
    }
}
