//! Recovery scores and Monte-Carlo aggregation over simulated replicates.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{self, GccaConfig, GccaFit};
use crate::synthgen::{self, PlantedTruth, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryScore {
    pub sensitivity: f64,
    pub specificity: f64,
    pub exact_both: bool,
}

pub fn score_recovery(truth: &PlantedTruth, fit: &GccaFit) -> Result<RecoveryScore> {
    if truth.p != fit.p || truth.q != fit.q {
        return Err(Error::UniverseMismatch {
            truth_p: truth.p,
            truth_q: truth.q,
            est_p: fit.p,
            est_q: fit.q,
        });
    }
    Ok(score_sets(truth.p, truth.q, &truth.i_x, &truth.i_y, &fit.i_x, &fit.i_y))
}

/// Sensitivity and specificity of estimated index sets against the truth,
/// pooled over the X and Y universes. All sets must be sorted.
pub fn score_sets(
    p: usize,
    q: usize,
    true_x: &[usize],
    true_y: &[usize],
    est_x: &[usize],
    est_y: &[usize],
) -> RecoveryScore {
    let overlap = |a: &[usize], b: &[usize]| a.iter().filter(|i| b.binary_search(i).is_ok()).count();
    let tp = overlap(est_x, true_x) + overlap(est_y, true_y);
    let fn_ = (true_x.len() + true_y.len()) - tp;
    let fp = (est_x.len() + est_y.len()) - tp;
    let tn = (p - true_x.len()) + (q - true_y.len()) - fp;
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let sensitivity = ratio(tp, tp + fn_);
    let specificity = ratio(tn, tn + fp);
    RecoveryScore {
        sensitivity,
        specificity,
        exact_both: sensitivity == 1.0 && specificity == 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub sensitivity: f64,
    pub specificity: f64,
    pub exact_both: bool,
    pub rho_hat: Option<f64>,
    pub lambda_star: Option<f64>,
    pub size_i_x: usize,
    pub size_i_y: usize,
    /// Set when the fit failed; the replicate then counts as a miss.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub gcca: GccaConfig,
    pub rho_c_pop: f64,
    pub pct_sensitivity_1: f64,
    pub pct_specificity_1: f64,
    pub pct_both_1: f64,
    pub mean_sensitivity: f64,
    pub mean_specificity: f64,
    /// Mean of `sqrt(sensitivity * specificity)`.
    pub mean_geometric: f64,
    pub mean_rho_hat: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub mse: f64,
    /// Replicates without a canonical correlation estimate.
    pub attrition: usize,
    pub per_replicate: Vec<ReplicateOutcome>,
}

impl SimReport {
    pub fn rmse(&self) -> f64 {
        self.mse.sqrt()
    }
}

fn run_replicate(truth: &PlantedTruth, config: &SimConfig, gcca: &GccaConfig, k: usize) -> Result<ReplicateOutcome> {
    let (x, y) = synthgen::sample(truth, config, k)?;
    Ok(match estimation::fit(&x, &y, gcca) {
        Ok(fit) => {
            let s = score_recovery(truth, &fit)?;
            ReplicateOutcome {
                replicate: k,
                sensitivity: s.sensitivity,
                specificity: s.specificity,
                exact_both: s.exact_both,
                rho_hat: Some(fit.rho_hat),
                lambda_star: Some(fit.lambda_star),
                size_i_x: fit.i_x.len(),
                size_i_y: fit.i_y.len(),
                error: None,
            }
        }
        Err(e) => {
            let s = score_sets(truth.p, truth.q, &truth.i_x, &truth.i_y, &[], &[]);
            ReplicateOutcome {
                replicate: k,
                sensitivity: s.sensitivity,
                specificity: s.specificity,
                exact_both: false,
                rho_hat: None,
                lambda_star: None,
                size_i_x: 0,
                size_i_y: 0,
                error: Some(e.to_string()),
            }
        }
    })
}

/// Samples, fits and scores every replicate (in parallel) and aggregates.
pub fn run_study(config: &SimConfig, gcca: &GccaConfig) -> Result<SimReport> {
    let truth = synthgen::build_truth(config)?;
    let outcomes = (0..config.replicates)
        .into_par_iter()
        .map(|k| run_replicate(&truth, config, gcca, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(config, gcca, truth.rho_c_pop, outcomes))
}

/// Same as [`run_study`] on the calling thread only.
pub fn run_study_serial(config: &SimConfig, gcca: &GccaConfig) -> Result<SimReport> {
    let truth = synthgen::build_truth(config)?;
    let outcomes = (0..config.replicates)
        .map(|k| run_replicate(&truth, config, gcca, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(config, gcca, truth.rho_c_pop, outcomes))
}

pub fn aggregate(config: &SimConfig, gcca: &GccaConfig, rho_c_pop: f64, outcomes: Vec<ReplicateOutcome>) -> SimReport {
    let reps = outcomes.len().max(1) as f64;
    let pct = |f: &dyn Fn(&ReplicateOutcome) -> bool| {
        100.0 * outcomes.iter().filter(|o| f(o)).count() as f64 / reps
    };
    let mean = |f: &dyn Fn(&ReplicateOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / reps;

    let rhos: Vec<f64> = outcomes.iter().filter_map(|o| o.rho_hat).collect();
    let (mean_rho_hat, bias_sq, variance, mse) = rho_moments(&rhos, rho_c_pop);

    SimReport {
        config: config.clone(),
        gcca: gcca.clone(),
        rho_c_pop,
        pct_sensitivity_1: pct(&|o| o.sensitivity == 1.0),
        pct_specificity_1: pct(&|o| o.specificity == 1.0),
        pct_both_1: pct(&|o| o.exact_both),
        mean_sensitivity: mean(&|o| o.sensitivity),
        mean_specificity: mean(&|o| o.specificity),
        mean_geometric: mean(&|o| (o.sensitivity * o.specificity).sqrt()),
        mean_rho_hat,
        bias_sq,
        variance,
        mse,
        attrition: outcomes.len() - rhos.len(),
        per_replicate: outcomes,
    }
}

/// Mean, squared bias, population variance and MSE of the estimates. All NaN
/// when there are no estimates.
pub fn rho_moments(rhos: &[f64], target: f64) -> (f64, f64, f64, f64) {
    if rhos.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN, f64::NAN);
    }
    let k = rhos.len() as f64;
    let mean = rhos.iter().sum::<f64>() / k;
    let bias = mean - target;
    let variance = rhos.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / k;
    let mse = rhos.iter().map(|r| (r - target).powi(2)).sum::<f64>() / k;
    (mean, bias * bias, variance, mse)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub n: usize,
    pub rmse: f64,
    pub report: SimReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub points: Vec<ConvergencePoint>,
    /// Least-squares slope of `ln(rmse)` on `ln(n)`.
    pub slope: f64,
}

/// Runs a study per sample size and fits the log-log slope of the RMSE.
/// The planted truth depends on the seed only, so every `n` shares it.
pub fn convergence_study(base: &SimConfig, n_values: &[usize], gcca: &GccaConfig) -> Result<ConvergenceReport> {
    let mut distinct = n_values.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InvalidParameter(
            "convergence study needs at least 3 distinct sample sizes".into(),
        ));
    }
    let mut points = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let config = SimConfig { n, ..base.clone() };
        let report = run_study(&config, gcca)?;
        points.push(ConvergencePoint {
            n,
            rmse: report.rmse(),
            report,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.rmse).collect();
    let slope = loglog_slope(&xs, &ys)?;
    Ok(ConvergenceReport { points, slope })
}

/// Ordinary least-squares slope of `ln(y)` against `ln(x)`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter("need at least two paired points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(
            "log-log regression needs positive finite values".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("sample sizes must differ".into()));
    }
    Ok(sxy / sxx)
}

/// One CSV row per report, recovery columns (percentages and means).
pub fn write_recovery_csv<W: Write>(out: W, reports: &[SimReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "setting",
        "n",
        "p",
        "q",
        "replicates",
        "pct_sensitivity_1",
        "mean_sensitivity",
        "pct_specificity_1",
        "mean_specificity",
        "pct_both_1",
        "mean_geometric",
        "attrition",
    ])?;
    for r in reports {
        w.write_record([
            r.config.label(),
            r.config.n.to_string(),
            r.config.p.to_string(),
            r.config.q.to_string(),
            r.config.replicates.to_string(),
            r.pct_sensitivity_1.to_string(),
            r.mean_sensitivity.to_string(),
            r.pct_specificity_1.to_string(),
            r.mean_specificity.to_string(),
            r.pct_both_1.to_string(),
            r.mean_geometric.to_string(),
            r.attrition.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One CSV row per report, estimation-error columns.
pub fn write_estimation_csv<W: Write>(out: W, reports: &[SimReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "setting",
        "n",
        "rho_c_pop",
        "mean_rho_hat",
        "bias_sq",
        "variance",
        "mse",
    ])?;
    for r in reports {
        w.write_record([
            r.config.label(),
            r.config.n.to_string(),
            r.rho_c_pop.to_string(),
            r.mean_rho_hat.to_string(),
            r.bias_sq.to_string(),
            r.variance.to_string(),
            r.mse.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Aligned text rendition of both tables.
pub fn format_tables(reports: &[SimReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Recovery");
    let _ = writeln!(s, "{:<32} {:>18} {:>18} {:>18}", "setting", "%Sensitivity=1", "%Specificity=1", "%Both=1");
    for r in reports {
        let _ = writeln!(
            s,
            "{:<32} {:>18} {:>18} {:>18}",
            r.config.label(),
            format!("{:.0}% ({:.3})", r.pct_sensitivity_1, r.mean_sensitivity),
            format!("{:.0}% ({:.3})", r.pct_specificity_1, r.mean_specificity),
            format!("{:.0}% ({:.3})", r.pct_both_1, r.mean_geometric),
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Canonical correlation error");
    let _ = writeln!(s, "{:<32} {:>12} {:>12} {:>12} {:>12}", "setting", "rho_c", "Bias^2", "Variance", "MSE");
    for r in reports {
        let _ = writeln!(
            s,
            "{:<32} {:>12.6} {:>12.3e} {:>12.3e} {:>12.3e}",
            r.config.label(),
            r.rho_c_pop,
            r.bias_sq,
            r.variance,
            r.mse
        );
    }
    s
}
