use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gcca::data::{self, RawMatrix};
use gcca::metrics::{self, ConvergenceReport};
use gcca::{estimation, oracle, synthgen, tuning, SimConfig};
use serde::Serialize;

use crate::config::{Emit, RunConfig};
use crate::CliError;

/// Written next to every output so a run can be repeated exactly.
#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    inputs: Vec<String>,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    extra: Option<T>,
}

fn write_manifest<T: Serialize>(
    rc: &RunConfig,
    command: &'static str,
    inputs: Vec<String>,
    extra: Option<T>,
) -> Result<(), CliError> {
    let m = Manifest {
        tool: "gcca",
        version: gcca::VERSION,
        command,
        seed: rc.seed,
        inputs,
        config: rc,
        extra,
    };
    write_json(&rc.output_dir.join("manifest.json"), &m)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(gcca::Error::from)?;
    writeln!(w).and_then(|_| w.flush()).map_err(gcca::Error::from)?;
    Ok(())
}

fn prepare_output(rc: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&rc.output_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", rc.output_dir.display())))
}

fn read_input(path: &Path) -> Result<RawMatrix, CliError> {
    data::read_csv(path).map_err(|e| CliError::from_core(e, Some(path)))
}

pub fn cmd_fit(x_csv: &Path, y_csv: &Path, rc: &RunConfig) -> Result<(), CliError> {
    let x = read_input(x_csv)?;
    let y = read_input(y_csv)?;
    if x.nrows() != y.nrows() {
        return Err(CliError::Data(format!(
            "row count mismatch: {} has {} rows but {} has {} rows",
            x_csv.display(),
            x.nrows(),
            y_csv.display(),
            y.nrows()
        )));
    }
    let xs = data::standardize(&x).map_err(|e| CliError::from_core(e, Some(x_csv)))?;
    let ys = data::standardize(&y).map_err(|e| CliError::from_core(e, Some(y_csv)))?;
    let fit = estimation::fit_standardized(&xs, &ys, &rc.gcca()).map_err(|e| CliError::from_core(e, None))?;

    prepare_output(rc)?;
    let (xn, yn) = (x.column_names(), y.column_names());
    if rc.emits(Emit::Json) {
        write_json(&rc.output_dir.join("fit.json"), &fit.report(xn, yn))?;
    }
    if rc.emits(Emit::Csv) {
        tuning::write_scores_csv(create(&rc.output_dir.join("lambda_scores.csv"))?, &fit.diagnostics)?;
        let r = data::cross_correlation(&xs, &ys)?;
        estimation::write_heatmap_csv(
            create(&rc.output_dir.join("heatmap.csv"))?,
            r.view(),
            &fit.subgraphs,
            xn,
            yn,
        )?;
    }
    write_manifest::<()>(
        rc,
        "fit",
        vec![x_csv.display().to_string(), y_csv.display().to_string()],
        None,
    )?;
    if rc.emits(Emit::Table) {
        print!("{}", fit_summary(&fit, xn, yn));
    }
    Ok(())
}

fn fit_summary(fit: &gcca::GccaFit, xn: &[String], yn: &[String]) -> String {
    let names = |idx: &[usize], all: &[String]| idx.iter().map(|&i| all[i].as_str()).collect::<Vec<_>>().join(" ");
    let mut s = String::new();
    s.push_str(&format!("{:<12} {}\n", "lambda*", fit.lambda_star));
    s.push_str(&format!("{:<12} {}\n", "|I_X|", fit.i_x.len()));
    s.push_str(&format!("{:<12} {}\n", "|I_Y|", fit.i_y.len()));
    s.push_str(&format!("{:<12} {:.6}\n", "rho_c", fit.rho_hat));
    s.push_str(&format!("{:<12} {}\n", "subgraphs", fit.subgraphs.subgraphs.len()));
    s.push_str(&format!("{:<12} {}\n", "I_X", names(&fit.i_x, xn)));
    s.push_str(&format!("{:<12} {}\n", "I_Y", names(&fit.i_y, yn)));
    s
}

#[derive(Serialize)]
struct SimExtra {
    simulation: SimConfig,
    convergence_n: Option<Vec<usize>>,
}

pub fn cmd_simulate(
    sim_path: &Path,
    sim: &SimConfig,
    rc: &RunConfig,
    convergence: Option<&[usize]>,
    emit_table: bool,
) -> Result<(), CliError> {
    let gcca = rc.gcca();
    let report = metrics::run_study(sim, &gcca).map_err(|e| CliError::from_core(e, None))?;
    let conv = match convergence {
        Some(ns) => Some(metrics::convergence_study(sim, ns, &gcca).map_err(|e| CliError::from_core(e, None))?),
        None => None,
    };

    prepare_output(rc)?;
    let reports = std::slice::from_ref(&report);
    if rc.emits(Emit::Json) {
        write_json(&rc.output_dir.join("sim_report.json"), &report)?;
        if let Some(c) = &conv {
            write_json(&rc.output_dir.join("convergence.json"), c)?;
        }
    }
    if rc.emits(Emit::Csv) {
        metrics::write_recovery_csv(create(&rc.output_dir.join("table2.csv"))?, reports)?;
        metrics::write_estimation_csv(create(&rc.output_dir.join("table3.csv"))?, reports)?;
        if let Some(c) = &conv {
            write_convergence_csv(&rc.output_dir.join("convergence.csv"), c)?;
        }
    }
    write_manifest(
        rc,
        "simulate",
        vec![sim_path.display().to_string()],
        Some(SimExtra {
            simulation: sim.clone(),
            convergence_n: convergence.map(<[usize]>::to_vec),
        }),
    )?;
    if emit_table || rc.emits(Emit::Table) {
        print!("{}", metrics::format_tables(reports));
        if let Some(c) = &conv {
            println!();
            println!("{:>8} {:>12}", "n", "RMSE");
            for p in &c.points {
                println!("{:>8} {:>12.4e}", p.n, p.rmse);
            }
            println!("log-log slope {:.4}", c.slope);
        }
    }
    Ok(())
}

fn write_convergence_csv(path: &Path, c: &ConvergenceReport) -> Result<(), CliError> {
    let mut w = create(path)?;
    let mut text = String::from("n,rmse,mse,bias_sq,variance,pct_both_1\n");
    for p in &c.points {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.n, p.rmse, p.report.mse, p.report.bias_sq, p.report.variance, p.report.pct_both_1
        ));
    }
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(gcca::Error::from)?;
    Ok(())
}

/// Writes one replicate of a planted design as `x.csv`, `y.csv` plus the
/// truth it was drawn from.
pub fn cmd_generate(sim: &SimConfig, replicate: usize, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let truth = synthgen::build_truth(sim).map_err(|e| CliError::from_core(e, None))?;
    let (x, y) = synthgen::sample(&truth, sim, replicate).map_err(|e| CliError::from_core(e, None))?;
    fs::create_dir_all(out).map_err(|e| CliError::Data(format!("cannot create {}: {e}", out.display())))?;
    let paths = vec![out.join("x.csv"), out.join("y.csv"), out.join("truth.json")];
    data::write_csv(&paths[0], &x)?;
    data::write_csv(&paths[1], &y)?;

    #[derive(Serialize)]
    struct TruthFile<'a> {
        version: &'static str,
        simulation: &'a SimConfig,
        replicate: usize,
        truth: &'a synthgen::PlantedTruth,
    }
    write_json(
        &paths[2],
        &TruthFile {
            version: gcca::VERSION,
            simulation: sim,
            replicate,
            truth: &truth,
        },
    )?;
    Ok(paths)
}

/// Returns whether the agreement suite met its bar.
pub fn cmd_oracle_check(instances: usize, seed: u64, lambda: f64, min_rate: f64) -> Result<bool, CliError> {
    let s = oracle::agreement_suite(instances, seed, lambda).map_err(|e| CliError::from_core(e, None))?;
    let ok = s.rate() >= min_rate && s.golden_matches;
    println!(
        "oracle agreement {}/{} at lambda {} ({})",
        s.agreements,
        s.instances,
        s.lambda,
        if s.rate() >= min_rate { "pass" } else { "FAIL" }
    );
    println!(
        "golden instance argmax t={} ({})",
        s.golden_time,
        if s.golden_matches { "pass" } else { "FAIL" }
    );
    Ok(ok)
}
