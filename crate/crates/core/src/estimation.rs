//! First canonical pair on the selected variables and the end-to-end fit.

use std::io::Write;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{self, RawMatrix, StandardizedMatrix, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::extraction::{BicliqueSet, BicliqueSetReport, DEFAULT_MAX_SUBGRAPHS};
use crate::tuning::{self, KlScore};

/// Quadratic forms at or below this are treated as a degenerate projection.
pub const MIN_QUADRATIC_FORM: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GccaConfig {
    pub epsilon: f64,
    pub lambdas: Vec<f64>,
    pub max_subgraphs: usize,
    pub min_block_mean: f64,
}

impl Default for GccaConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            lambdas: tuning::default_lambda_grid(),
            max_subgraphs: DEFAULT_MAX_SUBGRAPHS,
            min_block_mean: DEFAULT_EPSILON,
        }
    }
}

/// Mean signed correlation over one row block x column block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSign {
    pub row_block: usize,
    pub col_block: usize,
    pub mean_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GccaFit {
    pub p: usize,
    pub q: usize,
    pub epsilon: f64,
    pub lambda_star: f64,
    pub i_x: Vec<usize>,
    pub i_y: Vec<usize>,
    pub a_hat: Vec<f64>,
    pub b_hat: Vec<f64>,
    pub rho_hat: f64,
    pub subgraphs: BicliqueSet,
    pub block_signs: Vec<BlockSign>,
    pub diagnostics: Vec<KlScore>,
}

/// Leading left/right singular vectors of `X[:, i_x]ᵀ Y[:, i_y]`.
///
/// Signs: the largest-magnitude entry of `a` is positive (first such entry on
/// ties) and `b` follows so that `aᵀ M b` equals the leading singular value.
pub fn canonical_vectors(
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    i_x: &[usize],
    i_y: &[usize],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x0, y0) = submatrices(x, y, i_x, i_y)?;
    let m = x0.t().dot(&y0);
    leading_singular_pair(m.view())
}

pub(crate) fn leading_singular_pair(m: ArrayView2<'_, f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let (rows, cols) = m.dim();
    let dm = DMatrix::from_fn(rows, cols, |i, j| m[[i, j]]);
    let svd = nalgebra::SVD::try_new(dm, true, true, f64::EPSILON, 10_000).ok_or(Error::SvdFailure)?;
    let (u, vt) = match (svd.u.as_ref(), svd.v_t.as_ref()) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::SvdFailure),
    };
    if svd.singular_values.iter().any(|s| !s.is_finite()) {
        return Err(Error::SvdFailure);
    }
    let k = svd.singular_values.argmax().0;
    let mut a: Vec<f64> = u.column(k).iter().copied().collect();
    let mut b: Vec<f64> = vt.row(k).iter().copied().collect();
    let lead = a
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if v.abs() > a[best].abs() { i } else { best });
    if a[lead] < 0.0 {
        a.iter_mut().for_each(|v| *v = -*v);
        b.iter_mut().for_each(|v| *v = -*v);
    }
    Ok((a, b))
}

/// `aᵀX₀ᵀY₀b / sqrt((aᵀX₀ᵀX₀a)(bᵀY₀ᵀY₀b))` on the selected columns.
pub fn canonical_correlation(
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    i_x: &[usize],
    i_y: &[usize],
    a_hat: &[f64],
    b_hat: &[f64],
) -> Result<f64> {
    if a_hat.len() != i_x.len() || b_hat.len() != i_y.len() {
        return Err(Error::InvalidParameter(format!(
            "vector lengths ({}, {}) do not match index sets ({}, {})",
            a_hat.len(),
            b_hat.len(),
            i_x.len(),
            i_y.len()
        )));
    }
    let (x0, y0) = submatrices(x, y, i_x, i_y)?;
    let xa = x0.dot(&Array1::from(a_hat.to_vec()));
    let yb = y0.dot(&Array1::from(b_hat.to_vec()));
    let qa = xa.dot(&xa);
    let qb = yb.dot(&yb);
    if qa <= MIN_QUADRATIC_FORM || qb <= MIN_QUADRATIC_FORM {
        return Err(Error::ZeroDenominator);
    }
    Ok(xa.dot(&yb) / (qa * qb).sqrt())
}

fn submatrices(
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    i_x: &[usize],
    i_y: &[usize],
) -> Result<(Array2<f64>, Array2<f64>)> {
    if i_x.is_empty() || i_y.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    if x.nrows() != y.nrows() {
        return Err(Error::RowCountMismatch {
            left: x.nrows(),
            right: y.nrows(),
        });
    }
    Ok((x.select_columns(i_x)?, y.select_columns(i_y)?))
}

/// Mean of signed `R` over every `(U_c, V_d)` pair of extracted blocks.
pub fn block_signs(r: ArrayView2<'_, f64>, bset: &BicliqueSet) -> Vec<BlockSign> {
    let mut out = Vec::with_capacity(bset.subgraphs.len().pow(2));
    for (c, bu) in bset.subgraphs.iter().enumerate() {
        for (d, bv) in bset.subgraphs.iter().enumerate() {
            let sum: f64 = bu
                .u
                .iter()
                .map(|&i| bv.v.iter().map(|&j| r[[i, j]]).sum::<f64>())
                .sum();
            out.push(BlockSign {
                row_block: c,
                col_block: d,
                mean_r: sum / (bu.u.len() * bv.v.len()) as f64,
            });
        }
    }
    out
}

/// Full pipeline from raw matrices.
pub fn fit(x: &RawMatrix, y: &RawMatrix, config: &GccaConfig) -> Result<GccaFit> {
    if x.nrows() != y.nrows() {
        return Err(Error::RowCountMismatch {
            left: x.nrows(),
            right: y.nrows(),
        });
    }
    let xs = data::standardize(x)?;
    let ys = data::standardize(y)?;
    fit_standardized(&xs, &ys, config)
}

pub fn fit_standardized(
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    config: &GccaConfig,
) -> Result<GccaFit> {
    let r = data::cross_correlation(x, y)?;
    let graph = data::truncate(r, config.epsilon)?;
    let selection = tuning::select_lambda(
        &graph,
        &config.lambdas,
        config.max_subgraphs,
        config.min_block_mean,
    )?;
    let bset = selection.best.biclique_set.clone();
    let (a_hat, b_hat) = canonical_vectors(x, y, &bset.i_x, &bset.i_y)?;
    let rho_hat = canonical_correlation(x, y, &bset.i_x, &bset.i_y, &a_hat, &b_hat)?;
    let block_signs = block_signs(graph.r(), &bset);
    Ok(GccaFit {
        p: graph.p(),
        q: graph.q(),
        epsilon: config.epsilon,
        lambda_star: selection.lambda_star,
        i_x: bset.i_x.clone(),
        i_y: bset.i_y.clone(),
        a_hat,
        b_hat,
        rho_hat,
        subgraphs: bset,
        block_signs,
        diagnostics: selection.all_scores,
    })
}

/// JSON view of a fit with variable names resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub p: usize,
    pub q: usize,
    pub epsilon: f64,
    pub lambda_star: f64,
    pub rho_hat: f64,
    pub i_x: Vec<usize>,
    pub i_y: Vec<usize>,
    pub i_x_names: Vec<String>,
    pub i_y_names: Vec<String>,
    pub a_hat: Vec<f64>,
    pub b_hat: Vec<f64>,
    pub subgraphs: BicliqueSetReport,
    pub block_signs: Vec<BlockSign>,
}

impl GccaFit {
    pub fn report(&self, x_names: &[String], y_names: &[String]) -> FitReport {
        FitReport {
            p: self.p,
            q: self.q,
            epsilon: self.epsilon,
            lambda_star: self.lambda_star,
            rho_hat: self.rho_hat,
            i_x: self.i_x.clone(),
            i_y: self.i_y.clone(),
            i_x_names: self.i_x.iter().map(|&i| x_names[i].clone()).collect(),
            i_y_names: self.i_y.iter().map(|&j| y_names[j].clone()).collect(),
            a_hat: self.a_hat.clone(),
            b_hat: self.b_hat.clone(),
            subgraphs: self.subgraphs.report(Some(x_names), Some(y_names)),
            block_signs: self.block_signs.clone(),
        }
    }
}

/// Correlation submatrix over the selected variables, rows and columns
/// grouped by block, one CSV line per cell:
/// `row_name,col_name,r,in_subgraph,block_id`.
pub fn write_heatmap_csv<W: Write>(
    out: W,
    r: ArrayView2<'_, f64>,
    bset: &BicliqueSet,
    x_names: &[String],
    y_names: &[String],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row_name", "col_name", "r", "in_subgraph", "block_id"])?;
    for (c, bu) in bset.subgraphs.iter().enumerate() {
        for &i in &bu.u {
            for (d, bv) in bset.subgraphs.iter().enumerate() {
                for &j in &bv.v {
                    let inside = c == d;
                    w.write_record([
                        x_names[i].as_str(),
                        y_names[j].as_str(),
                        &r[[i, j]].to_string(),
                        if inside { "true" } else { "false" },
                        &if inside { c.to_string() } else { String::new() },
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
