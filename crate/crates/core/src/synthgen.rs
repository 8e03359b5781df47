//! Synthetic Gaussian data with one planted cross-correlation biclique.
//!
//! A single latent factor `Z ~ N(0, 1)` drives the planted variables:
//! `X_i = α_i Z + sqrt(1 − α_i²) e_i` on `I_X`, `Y_j = β_j Z + sqrt(1 − β_j²) f_j`
//! on `I_Y`, and every other variable is pure noise. The joint covariance is
//! therefore positive semidefinite with unit variances, `Corr(X_i, Y_j) = α_i β_j`
//! on the block and zero elsewhere. Within-set correlations `α_i α_k` (and
//! `β_j β_l`) are a by-product of this construction.

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{RawMatrix, MIN_ROWS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub block_rows: usize,
    pub block_cols: usize,
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub seed: u64,
    pub replicates: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n < MIN_ROWS {
            return bad(format!("n must be at least {MIN_ROWS}, got {}", self.n));
        }
        if !(self.rho_lo > 0.0 && self.rho_lo <= self.rho_hi && self.rho_hi < 1.0) {
            return bad(format!(
                "need 0 < rho_lo <= rho_hi < 1, got [{}, {}]",
                self.rho_lo, self.rho_hi
            ));
        }
        if self.block_rows == 0 || self.block_rows > self.p {
            return bad(format!("block_rows {} not in 1..={}", self.block_rows, self.p));
        }
        if self.block_cols == 0 || self.block_cols > self.q {
            return bad(format!("block_cols {} not in 1..={}", self.block_cols, self.q));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        Ok(())
    }

    /// Short label such as `(20,30) rho in [0.3,0.4]`.
    pub fn label(&self) -> String {
        format!(
            "({},{}) rho in [{},{}]",
            self.block_rows, self.block_cols, self.rho_lo, self.rho_hi
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub p: usize,
    pub q: usize,
    pub i_x: Vec<usize>,
    pub i_y: Vec<usize>,
    /// Factor loadings on `i_x`, in the same order.
    pub alpha: Vec<f64>,
    /// Factor loadings on `i_y`, in the same order.
    pub beta: Vec<f64>,
    /// Population `Corr(X_i, Y_j)` on `i_x ⊗ i_y`.
    pub sigma_xy_block: Array2<f64>,
    /// Population analog of the normalized canonical correlation estimator.
    pub rho_c_pop: f64,
}

/// Stream reserved for the truth draw; replicate `k` uses stream `k + 1`.
const TRUTH_STREAM: u64 = 0;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn build_truth(config: &SimConfig) -> Result<PlantedTruth> {
    config.validate()?;
    let mut rng = rng_for(config.seed, TRUTH_STREAM);
    let mut i_x = sample_indices(&mut rng, config.p, config.block_rows).into_vec();
    let mut i_y = sample_indices(&mut rng, config.q, config.block_cols).into_vec();
    i_x.sort_unstable();
    i_y.sort_unstable();

    let (lo, hi) = (config.rho_lo.sqrt(), config.rho_hi.sqrt());
    let loading = |rng: &mut ChaCha8Rng| {
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        }
    };
    let alpha: Vec<f64> = (0..i_x.len()).map(|_| loading(&mut rng)).collect();
    let beta: Vec<f64> = (0..i_y.len()).map(|_| loading(&mut rng)).collect();

    // Clamp absorbs the last-ulp error of sqrt(ρ)².
    let sigma_xy_block = Array2::from_shape_fn((alpha.len(), beta.len()), |(i, j)| {
        (alpha[i] * beta[j]).clamp(config.rho_lo, config.rho_hi)
    });
    let rho_c_pop = population_canonical_correlation(&alpha, &beta, &sigma_xy_block)?;

    Ok(PlantedTruth {
        p: config.p,
        q: config.q,
        i_x,
        i_y,
        alpha,
        beta,
        sigma_xy_block,
        rho_c_pop,
    })
}

/// Leading singular pair `(a, b)` of `Σ_X0Y0`, then
/// `aᵀΣ_X0Y0 b / sqrt(aᵀΣ_X0 a · bᵀΣ_Y0 b)` under the factor-model covariances.
fn population_canonical_correlation(alpha: &[f64], beta: &[f64], sigma_xy: &Array2<f64>) -> Result<f64> {
    let (p0, q0) = sigma_xy.dim();
    let m = DMatrix::from_fn(p0, q0, |i, j| sigma_xy[[i, j]]);
    let svd = nalgebra::SVD::try_new(m.clone(), true, true, f64::EPSILON, 10_000).ok_or(Error::SvdFailure)?;
    let k = svd.singular_values.argmax().0;
    let a = svd.u.as_ref().ok_or(Error::SvdFailure)?.column(k).into_owned();
    let b = svd.v_t.as_ref().ok_or(Error::SvdFailure)?.row(k).transpose();

    let factor_cov = |load: &[f64]| {
        DMatrix::from_fn(load.len(), load.len(), |i, j| {
            if i == j {
                1.0
            } else {
                load[i] * load[j]
            }
        })
    };
    let sx = factor_cov(alpha);
    let sy = factor_cov(beta);
    let num = (a.transpose() * &m * &b)[(0, 0)];
    let qa = (a.transpose() * &sx * &a)[(0, 0)];
    let qb = (b.transpose() * &sy * &b)[(0, 0)];
    Ok(num.abs() / (qa * qb).sqrt())
}

/// Draws the `replicate`-th data set. The stream depends only on
/// `(config.seed, replicate)`, so replicates can be generated in any order.
pub fn sample(truth: &PlantedTruth, config: &SimConfig, replicate: usize) -> Result<(RawMatrix, RawMatrix)> {
    config.validate()?;
    if replicate >= config.replicates {
        return Err(Error::InvalidParameter(format!(
            "replicate {replicate} out of range for {} replicates",
            config.replicates
        )));
    }
    if truth.p != config.p || truth.q != config.q {
        return Err(Error::InvalidParameter("truth and config dimensions differ".into()));
    }
    let mut x_load = vec![0.0; config.p];
    let mut y_load = vec![0.0; config.q];
    for (&i, &a) in truth.i_x.iter().zip(&truth.alpha) {
        x_load[i] = a;
    }
    for (&j, &b) in truth.i_y.iter().zip(&truth.beta) {
        y_load[j] = b;
    }
    let x_noise: Vec<f64> = x_load.iter().map(|a| (1.0 - a * a).sqrt()).collect();
    let y_noise: Vec<f64> = y_load.iter().map(|b| (1.0 - b * b).sqrt()).collect();

    let mut rng = rng_for(config.seed, replicate as u64 + 1);
    let mut x = Array2::zeros((config.n, config.p));
    let mut y = Array2::zeros((config.n, config.q));
    for s in 0..config.n {
        let z: f64 = rng.sample(StandardNormal);
        for i in 0..config.p {
            let e: f64 = rng.sample(StandardNormal);
            x[[s, i]] = x_load[i] * z + x_noise[i] * e;
        }
        for j in 0..config.q {
            let e: f64 = rng.sample(StandardNormal);
            y[[s, j]] = y_load[j] * z + y_noise[j] * e;
        }
    }
    Ok((RawMatrix::with_prefix(x, "x")?, RawMatrix::with_prefix(y, "y")?))
}

/// Dense population covariance of `(X, Y)` under the factor model. Only
/// meant for small instances (tests, PSD checks).
pub fn population_covariance(truth: &PlantedTruth) -> Array2<f64> {
    let d = truth.p + truth.q;
    let mut load = vec![0.0; d];
    for (&i, &a) in truth.i_x.iter().zip(&truth.alpha) {
        load[i] = a;
    }
    for (&j, &b) in truth.i_y.iter().zip(&truth.beta) {
        load[truth.p + j] = b;
    }
    Array2::from_shape_fn((d, d), |(i, j)| if i == j { 1.0 } else { load[i] * load[j] })
}
