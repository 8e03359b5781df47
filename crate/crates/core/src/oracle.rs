//! Brute-force references for the greedy sweep and the canonical
//! correlation estimator. Everything here is deliberately naive and shares
//! no arithmetic with the production paths it checks.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{truncate, CorrelationGraph, StandardizedMatrix};
use crate::error::{Error, Result};
use crate::extraction;

/// Largest side accepted by [`exhaustive_best_biclique`].
pub const MAX_EXHAUSTIVE_SIDE: usize = 12;

/// Largest index set accepted by [`naive_eq5`].
pub const MAX_NAIVE_SET: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_u: Vec<usize>,
    pub best_v: Vec<usize>,
    pub best_score: f64,
    pub enumerated: u64,
}

fn mask_to_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask & (1 << b) != 0).collect()
}

/// Enumerates every nonempty `(u, v)` and returns the single block with the
/// largest penalized objective. Ties go to the smaller area, then to the
/// lexicographically smaller `(u, v)`.
pub fn exhaustive_best_biclique(graph: &CorrelationGraph, lambda: f64) -> Result<OracleResult> {
    let (p, q) = (graph.p(), graph.q());
    if p > MAX_EXHAUSTIVE_SIDE || q > MAX_EXHAUSTIVE_SIDE || p == 0 || q == 0 {
        return Err(Error::InstanceTooLarge {
            p,
            q,
            limit: MAX_EXHAUSTIVE_SIDE,
        });
    }
    if !(0.5..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    let rt = graph.r_trunc();
    let col_masks = 1u32 << q;
    let mut col_sums = vec![0.0; q];
    let mut subset_sum = vec![0.0; col_masks as usize];

    let mut best: Option<(f64, usize, Vec<usize>, Vec<usize>)> = None;
    let mut enumerated = 0u64;
    for umask in 1u32..(1 << p) {
        let u = mask_to_indices(umask);
        for (j, s) in col_sums.iter_mut().enumerate() {
            *s = u.iter().map(|&i| rt[[i, j]]).sum();
        }
        for vmask in 1..col_masks {
            let low = vmask.trailing_zeros() as usize;
            subset_sum[vmask as usize] = subset_sum[(vmask & (vmask - 1)) as usize] + col_sums[low];
            let area = u.len() * vmask.count_ones() as usize;
            let score = subset_sum[vmask as usize] / (area as f64).powf(lambda);
            enumerated += 1;
            let better = match &best {
                None => true,
                Some((bs, ba, bu, bv)) => {
                    if score != *bs {
                        score > *bs
                    } else if area != *ba {
                        area < *ba
                    } else {
                        let v = mask_to_indices(vmask);
                        (&u, &v) < (bu, bv)
                    }
                }
            };
            if better {
                best = Some((score, area, u.clone(), mask_to_indices(vmask)));
            }
        }
    }
    let (best_score, _, best_u, best_v) = best.expect("nonempty instance");
    Ok(OracleResult {
        best_u,
        best_v,
        best_score,
        enumerated,
    })
}

/// One-sided Jacobi SVD of an `m x k` matrix with `m >= k`. Returns singular
/// values with the matching left (`m x k`) and right (`k x k`) vectors.
fn jacobi_svd(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>, Array2<f64>)> {
    let (m, k) = a.dim();
    let mut u = a.clone();
    let mut v = Array2::<f64>::eye(k);
    let mut converged = false;
    for _sweep in 0..200 {
        let mut off = 0.0_f64;
        for p in 0..k {
            for q in p + 1..k {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    alpha += u[[i, p]] * u[[i, p]];
                    beta += u[[i, q]] * u[[i, q]];
                    gamma += u[[i, p]] * u[[i, q]];
                }
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let rel = gamma.abs() / (alpha * beta).sqrt();
                if rel <= 1e-15 {
                    continue;
                }
                off = off.max(rel);
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (u[[i, p]], u[[i, q]]);
                    u[[i, p]] = c * x - s * y;
                    u[[i, q]] = s * x + c * y;
                }
                for i in 0..k {
                    let (x, y) = (v[[i, p]], v[[i, q]]);
                    v[[i, p]] = c * x - s * y;
                    v[[i, q]] = s * x + c * y;
                }
            }
        }
        if off <= 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdFailure);
    }
    let mut sigma = vec![0.0; k];
    for j in 0..k {
        let norm = (0..m).map(|i| u[[i, j]] * u[[i, j]]).sum::<f64>().sqrt();
        sigma[j] = norm;
        if norm > 0.0 {
            for i in 0..m {
                u[[i, j]] /= norm;
            }
        }
    }
    Ok((sigma, u, v))
}

/// Leading singular triple `(σ, u, v)` of any dense matrix via Jacobi.
pub fn leading_singular_triple(m: &Array2<f64>) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (rows, cols) = m.dim();
    let transpose = rows < cols;
    let work = if transpose { m.t().to_owned() } else { m.clone() };
    let (sigma, u, v) = jacobi_svd(&work)?;
    let k = (0..sigma.len()).fold(0, |b, j| if sigma[j] > sigma[b] { j } else { b });
    let left: Vec<f64> = u.column(k).to_vec();
    let right: Vec<f64> = v.column(k).to_vec();
    Ok(if transpose {
        (sigma[k], right, left)
    } else {
        (sigma[k], left, right)
    })
}

/// Canonical correlation of the selected columns recomputed with explicit
/// loops and the Jacobi SVD above.
pub fn naive_eq5(x: &StandardizedMatrix, y: &StandardizedMatrix, i_x: &[usize], i_y: &[usize]) -> Result<f64> {
    if i_x.is_empty() || i_y.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    if i_x.len() > MAX_NAIVE_SET || i_y.len() > MAX_NAIVE_SET {
        return Err(Error::InstanceTooLarge {
            p: i_x.len(),
            q: i_y.len(),
            limit: MAX_NAIVE_SET,
        });
    }
    if x.nrows() != y.nrows() {
        return Err(Error::RowCountMismatch {
            left: x.nrows(),
            right: y.nrows(),
        });
    }
    let (xv, yv) = (x.values(), y.values());
    let n = xv.nrows();
    let cross = |a: &dyn Fn(usize) -> f64, b: &dyn Fn(usize) -> f64| (0..n).map(|s| a(s) * b(s)).sum::<f64>();

    let mut m = Array2::zeros((i_x.len(), i_y.len()));
    for (a, &i) in i_x.iter().enumerate() {
        for (b, &j) in i_y.iter().enumerate() {
            m[[a, b]] = cross(&|s| xv[[s, i]], &|s| yv[[s, j]]);
        }
    }
    let (_, a_vec, b_vec) = leading_singular_triple(&m)?;

    let mut num = 0.0;
    for a in 0..i_x.len() {
        for b in 0..i_y.len() {
            num += a_vec[a] * m[[a, b]] * b_vec[b];
        }
    }
    let quad = |vals: &ndarray::ArrayView2<f64>, idx: &[usize], w: &[f64]| {
        let mut total = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for (b, &k) in idx.iter().enumerate() {
                total += w[a] * w[b] * cross(&|s| vals[[s, i]], &|s| vals[[s, k]]);
            }
        }
        total
    };
    let qa = quad(&xv, i_x, &a_vec);
    let qb = quad(&yv, i_y, &b_vec);
    if qa <= 1e-14 || qb <= 1e-14 {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / (qa * qb).sqrt())
}

/// Truncation threshold used by the generated oracle instances.
pub const INSTANCE_EPSILON: f64 = 0.1;

/// A planted block with weights in `[0.6, 0.9]` in an otherwise sparse
/// matrix. About a third of the off-block cells carry weights in
/// `(ε, 0.6 / separation)`; the rest fall below `ε`. Signs are random.
pub fn planted_instance(seed: u64, p: usize, q: usize, separation: f64) -> (CorrelationGraph, Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.random_range(2..=(p / 2).max(2));
    let cols = rng.random_range(2..=(q / 2).max(2));
    let mut u = rand::seq::index::sample(&mut rng, p, rows).into_vec();
    let mut v = rand::seq::index::sample(&mut rng, q, cols).into_vec();
    u.sort_unstable();
    v.sort_unstable();
    let noise_hi = 0.6 / separation;
    let mut r = Array2::zeros((p, q));
    for i in 0..p {
        for j in 0..q {
            let magnitude = if u.binary_search(&i).is_ok() && v.binary_search(&j).is_ok() {
                rng.random_range(0.6..=0.9)
            } else if rng.random_bool(0.3) && noise_hi > INSTANCE_EPSILON {
                rng.random_range(INSTANCE_EPSILON..noise_hi).max(INSTANCE_EPSILON + 1e-9)
            } else {
                rng.random_range(0.0..INSTANCE_EPSILON)
            };
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            r[[i, j]] = sign * magnitude;
        }
    }
    let graph = truncate(r, INSTANCE_EPSILON).expect("valid epsilon");
    (graph, u, v)
}

/// 5 x 4 instance with a 2 x 2 block on rows {0, 1} x columns {0, 1}. The
/// exclusion sweep reaches the block after five exclusions (time 6), which
/// is also where the objective peaks for every lambda in `[0.5, 0.9]`.
pub fn golden_instance() -> CorrelationGraph {
    let r = ndarray::array![
        [0.80, 0.70, 0.00, 0.10],
        [0.75, 0.90, 0.10, 0.00],
        [0.30, 0.00, 0.25, 0.00],
        [0.00, 0.10, 0.00, 0.35],
        [0.10, 0.00, 0.22, 0.00]
    ];
    truncate(r, 0.2).expect("valid epsilon")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub instances: usize,
    pub agreements: usize,
    pub lambda: f64,
    pub golden_time: usize,
    pub golden_matches: bool,
}

impl AgreementSummary {
    pub fn rate(&self) -> f64 {
        self.agreements as f64 / self.instances.max(1) as f64
    }
}

/// Greedy vs exhaustive search on `instances` separated 8 x 8 planted
/// instances, plus the 5 x 4 golden instance.
pub fn agreement_suite(instances: usize, seed: u64, lambda: f64) -> Result<AgreementSummary> {
    let mut agreements = 0;
    for k in 0..instances {
        let (graph, _, _) = planted_instance(seed.wrapping_add(k as u64), 8, 8, 3.0);
        if greedy_matches_oracle(&graph, lambda)? {
            agreements += 1;
        }
    }
    let golden = golden_instance();
    let (b, t) = extraction::extract_one(&golden, &[0, 1, 2, 3, 4], &[0, 1, 2, 3], lambda)?;
    let oracle = exhaustive_best_biclique(&golden, lambda)?;
    let golden_matches =
        b.u == [0, 1] && b.v == [0, 1] && t.argmax_time == 6 && oracle.best_u == b.u && oracle.best_v == b.v;
    Ok(AgreementSummary {
        instances,
        agreements,
        lambda,
        golden_time: t.argmax_time,
        golden_matches,
    })
}

/// Whether a single greedy sweep from the full matrix lands on the
/// exhaustive optimum.
pub fn greedy_matches_oracle(graph: &CorrelationGraph, lambda: f64) -> Result<bool> {
    let rows: Vec<usize> = (0..graph.p()).collect();
    let cols: Vec<usize> = (0..graph.q()).collect();
    let (b, _) = extraction::extract_one(graph, &rows, &cols, lambda)?;
    let o = exhaustive_best_biclique(graph, lambda)?;
    Ok(b.u == o.best_u && b.v == o.best_v)
}
