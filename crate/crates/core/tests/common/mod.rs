//! Independent reference computations and reusable checks shared by the
//! integration tests and the acceptance runner. Everything here recomputes
//! from first principles with plain loops.

#![allow(dead_code)]

use std::collections::BTreeSet;

use gcca::data::{self, standardize, truncate, RawMatrix};
use gcca::estimation::{canonical_correlation, canonical_vectors};
use gcca::extraction::{self, Biclique, BicliqueSet, ExclusionKind};
use gcca::metrics::score_sets;
use gcca::tuning::kl_divergence;
use gcca::{oracle, CorrelationGraph};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Gaussian matrix with a shared factor (so correlations are not all tiny)
/// and arbitrary per-column location and scale.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut m = Array2::zeros((n, p));
    for j in 0..p {
        let load: f64 = rng.random_range(-0.9..0.9);
        let scale: f64 = rng.random_range(0.1..10.0);
        let shift: f64 = rng.random_range(-5.0..5.0);
        for i in 0..n {
            let e: f64 = rng.sample(StandardNormal);
            m[[i, j]] = shift + scale * (load * z[i] + e);
        }
    }
    m
}

pub fn raw(values: Array2<f64>, prefix: &str) -> RawMatrix {
    RawMatrix::with_prefix(values, prefix).expect("valid raw matrix")
}

/// Two-pass Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for k in 0..a.len() {
        let da = a[k] - ma;
        let db = b[k] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    sab / (saa * sbb).sqrt()
}

/// Correlation-like matrix: with probability `density` an entry is an edge
/// with magnitude in `(eps, 1)`, otherwise its magnitude is at most `eps`.
/// Signs are random. With `grid`, magnitudes are multiples of 1/64 so that
/// floating-point sums over them are exact.
pub fn random_r(rng: &mut ChaCha8Rng, p: usize, q: usize, density: f64, eps: f64, grid: bool) -> Array2<f64> {
    Array2::from_shape_fn((p, q), |_| {
        let mag: f64 = if rng.random_bool(density) {
            rng.random_range(eps..1.0)
        } else {
            rng.random_range(0.0..=eps)
        };
        let mag = if grid {
            let k = (mag * 64.0).floor();
            // Keep edges strictly above eps after rounding down.
            if mag > eps && k / 64.0 <= eps {
                (k + 1.0) / 64.0
            } else {
                k / 64.0
            }
        } else {
            mag
        };
        if rng.random_bool(0.5) {
            mag
        } else {
            -mag
        }
    })
}

pub fn random_subset(rng: &mut ChaCha8Rng, n: usize, min: usize) -> Vec<usize> {
    loop {
        let s: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if s.len() >= min {
            return s;
        }
    }
}

/// Truncated weight straight from the raw correlation: `|r| I(|r| > eps)`.
pub fn weight(r: f64, eps: f64) -> f64 {
    if r.abs() > eps {
        r.abs()
    } else {
        0.0
    }
}

pub fn naive_objective(r: &Array2<f64>, eps: f64, u: &[usize], v: &[usize], lambda: f64) -> f64 {
    let mut sum = 0.0;
    for &i in u {
        for &j in v {
            sum += weight(r[[i, j]], eps);
        }
    }
    sum / ((u.len() * v.len()) as f64).powf(lambda)
}

/// Cell-by-cell evaluation of the divergence expression: each cell adds
/// `D π_k log(π_k/π) + (1 − D)(1 − π_k) log((1 − π_k)/(1 − π))` with
/// `0 log 0 = 0`. Returns `(pi0, pi1, pi, divergence)`.
pub fn naive_kl(r: &Array2<f64>, eps: f64, blocks: &[(Vec<usize>, Vec<usize>)]) -> (f64, f64, f64, f64) {
    let (p, q) = r.dim();
    let inside = |i: usize, j: usize| blocks.iter().any(|(u, v)| u.contains(&i) && v.contains(&j));
    let d = |i: usize, j: usize| if r[[i, j]].abs() > eps { 1.0 } else { 0.0 };
    let (mut n_in, mut e_in, mut n_out, mut e_out) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..p {
        for j in 0..q {
            if inside(i, j) {
                n_in += 1.0;
                e_in += d(i, j);
            } else {
                n_out += 1.0;
                e_out += d(i, j);
            }
        }
    }
    let pi = (e_in + e_out) / (n_in + n_out);
    let pi1 = if n_in > 0.0 { e_in / n_in } else { 0.0 };
    let pi0 = if n_out > 0.0 { e_out / n_out } else { 0.0 };
    let xlogy = |x: f64, a: f64, b: f64| if x == 0.0 || a == 0.0 { 0.0 } else { x * a * (a / b).ln() };
    let mut div = 0.0;
    for i in 0..p {
        for j in 0..q {
            let rate = if inside(i, j) { pi1 } else { pi0 };
            let dij = d(i, j);
            div += xlogy(dij, rate, pi) + xlogy(1.0 - dij, 1.0 - rate, 1.0 - pi);
        }
    }
    (pi0, pi1, pi, div)
}

/// Sensitivity and specificity by classifying every variable one at a time.
pub fn naive_sets(
    p: usize,
    q: usize,
    true_x: &[usize],
    true_y: &[usize],
    est_x: &[usize],
    est_y: &[usize],
) -> (f64, f64) {
    let (mut tp, mut fn_, mut tn, mut fp) = (0u32, 0u32, 0u32, 0u32);
    let mut tally = |truth: bool, est: bool| match (truth, est) {
        (true, true) => tp += 1,
        (true, false) => fn_ += 1,
        (false, false) => tn += 1,
        (false, true) => fp += 1,
    };
    for i in 0..p {
        tally(true_x.contains(&i), est_x.contains(&i));
    }
    for j in 0..q {
        tally(true_y.contains(&j), est_y.contains(&j));
    }
    let ratio = |a: u32, b: u32| if a + b == 0 { 1.0 } else { a as f64 / (a + b) as f64 };
    (ratio(tp, fn_), ratio(tn, fp))
}

/// Largest singular value of `m` by power iteration on `mᵀm`.
pub fn power_sigma(m: &Array2<f64>) -> f64 {
    let (_, c) = m.dim();
    let mtm = m.t().dot(m);
    let mut v = vec![1.0; c];
    for (k, x) in v.iter_mut().enumerate() {
        *x += 0.01 * k as f64;
    }
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let mut w = vec![0.0; c];
        for i in 0..c {
            for j in 0..c {
                w[i] += mtm[[i, j]] * v[j];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for x in w.iter_mut() {
            *x /= norm;
        }
        let prev = lambda;
        lambda = norm;
        v = w;
        if (lambda - prev).abs() <= 1e-15 * lambda {
            break;
        }
    }
    lambda.sqrt()
}

/// From-scratch replay of the exclusion sweep: means recomputed over the
/// active submatrix at every step.
pub struct NaiveSweep {
    pub moves: Vec<(ExclusionKind, usize)>,
    pub objectives: Vec<f64>,
    pub argmax: usize,
    pub u: Vec<usize>,
    pub v: Vec<usize>,
    /// Whether all active row means were pairwise distinct, and likewise
    /// for column means, at every step.
    pub tie_free: bool,
}

fn distinct(xs: &[f64]) -> bool {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2).all(|w| w[0] != w[1])
}

pub fn naive_sweep(rt: &Array2<f64>, rows: &[usize], cols: &[usize], lambda: f64) -> NaiveSweep {
    let mut live_r = rows.to_vec();
    let mut live_c = cols.to_vec();
    let state_obj = |r: &[usize], c: &[usize]| {
        let mut s = 0.0;
        for &i in r {
            for &j in c {
                s += rt[[i, j]];
            }
        }
        s / ((r.len() * c.len()) as f64).powf(lambda)
    };
    let mut objectives = vec![state_obj(&live_r, &live_c)];
    let mut moves = Vec::new();
    let mut tie_free = true;
    while live_r.len() > 1 && live_c.len() > 1 {
        let rm: Vec<f64> = live_r
            .iter()
            .map(|&i| live_c.iter().map(|&j| rt[[i, j]]).sum::<f64>() / live_c.len() as f64)
            .collect();
        let cm: Vec<f64> = live_c
            .iter()
            .map(|&j| live_r.iter().map(|&i| rt[[i, j]]).sum::<f64>() / live_r.len() as f64)
            .collect();
        tie_free &= distinct(&rm) && distinct(&cm);
        let argmin = |m: &[f64], live: &[usize]| {
            let mut best = 0;
            for k in 1..m.len() {
                if m[k] < m[best] || (m[k] == m[best] && live[k] < live[best]) {
                    best = k;
                }
            }
            best
        };
        let t = argmin(&rm, &live_r);
        let f = argmin(&cm, &live_c);
        if rm[t] > cm[f] {
            moves.push((ExclusionKind::Column, live_c.remove(f)));
        } else {
            moves.push((ExclusionKind::Row, live_r.remove(t)));
        }
        objectives.push(state_obj(&live_r, &live_c));
    }
    let mut argmax = 0;
    for (k, &f) in objectives.iter().enumerate() {
        if f >= objectives[argmax] {
            argmax = k;
        }
    }
    let mut u = rows.to_vec();
    let mut v = cols.to_vec();
    for &(kind, idx) in &moves[..argmax] {
        match kind {
            ExclusionKind::Row => u.retain(|&i| i != idx),
            ExclusionKind::Column => v.retain(|&j| j != idx),
        }
    }
    u.sort_unstable();
    v.sort_unstable();
    NaiveSweep {
        moves,
        objectives,
        argmax,
        u,
        v,
        tie_free,
    }
}

pub fn all(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub fn blocks_of(bset: &BicliqueSet) -> Vec<(Vec<usize>, Vec<usize>)> {
    bset.subgraphs.iter().map(|b| (b.u.clone(), b.v.clone())).collect()
}

/// Hand-assembled single-block set, for scoring arbitrary bicliques.
pub fn single_block_set(u: Vec<usize>, v: Vec<usize>, lambda: f64) -> BicliqueSet {
    BicliqueSet {
        lambda,
        subgraphs: vec![Biclique {
            u: u.clone(),
            v: v.clone(),
            score: 0.0,
            block_mean: 0.0,
            lambda,
        }],
        trajectories: Vec::new(),
        i_x: u,
        i_y: v,
    }
}

// ---------------------------------------------------------------------------
// Formula checks, one randomized instance per call.

pub fn check_pearson(seed: u64) -> Check {
    let mut rng = rng(seed);
    let x = random_matrix(&mut rng, 10, 3);
    let y = random_matrix(&mut rng, 10, 4);
    let r = data::cross_correlation(&standardize(&raw(x.clone(), "x")).unwrap(), &standardize(&raw(y.clone(), "y")).unwrap())
        .map_err(|e| e.to_string())?;
    for i in 0..3 {
        for j in 0..4 {
            let a: Vec<f64> = x.column(i).to_vec();
            let b: Vec<f64> = y.column(j).to_vec();
            let want = pearson(&a, &b);
            ensure((r[[i, j]] - want).abs() <= 1e-12, || {
                format!("seed {seed}: R[{i},{j}] = {} vs Pearson {want}", r[[i, j]])
            })?;
        }
    }
    Ok(())
}

pub fn check_objective(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (p, q) = (rng.random_range(2..=8), rng.random_range(2..=8));
    let eps = rng.random_range(0.05..0.5);
    let r = random_r(&mut rng, p, q, 0.5, eps, false);
    let g = truncate(r.clone(), eps).map_err(|e| e.to_string())?;
    let u = random_subset(&mut rng, p, 1);
    let v = random_subset(&mut rng, q, 1);
    let lambda = rng.random_range(0.5..=1.0);
    let got = extraction::objective(&g, &u, &v, lambda).map_err(|e| e.to_string())?;
    let want = naive_objective(&r, eps, &u, &v, lambda);
    ensure(close(got, want, 1e-12), || format!("seed {seed}: objective {got} vs {want}"))
}

pub fn check_kl(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (p, q) = (rng.random_range(3..=10), rng.random_range(3..=10));
    let eps = 0.2;
    let density = rng.random_range(0.1..0.9);
    let r = random_r(&mut rng, p, q, density, eps, false);
    let g = truncate(r.clone(), eps).map_err(|e| e.to_string())?;
    if g.edge_count() == 0 || g.edge_count() == p * q {
        return Ok(());
    }
    // Either a real extraction or a random disjoint pair of blocks.
    let bset = if rng.random_bool(0.5) {
        extraction::extract_all(&g, rng.random_range(0.5..=1.0), 3, 0.0).map_err(|e| e.to_string())?
    } else {
        let u = random_subset(&mut rng, p, 1);
        let v = random_subset(&mut rng, q, 1);
        single_block_set(u, v, 0.5)
    };
    let got = kl_divergence(&g, &bset).map_err(|e| e.to_string())?;
    let (pi0, pi1, pi, div) = naive_kl(&r, eps, &blocks_of(&bset));
    ensure(
        close(got.pi0, pi0, 1e-12) && close(got.pi1, pi1, 1e-12) && close(got.pi, pi, 1e-12),
        || format!("seed {seed}: rates ({}, {}, {}) vs ({pi0}, {pi1}, {pi})", got.pi0, got.pi1, got.pi),
    )?;
    ensure(got.divergence.is_finite() && close(got.divergence, div, 1e-12), || {
        format!("seed {seed}: divergence {} vs {div}", got.divergence)
    })
}

pub fn check_score_sets(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (p, q) = (rng.random_range(1..=12), rng.random_range(1..=12));
    let pick = |rng: &mut ChaCha8Rng, n: usize| -> Vec<usize> {
        let mut s: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.4)).collect();
        s.shuffle(rng);
        s.sort_unstable();
        s
    };
    let (tx, ty, ex, ey) = (pick(&mut rng, p), pick(&mut rng, q), pick(&mut rng, p), pick(&mut rng, q));
    let s = score_sets(p, q, &tx, &ty, &ex, &ey);
    let (sens, spec) = naive_sets(p, q, &tx, &ty, &ex, &ey);
    ensure(s.sensitivity == sens && s.specificity == spec, || {
        format!(
            "seed {seed}: ({}, {}) vs ({sens}, {spec})",
            s.sensitivity, s.specificity
        )
    })?;
    let exact = BTreeSet::from_iter(&tx) == BTreeSet::from_iter(&ex) && BTreeSet::from_iter(&ty) == BTreeSet::from_iter(&ey);
    ensure(s.exact_both == exact, || format!("seed {seed}: exact_both {}", s.exact_both))
}

pub fn check_canonical_correlation(seed: u64) -> Check {
    let mut rng = rng(seed);
    let n = rng.random_range(6..=30);
    let (p, q) = (rng.random_range(1..=8), rng.random_range(1..=8));
    let x = standardize(&raw(random_matrix(&mut rng, n, p), "x")).map_err(|e| e.to_string())?;
    let y = standardize(&raw(random_matrix(&mut rng, n, q), "y")).map_err(|e| e.to_string())?;
    let ix = random_subset(&mut rng, p, 1);
    let iy = random_subset(&mut rng, q, 1);
    let (a, b) = canonical_vectors(&x, &y, &ix, &iy).map_err(|e| e.to_string())?;
    let rho = canonical_correlation(&x, &y, &ix, &iy, &a, &b).map_err(|e| e.to_string())?;
    let want = oracle::naive_eq5(&x, &y, &ix, &iy).map_err(|e| e.to_string())?;
    ensure((rho - want).abs() <= 1e-8, || format!("seed {seed}: rho {rho} vs {want}"))?;
    ensure((-1e-12..=1.0 + 1e-9).contains(&rho), || format!("seed {seed}: rho {rho} out of range"))?;

    // Numerator equals the leading singular value of the cross block.
    let m = Array2::from_shape_fn((ix.len(), iy.len()), |(k, l)| {
        (0..n).map(|s| x.values()[[s, ix[k]]] * y.values()[[s, iy[l]]]).sum::<f64>()
    });
    let mut num = 0.0;
    for k in 0..ix.len() {
        for l in 0..iy.len() {
            num += a[k] * m[[k, l]] * b[l];
        }
    }
    let sigma = power_sigma(&m);
    ensure((num - sigma).abs() <= 1e-8, || format!("seed {seed}: aᵀMb {num} vs sigma {sigma}"))?;

    // Joint sign flip.
    let na: Vec<f64> = a.iter().map(|v| -v).collect();
    let nb: Vec<f64> = b.iter().map(|v| -v).collect();
    let flipped = canonical_correlation(&x, &y, &ix, &iy, &na, &nb).map_err(|e| e.to_string())?;
    ensure((flipped - rho).abs() <= 1e-12, || format!("seed {seed}: sign flip changed rho"))
}

// ---------------------------------------------------------------------------
// Invariant checks on given data.

/// Positive column rescaling and shifting leave the standardized matrix
/// unchanged to 1e-10.
pub fn check_scale_invariance(x: &Array2<f64>, scales: &[f64], shifts: &[f64]) -> Check {
    let base = standardize(&raw(x.clone(), "x")).map_err(|e| e.to_string())?;
    let mut moved = x.clone();
    for (j, mut col) in moved.columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|v| v * scales[j] + shifts[j]);
    }
    let other = standardize(&raw(moved, "x")).map_err(|e| e.to_string())?;
    let worst = base
        .values()
        .iter()
        .zip(other.values().iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 1e-10, || format!("standardize moved by {worst}"))?;
    let rxx = data::cross_correlation(&base, &base).map_err(|e| e.to_string())?;
    for k in 0..rxx.nrows() {
        ensure((rxx[[k, k]] - 1.0).abs() <= 1e-9, || format!("diag {k} = {}", rxx[[k, k]]))?;
    }
    Ok(())
}

pub fn check_subject_permutation(x: &Array2<f64>, y: &Array2<f64>, perm: &[usize]) -> Check {
    let r = |x: &Array2<f64>, y: &Array2<f64>| {
        data::cross_correlation(&standardize(&raw(x.clone(), "x")).unwrap(), &standardize(&raw(y.clone(), "y")).unwrap()).unwrap()
    };
    let px = x.select(ndarray::Axis(0), perm);
    let py = y.select(ndarray::Axis(0), perm);
    let a = r(x, y);
    let b = r(&px, &py);
    let worst = a.iter().zip(b.iter()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-12, || format!("row permutation moved R by {worst}"))
}

pub fn check_truncate_monotone(r: &Array2<f64>, e1: f64, e2: f64) -> Check {
    let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
    let a = truncate(r.clone(), lo).map_err(|e| e.to_string())?;
    let b = truncate(r.clone(), hi).map_err(|e| e.to_string())?;
    let ok = a.r_trunc().iter().zip(b.r_trunc().iter()).all(|(x, y)| x >= y);
    ensure(ok && a.edge_count() >= b.edge_count(), || format!("not monotone for eps {lo} < {hi}"))
}

/// Trajectory bookkeeping and recomputation for one sweep from the full sets.
pub fn check_trajectory(g: &CorrelationGraph, r: &Array2<f64>, lambda: f64) -> Check {
    let (p, q) = (g.p(), g.q());
    let (b, t) = extraction::extract_one(g, &all(p), &all(q), lambda).map_err(|e| e.to_string())?;
    let mut rows: BTreeSet<usize> = all(p).into_iter().collect();
    let mut cols: BTreeSet<usize> = all(q).into_iter().collect();
    let eps = g.epsilon();
    let first = naive_objective(r, eps, &all(p), &all(q), lambda);
    ensure(close(t.initial_objective, first, 1e-12), || {
        format!("initial objective {} vs {first}", t.initial_objective)
    })?;
    let mut best = first;
    for (k, step) in t.steps.iter().enumerate() {
        ensure(step.time == k + 2, || format!("step {k} has time {}", step.time))?;
        let removed = match step.kind {
            ExclusionKind::Row => rows.remove(&step.index),
            ExclusionKind::Column => cols.remove(&step.index),
        };
        ensure(removed, || format!("step {k} revisits {:?} {}", step.kind, step.index))?;
        let u: Vec<usize> = rows.iter().copied().collect();
        let v: Vec<usize> = cols.iter().copied().collect();
        let want = naive_objective(r, eps, &u, &v, lambda);
        ensure(close(step.objective, want, 1e-12), || {
            format!("step {k}: objective {} vs recomputed {want}", step.objective)
        })?;
        best = best.max(want);
    }
    ensure(rows.len() == 1 || cols.len() == 1, || format!("stopped at {}x{}", rows.len(), cols.len()))?;
    ensure(t.steps.len() <= p + q - 2, || format!("{} steps for {p}x{q}", t.steps.len()))?;
    ensure(b.score >= best - 1e-12 * best.abs(), || format!("returned {} < best state {best}", b.score))?;
    ensure(t.objective_at(t.argmax_time) == Some(b.score), || "argmax time disagrees with score".into())
}

/// Greedy output vs the naive from-scratch sweep. On grid-valued weights the
/// two must agree move for move.
pub fn check_against_naive_sweep(g: &CorrelationGraph, lambda: f64) -> Check {
    let (p, q) = (g.p(), g.q());
    let rt = g.r_trunc().to_owned();
    let naive = naive_sweep(&rt, &all(p), &all(q), lambda);
    let (b, t) = extraction::extract_one(g, &all(p), &all(q), lambda).map_err(|e| e.to_string())?;
    let moves: Vec<(ExclusionKind, usize)> = t.steps.iter().map(|s| (s.kind, s.index)).collect();
    ensure(moves == naive.moves, || format!("moves differ:\n{moves:?}\n{:?}", naive.moves))?;
    ensure(t.argmax_time == naive.argmax + 1, || {
        format!("argmax time {} vs naive {}", t.argmax_time, naive.argmax + 1)
    })?;
    ensure(b.u == naive.u && b.v == naive.v, || "selected biclique differs".into())
}

/// Relabelling rows and columns relabels the extracted biclique, provided
/// the unpermuted run is tie-free. Returns Ok(false) when skipped.
pub fn check_equivariance(r: &Array2<f64>, eps: f64, row_perm: &[usize], col_perm: &[usize], lambda: f64) -> Result<bool, String> {
    let (p, q) = r.dim();
    let g = truncate(r.clone(), eps).map_err(|e| e.to_string())?;
    let naive = naive_sweep(&g.r_trunc().to_owned(), &all(p), &all(q), lambda);
    if !naive.tie_free {
        return Ok(false);
    }
    // Entry (i, j) of the original lands at (row_perm[i], col_perm[j]).
    let mut permuted = Array2::zeros((p, q));
    for i in 0..p {
        for j in 0..q {
            permuted[[row_perm[i], col_perm[j]]] = r[[i, j]];
        }
    }
    let gp = truncate(permuted, eps).map_err(|e| e.to_string())?;
    let (b, _) = extraction::extract_one(&g, &all(p), &all(q), lambda).map_err(|e| e.to_string())?;
    let (bp, _) = extraction::extract_one(&gp, &all(p), &all(q), lambda).map_err(|e| e.to_string())?;
    let mut u: Vec<usize> = b.u.iter().map(|&i| row_perm[i]).collect();
    let mut v: Vec<usize> = b.v.iter().map(|&j| col_perm[j]).collect();
    u.sort_unstable();
    v.sort_unstable();
    ensure(u == bp.u && v == bp.v, || format!("permuted run gave {:?} x {:?}, expected {u:?} x {v:?}", bp.u, bp.v))?;
    Ok(true)
}

/// Range, rescaling invariance and the single-pair identity for rho_hat.
pub fn check_rho_invariants(x: &Array2<f64>, y: &Array2<f64>, ix: &[usize], iy: &[usize], scale: f64) -> Check {
    let xs = standardize(&raw(x.clone(), "x")).map_err(|e| e.to_string())?;
    let ys = standardize(&raw(y.clone(), "y")).map_err(|e| e.to_string())?;
    let rho = |xs: &gcca::StandardizedMatrix, ys: &gcca::StandardizedMatrix, ix: &[usize], iy: &[usize]| {
        let (a, b) = canonical_vectors(xs, ys, ix, iy).map_err(|e| e.to_string())?;
        canonical_correlation(xs, ys, ix, iy, &a, &b).map_err(|e| e.to_string())
    };
    let r0 = rho(&xs, &ys, ix, iy)?;
    ensure((0.0..=1.0 + 1e-9).contains(&r0), || format!("rho {r0} out of [0, 1]"))?;

    let scaled = standardize(&raw(x.mapv(|v| v * scale), "x")).map_err(|e| e.to_string())?;
    let r1 = rho(&scaled, &ys, ix, iy)?;
    ensure((r0 - r1).abs() <= 1e-9, || format!("rescaling moved rho {r0} -> {r1}"))?;

    let r = data::cross_correlation(&xs, &ys).map_err(|e| e.to_string())?;
    let (i, j) = (ix[0], iy[0]);
    let single = rho(&xs, &ys, &[i], &[j])?;
    ensure((single - r[[i, j]].abs()).abs() <= 1e-12, || {
        format!("single pair rho {single} vs |R| {}", r[[i, j]].abs())
    })
}
