//! Penalized block objective and the greedy row/column exclusion sweep that
//! extracts disjoint biclique subgraphs from a [`CorrelationGraph`].
//!
//! The sweep repeatedly drops the active row or column with the smallest
//! mean truncated weight. Row and column sums are kept in exact fixed-point
//! arithmetic, so the incremental updates produce the same exclusion order as
//! recomputing every mean from scratch, ties included.

use serde::{Deserialize, Serialize};

use crate::data::CorrelationGraph;
use crate::error::{Error, Result};

/// Default cap on the number of subgraphs extracted per lambda.
pub const DEFAULT_MAX_SUBGRAPHS: usize = 5;

/// Sum of truncated weights over `u ⊗ v` divided by `(|u||v|)^λ`.
///
/// Index sets are treated as sets: order and duplicates are ignored.
pub fn objective(graph: &CorrelationGraph, u: &[usize], v: &[usize], lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let u = normalize_set(u, graph.p())?;
    let v = normalize_set(v, graph.q())?;
    let total = block_total(graph, &u, &v);
    Ok(penalized(graph.scale().to_real(total), u.len(), v.len(), lambda))
}

/// Mean truncated weight of each active row over the active columns, and of
/// each active column over the active rows. Outputs follow the input order.
pub fn row_col_means(
    graph: &CorrelationGraph,
    active_rows: &[usize],
    active_cols: &[usize],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if active_rows.is_empty() || active_cols.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    check_range(active_rows, graph.p())?;
    check_range(active_cols, graph.q())?;
    let rt = graph.r_trunc();
    let row_means = active_rows
        .iter()
        .map(|&i| active_cols.iter().map(|&j| rt[[i, j]]).sum::<f64>() / active_cols.len() as f64)
        .collect();
    let col_means = active_cols
        .iter()
        .map(|&j| active_rows.iter().map(|&i| rt[[i, j]]).sum::<f64>() / active_rows.len() as f64)
        .collect();
    Ok((row_means, col_means))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExclusionKind {
    Row,
    Column,
}

/// One exclusion. `time` is the time stamp of the state it produces; the
/// initial full active state has time 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionStep {
    pub time: usize,
    pub kind: ExclusionKind,
    pub index: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionTrajectory {
    pub lambda: f64,
    pub start_rows: usize,
    pub start_cols: usize,
    pub initial_objective: f64,
    pub steps: Vec<ExclusionStep>,
    /// Time of the state with maximal objective, latest on ties.
    pub argmax_time: usize,
}

impl ExclusionTrajectory {
    /// Objective of the state at `time` (1-based).
    pub fn objective_at(&self, time: usize) -> Option<f64> {
        match time {
            0 => None,
            1 => Some(self.initial_objective),
            t => self.steps.get(t - 2).map(|s| s.objective),
        }
    }

    pub fn states(&self) -> usize {
        self.steps.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Biclique {
    /// Sorted row indices (variables of X).
    pub u: Vec<usize>,
    /// Sorted column indices (variables of Y).
    pub v: Vec<usize>,
    /// Contribution of this block to the objective.
    pub score: f64,
    /// Mean truncated weight over `u ⊗ v`.
    pub block_mean: f64,
    pub lambda: f64,
}

impl Biclique {
    pub fn area(&self) -> usize {
        self.u.len() * self.v.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicliqueSet {
    pub lambda: f64,
    pub subgraphs: Vec<Biclique>,
    pub trajectories: Vec<ExclusionTrajectory>,
    /// Union of all `u`, sorted.
    pub i_x: Vec<usize>,
    /// Union of all `v`, sorted.
    pub i_y: Vec<usize>,
}

impl BicliqueSet {
    pub fn is_empty(&self) -> bool {
        self.subgraphs.is_empty()
    }

    /// Total objective: sum of the subgraph scores.
    pub fn objective(&self) -> f64 {
        self.subgraphs.iter().map(|b| b.score).sum()
    }

    /// Serializable view with variable names attached when available.
    pub fn report(&self, x_names: Option<&[String]>, y_names: Option<&[String]>) -> BicliqueSetReport {
        let names = |idx: &[usize], names: Option<&[String]>| {
            names.map(|n| idx.iter().map(|&i| n[i].clone()).collect())
        };
        BicliqueSetReport {
            lambda: self.lambda,
            subgraphs: self
                .subgraphs
                .iter()
                .map(|b| SubgraphReport {
                    u: b.u.clone(),
                    v: b.v.clone(),
                    score: b.score,
                    block_mean: b.block_mean,
                    u_names: names(&b.u, x_names),
                    v_names: names(&b.v, y_names),
                })
                .collect(),
            i_x: self.i_x.clone(),
            i_y: self.i_y.clone(),
            i_x_names: names(&self.i_x, x_names),
            i_y_names: names(&self.i_y, y_names),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphReport {
    pub u: Vec<usize>,
    pub v: Vec<usize>,
    pub score: f64,
    pub block_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub u_names: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub v_names: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicliqueSetReport {
    pub lambda: f64,
    pub subgraphs: Vec<SubgraphReport>,
    pub i_x: Vec<usize>,
    pub i_y: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub i_x_names: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub i_y_names: Option<Vec<String>>,
}

/// Runs the exclusion sweep from the given active sets and returns the
/// visited state with maximal objective.
pub fn extract_one(
    graph: &CorrelationGraph,
    active_rows: &[usize],
    active_cols: &[usize],
    lambda: f64,
) -> Result<(Biclique, ExclusionTrajectory)> {
    check_lambda(lambda)?;
    let rows = normalize_set(active_rows, graph.p())?;
    let cols = normalize_set(active_cols, graph.q())?;
    let path = ExclusionPath::sweep(graph, rows, cols);
    Ok(path.select(graph, lambda))
}

/// Extracts up to `max_subgraphs` disjoint bicliques, each from the residual
/// active sets left by the previous ones.
///
/// Stops early when the residual rows or columns run out, or when a candidate
/// block's mean truncated weight is at or below `min_block_mean` (that
/// candidate is discarded).
pub fn extract_all(
    graph: &CorrelationGraph,
    lambda: f64,
    max_subgraphs: usize,
    min_block_mean: f64,
) -> Result<BicliqueSet> {
    extract_all_with(graph, lambda, max_subgraphs, min_block_mean, None)
}

pub(crate) fn check_extract_params(max_subgraphs: usize, min_block_mean: f64) -> Result<()> {
    if max_subgraphs == 0 {
        return Err(Error::InvalidParameter("max_subgraphs must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&min_block_mean) {
        return Err(Error::InvalidParameter(format!(
            "min_block_mean must lie in [0, 1), got {min_block_mean}"
        )));
    }
    Ok(())
}

/// `first` is an optional precomputed sweep from the full active sets; the
/// sweep does not depend on lambda, so tuning shares it across the grid.
pub(crate) fn extract_all_with(
    graph: &CorrelationGraph,
    lambda: f64,
    max_subgraphs: usize,
    min_block_mean: f64,
    first: Option<&ExclusionPath>,
) -> Result<BicliqueSet> {
    check_lambda(lambda)?;
    check_extract_params(max_subgraphs, min_block_mean)?;
    let mut rows: Vec<usize> = (0..graph.p()).collect();
    let mut cols: Vec<usize> = (0..graph.q()).collect();
    let mut subgraphs = Vec::new();
    let mut trajectories = Vec::new();
    while subgraphs.len() < max_subgraphs && !rows.is_empty() && !cols.is_empty() {
        let (b, traj) = match (subgraphs.is_empty(), first) {
            (true, Some(path)) => path.select(graph, lambda),
            _ => ExclusionPath::sweep(graph, rows.clone(), cols.clone()).select(graph, lambda),
        };
        if b.block_mean <= min_block_mean {
            break;
        }
        rows.retain(|i| b.u.binary_search(i).is_err());
        cols.retain(|j| b.v.binary_search(j).is_err());
        subgraphs.push(b);
        trajectories.push(traj);
    }
    let mut i_x: Vec<usize> = subgraphs.iter().flat_map(|b| b.u.iter().copied()).collect();
    let mut i_y: Vec<usize> = subgraphs.iter().flat_map(|b| b.v.iter().copied()).collect();
    i_x.sort_unstable();
    i_y.sort_unstable();
    Ok(BicliqueSet {
        lambda,
        subgraphs,
        trajectories,
        i_x,
        i_y,
    })
}

/// Lambda-independent record of one exclusion sweep.
#[derive(Debug, Clone)]
pub(crate) struct ExclusionPath {
    rows: Vec<usize>,
    cols: Vec<usize>,
    moves: Vec<(ExclusionKind, usize)>,
    /// Fixed-point block total and active sizes of every visited state.
    states: Vec<(u128, usize, usize)>,
}

impl ExclusionPath {
    pub(crate) fn full(graph: &CorrelationGraph) -> Self {
        Self::sweep(graph, (0..graph.p()).collect(), (0..graph.q()).collect())
    }

    /// `rows` and `cols` must be sorted, duplicate-free and in range.
    fn sweep(graph: &CorrelationGraph, rows: Vec<usize>, cols: Vec<usize>) -> Self {
        let scale = graph.scale();
        let rt = graph.r_trunc();
        let w = |i: usize, j: usize| scale.to_fixed(rt[[i, j]]);

        let mut row_sum = vec![0u128; graph.p()];
        let mut col_sum = vec![0u128; graph.q()];
        for &i in &rows {
            for &j in &cols {
                let x = w(i, j);
                row_sum[i] += x;
                col_sum[j] += x;
            }
        }
        let mut total: u128 = rows.iter().map(|&i| row_sum[i]).sum();

        let mut live_rows = rows.clone();
        let mut live_cols = cols.clone();
        let mut moves = Vec::with_capacity(rows.len() + cols.len());
        let mut states = Vec::with_capacity(rows.len() + cols.len());
        states.push((total, live_rows.len(), live_cols.len()));

        while live_rows.len() > 1 && live_cols.len() > 1 {
            let (tau, tau_pos) = argmin(&live_rows, &row_sum);
            let (phi, phi_pos) = argmin(&live_cols, &col_sum);
            // row mean > column mean  <=>  row_sum * |rows| > col_sum * |cols|
            let row_side = row_sum[tau] * live_rows.len() as u128;
            let col_side = col_sum[phi] * live_cols.len() as u128;
            if row_side > col_side {
                live_cols.remove(phi_pos);
                for &i in &live_rows {
                    row_sum[i] -= w(i, phi);
                }
                total -= col_sum[phi];
                moves.push((ExclusionKind::Column, phi));
            } else {
                live_rows.remove(tau_pos);
                for &j in &live_cols {
                    col_sum[j] -= w(tau, j);
                }
                total -= row_sum[tau];
                moves.push((ExclusionKind::Row, tau));
            }
            states.push((total, live_rows.len(), live_cols.len()));
        }

        Self {
            rows,
            cols,
            moves,
            states,
        }
    }

    fn objective(&self, graph: &CorrelationGraph, state: usize, lambda: f64) -> f64 {
        let (total, nr, nc) = self.states[state];
        penalized(graph.scale().to_real(total), nr, nc, lambda)
    }

    fn select(&self, graph: &CorrelationGraph, lambda: f64) -> (Biclique, ExclusionTrajectory) {
        let objectives: Vec<f64> = (0..self.states.len())
            .map(|k| self.objective(graph, k, lambda))
            .collect();
        let mut best = 0;
        for (k, &f) in objectives.iter().enumerate() {
            if f >= objectives[best] {
                best = k;
            }
        }

        let mut u = self.rows.clone();
        let mut v = self.cols.clone();
        for &(kind, idx) in &self.moves[..best] {
            match kind {
                ExclusionKind::Row => u.retain(|&i| i != idx),
                ExclusionKind::Column => v.retain(|&j| j != idx),
            }
        }
        let (total, nr, nc) = self.states[best];
        let biclique = Biclique {
            u,
            v,
            score: objectives[best],
            block_mean: graph.scale().to_real(total) / (nr * nc) as f64,
            lambda,
        };

        let steps = self
            .moves
            .iter()
            .enumerate()
            .map(|(k, &(kind, index))| ExclusionStep {
                time: k + 2,
                kind,
                index,
                objective: objectives[k + 1],
            })
            .collect();
        let trajectory = ExclusionTrajectory {
            lambda,
            start_rows: self.rows.len(),
            start_cols: self.cols.len(),
            initial_objective: objectives[0],
            steps,
            argmax_time: best + 1,
        };
        (biclique, trajectory)
    }
}

/// Smallest sum among live indices; the smallest index wins ties because
/// `live` is sorted ascending.
fn argmin(live: &[usize], sums: &[u128]) -> (usize, usize) {
    let mut best_pos = 0;
    for (pos, &idx) in live.iter().enumerate().skip(1) {
        if sums[idx] < sums[live[best_pos]] {
            best_pos = pos;
        }
    }
    (live[best_pos], best_pos)
}

fn penalized(sum: f64, nr: usize, nc: usize, lambda: f64) -> f64 {
    sum / ((nr * nc) as f64).powf(lambda)
}

fn block_total(graph: &CorrelationGraph, u: &[usize], v: &[usize]) -> u128 {
    let scale = graph.scale();
    let rt = graph.r_trunc();
    u.iter()
        .flat_map(|&i| v.iter().map(move |&j| (i, j)))
        .map(|(i, j)| scale.to_fixed(rt[[i, j]]))
        .sum()
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if (0.5..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::LambdaOutOfRange(lambda))
    }
}

fn check_range(idx: &[usize], len: usize) -> Result<()> {
    match idx.iter().find(|&&i| i >= len) {
        Some(&index) => Err(Error::IndexOutOfRange { index, len }),
        None => Ok(()),
    }
}

fn normalize_set(idx: &[usize], len: usize) -> Result<Vec<usize>> {
    if idx.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    check_range(idx, len)?;
    let mut out = idx.to_vec();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
