//! Selection of the density penalty lambda by a Bernoulli block-model KL
//! divergence.
//!
//! Edge indicators `D_ij = I(|R_ij| > ε)` are modeled with rate `π1` inside
//! the extracted blocks and `π0` outside, and compared against a single rate
//! `π` over the whole matrix. Each cell contributes
//! `D·π1·ln(π1/π) + (1−D)·(1−π1)·ln((1−π1)/(1−π))` (with `π0` outside),
//! i.e. the per-cell weights are the indicators times the rates, not the
//! textbook `π1·ln(π1/π)` expectation.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::CorrelationGraph;
use crate::error::{Error, Result};
use crate::extraction::{self, BicliqueSet, ExclusionPath};

/// `0.5, 0.55, ..., 0.9`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=8).map(|k| (50 + 5 * k) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlScore {
    pub lambda: f64,
    pub pi0: f64,
    pub pi1: f64,
    pub pi: f64,
    pub divergence: f64,
    pub biclique_set: BicliqueSet,
}

/// Cell counts behind a [`KlScore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellCounts {
    pub inside_cells: usize,
    pub inside_edges: usize,
    pub outside_cells: usize,
    pub outside_edges: usize,
}

impl CellCounts {
    pub fn of(graph: &CorrelationGraph, bset: &BicliqueSet) -> Self {
        let mut inside_cells = 0;
        let mut inside_edges = 0;
        for b in &bset.subgraphs {
            inside_cells += b.area();
            for &i in &b.u {
                inside_edges += b.v.iter().filter(|&&j| graph.is_edge(i, j)).count();
            }
        }
        Self {
            inside_cells,
            inside_edges,
            outside_cells: graph.p() * graph.q() - inside_cells,
            outside_edges: graph.edge_count() - inside_edges,
        }
    }
}

/// `w · a · ln(a / b)`, zero whenever the weight or `a` vanishes.
fn weighted_log_term(weight: f64, a: f64, b: f64) -> f64 {
    if weight == 0.0 || a == 0.0 {
        0.0
    } else {
        weight * a * (a / b).ln()
    }
}

fn block_term(cells: usize, edges: usize, rate: f64, pi: f64) -> f64 {
    let ones = edges as f64;
    let zeros = (cells - edges) as f64;
    weighted_log_term(ones, rate, pi) + weighted_log_term(zeros, 1.0 - rate, 1.0 - pi)
}

/// Divergence between the two-rate block model implied by `bset` and the
/// single-rate reference.
pub fn kl_divergence(graph: &CorrelationGraph, bset: &BicliqueSet) -> Result<KlScore> {
    for b in &bset.subgraphs {
        if b.u.iter().any(|&i| i >= graph.p()) || b.v.iter().any(|&j| j >= graph.q()) {
            return Err(Error::InvalidParameter(
                "biclique set does not belong to this graph".into(),
            ));
        }
    }
    let counts = CellCounts::of(graph, bset);
    let total = (graph.p() * graph.q()) as f64;
    let pi = graph.edge_count() as f64 / total;
    if pi <= 0.0 || pi >= 1.0 {
        return Err(Error::DegenerateReference(pi));
    }
    let rate = |edges: usize, cells: usize| {
        if cells == 0 {
            0.0
        } else {
            edges as f64 / cells as f64
        }
    };
    let pi1 = rate(counts.inside_edges, counts.inside_cells);
    let pi0 = rate(counts.outside_edges, counts.outside_cells);
    let divergence = block_term(counts.inside_cells, counts.inside_edges, pi1, pi)
        + block_term(counts.outside_cells, counts.outside_edges, pi0, pi);
    Ok(KlScore {
        lambda: bset.lambda,
        pi0,
        pi1,
        pi,
        divergence,
        biclique_set: bset.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSelection {
    pub lambda_star: f64,
    pub best: KlScore,
    /// Scores of every usable candidate, in grid order.
    pub all_scores: Vec<KlScore>,
}

/// Runs [`extraction::extract_all`] for every lambda in the grid and keeps the
/// one with the largest divergence (larger lambda on ties).
///
/// Candidates whose reference rate is degenerate, or whose biclique set came
/// back empty, are skipped.
pub fn select_lambda(
    graph: &CorrelationGraph,
    lambdas: &[f64],
    max_subgraphs: usize,
    min_block_mean: f64,
) -> Result<LambdaSelection> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("lambda grid is empty".into()));
    }
    for &l in lambdas {
        extraction::check_lambda(l)?;
    }
    extraction::check_extract_params(max_subgraphs, min_block_mean)?;

    let first = ExclusionPath::full(graph);
    let scored: Vec<Result<Option<KlScore>>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let bset = extraction::extract_all_with(
                graph,
                lambda,
                max_subgraphs,
                min_block_mean,
                Some(&first),
            )?;
            if bset.is_empty() {
                return Ok(None);
            }
            match kl_divergence(graph, &bset) {
                Ok(score) => Ok(Some(score)),
                Err(Error::DegenerateReference(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut all_scores = Vec::new();
    for s in scored {
        if let Some(score) = s? {
            all_scores.push(score);
        }
    }
    let mut best: Option<&KlScore> = None;
    for s in &all_scores {
        best = match best {
            Some(b)
                if b.divergence > s.divergence
                    || (b.divergence == s.divergence && b.lambda >= s.lambda) =>
            {
                Some(b)
            }
            _ => Some(s),
        };
    }
    let best = best.cloned().ok_or(Error::NoValidCandidate)?;
    Ok(LambdaSelection {
        lambda_star: best.lambda,
        best,
        all_scores,
    })
}

/// Plot-ready CSV with one row per candidate.
pub fn write_scores_csv<W: Write>(out: W, scores: &[KlScore]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "lambda",
        "pi0",
        "pi1",
        "pi",
        "divergence",
        "n_subgraphs",
        "size_i_x",
        "size_i_y",
    ])?;
    for s in scores {
        w.write_record([
            s.lambda.to_string(),
            s.pi0.to_string(),
            s.pi1.to_string(),
            s.pi.to_string(),
            s.divergence.to_string(),
            s.biclique_set.subgraphs.len().to_string(),
            s.biclique_set.i_x.len().to_string(),
            s.biclique_set.i_y.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
