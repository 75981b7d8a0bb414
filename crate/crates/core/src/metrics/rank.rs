//! Power-iteration rankings: PageRank, HITS and eigenvector centrality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SocialGraph;

/// Scores indexed by canonical node index, with convergence information.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Weighted PageRank. Each node spreads its mass over out-edges in
/// proportion to edge weight; dangling mass is spread uniformly.
/// Convergence is declared when the L1 change drops below `tol`.
pub fn pagerank(g: &SocialGraph, params: PageRankParams) -> Result<Ranking> {
    let PageRankParams {
        damping,
        tol,
        max_iter,
    } = params;
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::param(format!("damping {damping} outside (0, 1)")));
    }
    let n = g.node_count();
    if n == 0 {
        return Err(Error::param("pagerank of an empty graph"));
    }
    let nf = n as f64;
    let out_weight: Vec<f64> = (0..n)
        .map(|u| g.out_neighbors(u).iter().map(|&(_, w)| w as f64).sum())
        .collect();

    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let dangling: f64 = (0..n).filter(|&u| out_weight[u] == 0.0).map(|u| x[u]).sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        for (v, slot) in next.iter_mut().enumerate() {
            let inflow: f64 = g
                .in_neighbors(v)
                .iter()
                .map(|&(u, w)| x[u] * w as f64 / out_weight[u])
                .sum();
            *slot = base + damping * inflow;
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|s| *s /= total);
        let delta: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if delta < tol {
            converged = true;
            break;
        }
    }
    Ok(Ranking {
        scores: x,
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterParams {
    fn default() -> Self {
        IterParams {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hits {
    pub authority: Ranking,
    pub hub: Ranking,
}

/// HITS authority and hub scores on the weighted adjacency `E`.
///
/// Authorities follow `a <- E^T (E a)` and hubs follow `h <- E (E^T h)`,
/// each started from the uniform vector and L2-normalised every step.
/// Running the two chains separately makes the result exactly symmetric
/// under edge reversal.
pub fn hits(g: &SocialGraph, params: IterParams) -> Result<Hits> {
    if g.edge_count() == 0 {
        return Err(Error::Undefined(
            "HITS scores of a graph without edges".into(),
        ));
    }
    let n = g.node_count();
    let mut tmp = vec![0.0; n];
    let authority = power_iterate(n, params, |x, out| {
        // tmp = E x, out = E^T tmp
        for (u, t) in tmp.iter_mut().enumerate() {
            *t = g
                .out_neighbors(u)
                .iter()
                .map(|&(v, w)| w as f64 * x[v])
                .sum();
        }
        for (v, o) in out.iter_mut().enumerate() {
            *o = g
                .in_neighbors(v)
                .iter()
                .map(|&(u, w)| w as f64 * tmp[u])
                .sum();
        }
    });
    let hub = power_iterate(n, params, |x, out| {
        // tmp = E^T x, out = E tmp
        for (v, t) in tmp.iter_mut().enumerate() {
            *t = g
                .in_neighbors(v)
                .iter()
                .map(|&(u, w)| w as f64 * x[u])
                .sum();
        }
        for (u, o) in out.iter_mut().enumerate() {
            *o = g
                .out_neighbors(u)
                .iter()
                .map(|&(v, w)| w as f64 * tmp[v])
                .sum();
        }
    });
    Ok(Hits { authority, hub })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenVariant {
    /// Adjacency symmetrised as `W + W^T`.
    #[default]
    Symmetric,
    /// Centrality flows along edge direction (in-edges confer status).
    Directed,
}

/// Eigenvector centrality by power iteration on `A + I`, where `A` is the
/// adjacency selected by `variant`. The identity shift keeps the iteration
/// from oscillating on bipartite graphs without changing the eigenvectors.
pub fn eigencentrality(
    g: &SocialGraph,
    params: IterParams,
    variant: EigenVariant,
) -> Result<Ranking> {
    if g.edge_count() == 0 {
        return Err(Error::Undefined(
            "eigenvector centrality of a graph without edges".into(),
        ));
    }
    let n = g.node_count();
    Ok(power_iterate(n, params, |x, out| {
        for (v, o) in out.iter_mut().enumerate() {
            let incoming: f64 = g
                .in_neighbors(v)
                .iter()
                .map(|&(u, w)| w as f64 * x[u])
                .sum();
            let outgoing: f64 = match variant {
                EigenVariant::Symmetric => g
                    .out_neighbors(v)
                    .iter()
                    .map(|&(u, w)| w as f64 * x[u])
                    .sum(),
                EigenVariant::Directed => 0.0,
            };
            *o = x[v] + incoming + outgoing;
        }
    }))
}

fn power_iterate(
    n: usize,
    params: IterParams,
    mut apply: impl FnMut(&[f64], &mut [f64]),
) -> Ranking {
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        iterations += 1;
        apply(&x, &mut next);
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        next.iter_mut().for_each(|v| *v /= norm);
        let delta: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if delta < params.tol {
            converged = true;
            break;
        }
    }
    Ranking {
        scores: x,
        iterations,
        converged,
    }
}

/// Scale scores so the maximum becomes 1 (all zeros stay zero).
pub fn normalize_by_max(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        scores.iter().map(|s| s / max).collect()
    } else {
        vec![0.0; scores.len()]
    }
}
