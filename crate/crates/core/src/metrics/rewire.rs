//! Degree-preserving rewiring by simulated annealing.
//!
//! A move picks two edges `a->b`, `c->d` and replaces them with `a->d`,
//! `c->b` (each edge keeps its weight with its source). In- and out-degree
//! sequences never change, so any gain comes from topology alone.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::structure::{average_clustering, average_finite_distance};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewireParams {
    /// Weight on average clustering (maximised).
    pub alpha: f64,
    /// Weight on average finite hop distance (minimised).
    pub beta: f64,
    pub iterations: usize,
    /// Geometric cooling from `t_start` to `t_end`.
    pub t_start: f64,
    pub t_end: f64,
    pub seed: u64,
}

impl Default for RewireParams {
    fn default() -> Self {
        RewireParams {
            alpha: 1.0,
            beta: 1.0,
            iterations: 5000,
            t_start: 0.01,
            t_end: 1e-5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewireResult {
    /// Best graph visited.
    pub graph: SocialGraph,
    pub avg_clustering_before: f64,
    pub avg_clustering_after: f64,
    pub avg_distance_before: f64,
    pub avg_distance_after: f64,
    pub objective_before: f64,
    pub objective_after: f64,
    pub accepted_moves: usize,
    pub seed: u64,
}

/// `alpha * avg clustering - beta * avg finite distance`.
pub fn rewire_objective(g: &SocialGraph, alpha: f64, beta: f64) -> f64 {
    alpha * average_clustering(g) - beta * average_finite_distance(g)
}

fn legal_swap(
    edges: &[(usize, usize, u64)],
    present: &HashSet<(usize, usize)>,
    i: usize,
    j: usize,
) -> bool {
    let (a, b, _) = edges[i];
    let (c, d, _) = edges[j];
    a != c && b != d && a != d && c != b && !present.contains(&(a, d)) && !present.contains(&(c, b))
}

pub fn rewire_optimize(g: &SocialGraph, params: RewireParams) -> Result<RewireResult> {
    let RewireParams {
        alpha,
        beta,
        iterations,
        t_start,
        t_end,
        seed,
    } = params;
    if alpha < 0.0 || beta < 0.0 || alpha + beta == 0.0 {
        return Err(Error::param(
            "alpha and beta must be non-negative and not both zero",
        ));
    }
    if !(t_start > 0.0 && t_end > 0.0) {
        return Err(Error::param("temperatures must be positive"));
    }
    if g.edge_count() < 2 {
        return Err(Error::param("rewiring needs at least two edges"));
    }
    let mut edges: Vec<(usize, usize, u64)> = g.edges().collect();
    let mut present: HashSet<(usize, usize)> = edges.iter().map(|&(u, v, _)| (u, v)).collect();
    let m = edges.len();
    let any_legal = (0..m).any(|i| (i + 1..m).any(|j| legal_swap(&edges, &present, i, j)));
    if !any_legal {
        return Err(Error::param("graph admits no degree-preserving swap"));
    }

    let objective = |g: &SocialGraph| rewire_objective(g, alpha, beta);
    let before_c = average_clustering(g);
    let before_d = average_finite_distance(g);
    let start = alpha * before_c - beta * before_d;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = start;
    let mut best = (start, g.clone());
    let mut accepted = 0;
    let ratio = t_end / t_start;

    for step in 0..iterations {
        let temp = t_start * ratio.powf(step as f64 / iterations as f64);
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        // Draw the acceptance variate unconditionally so the random stream
        // does not depend on which proposals are legal.
        let u: f64 = rng.random();
        if i == j || !legal_swap(&edges, &present, i, j) {
            continue;
        }
        let (a, b, wa) = edges[i];
        let (c, d, wc) = edges[j];
        edges[i] = (a, d, wa);
        edges[j] = (c, b, wc);
        let candidate = SocialGraph::from_index_edges(g.ids().to_vec(), edges.iter().copied())?;
        let value = objective(&candidate);
        let delta = value - current;
        if delta >= 0.0 || u < (delta / temp).exp() {
            present.remove(&(a, b));
            present.remove(&(c, d));
            present.insert((a, d));
            present.insert((c, b));
            current = value;
            accepted += 1;
            if value > best.0 {
                best = (value, candidate);
            }
        } else {
            edges[i] = (a, b, wa);
            edges[j] = (c, d, wc);
        }
    }

    let (objective_after, graph) = best;
    Ok(RewireResult {
        avg_clustering_after: average_clustering(&graph),
        avg_distance_after: average_finite_distance(&graph),
        graph,
        avg_clustering_before: before_c,
        avg_distance_before: before_d,
        objective_before: start,
        objective_after,
        accepted_moves: accepted,
        seed,
    })
}
