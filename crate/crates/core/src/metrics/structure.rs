//! Distance, neighbourhood and structural-hole measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SocialGraph;

/// What an unreachable node adds to a farness sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyPolicy {
    /// The graph's node count.
    #[default]
    NodeCount,
    Fixed(f64),
    /// Unreachable nodes contribute nothing.
    Ignore,
}

impl PenaltyPolicy {
    fn value(self, n: usize) -> f64 {
        match self {
            PenaltyPolicy::NodeCount => n as f64,
            PenaltyPolicy::Fixed(v) => v,
            PenaltyPolicy::Ignore => 0.0,
        }
    }
}

/// Sum of hop distances from `node` to every other node, with `penalty`
/// standing in for each unreachable one. Lower means better placed.
pub fn farness(g: &SocialGraph, node: &str, penalty: PenaltyPolicy) -> Result<f64> {
    let s = g.require(node)?;
    Ok(farness_of(g, s, penalty))
}

pub(crate) fn farness_of(g: &SocialGraph, s: usize, penalty: PenaltyPolicy) -> f64 {
    let pen = penalty.value(g.node_count());
    g.hop_distances(s)
        .iter()
        .enumerate()
        .filter(|&(v, _)| v != s)
        .map(|(_, d)| d.map_or(pen, f64::from))
        .sum()
}

/// Directed local clustering: edges among the in/out neighbourhood over
/// `k(k-1)`; zero when fewer than two neighbours.
pub fn clustering_coefficient(g: &SocialGraph, node: &str) -> Result<f64> {
    let s = g.require(node)?;
    Ok(clustering_of(g, s))
}

pub(crate) fn clustering_of(g: &SocialGraph, s: usize) -> f64 {
    let nbrs = g.neighbors(s);
    let k = nbrs.len();
    if k < 2 {
        return 0.0;
    }
    let links: usize = nbrs
        .iter()
        .map(|&j| {
            g.out_neighbors(j)
                .iter()
                .filter(|&&(t, _)| t != s && nbrs.binary_search(&t).is_ok())
                .count()
        })
        .sum();
    links as f64 / (k * (k - 1)) as f64
}

pub fn average_clustering(g: &SocialGraph) -> f64 {
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    (0..n).map(|v| clustering_of(g, v)).sum::<f64>() / n as f64
}

/// Mean hop distance over ordered pairs `u != v` with a finite distance;
/// zero if there are none.
pub fn average_finite_distance(g: &SocialGraph) -> f64 {
    let mut total = 0u64;
    let mut pairs = 0u64;
    for s in 0..g.node_count() {
        for d in g.hop_distances(s).into_iter().flatten() {
            if d > 0 {
                total += u64::from(d);
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total as f64 / pairs as f64
    }
}

/// The graph seen as weighted-undirected: `s(u,v) = w(u,v) + w(v,u)`.
pub(crate) struct SymmetricTies {
    adj: Vec<Vec<(usize, f64)>>,
    strength: Vec<f64>,
}

impl SymmetricTies {
    pub(crate) fn new(g: &SocialGraph) -> Self {
        let adj: Vec<Vec<(usize, f64)>> = (0..g.node_count())
            .map(|u| {
                g.neighbors(u)
                    .into_iter()
                    .map(|v| (v, g.sym_weight(u, v) as f64))
                    .collect()
            })
            .collect();
        let strength = adj
            .iter()
            .map(|l| l.iter().map(|&(_, w)| w).sum())
            .collect();
        SymmetricTies { adj, strength }
    }

    fn weight(&self, u: usize, v: usize) -> f64 {
        let list = &self.adj[u];
        list.binary_search_by_key(&v, |&(t, _)| t)
            .map_or(0.0, |i| list[i].1)
    }

    /// Proportional tie strength `p(u,v)`.
    fn p(&self, u: usize, v: usize) -> f64 {
        self.weight(u, v) / self.strength[u]
    }

    fn max_weight(&self, u: usize) -> f64 {
        self.adj[u].iter().map(|&(_, w)| w).fold(0.0, f64::max)
    }

    pub(crate) fn constraint(&self, ego: usize) -> Option<f64> {
        let alters = &self.adj[ego];
        if alters.is_empty() {
            return None;
        }
        let total = alters
            .iter()
            .map(|&(j, _)| {
                let indirect: f64 = alters
                    .iter()
                    .filter(|&&(q, _)| q != j)
                    .map(|&(q, _)| self.p(ego, q) * self.p(q, j))
                    .sum();
                let c = self.p(ego, j) + indirect;
                c * c
            })
            .sum();
        Some(total)
    }

    pub(crate) fn effective_size(&self, ego: usize) -> Option<f64> {
        let alters = &self.adj[ego];
        if alters.is_empty() {
            return None;
        }
        let total = alters
            .iter()
            .map(|&(j, _)| {
                let max_j = self.max_weight(j);
                let redundancy: f64 = alters
                    .iter()
                    .filter(|&&(q, _)| q != j)
                    .map(|&(q, _)| self.p(ego, q) * self.weight(j, q) / max_j)
                    .sum();
                1.0 - redundancy
            })
            .sum();
        Some(total)
    }
}

/// Burt's constraint over symmetrised proportional tie strengths.
pub fn burt_constraint(g: &SocialGraph, node: &str) -> Result<f64> {
    let s = g.require(node)?;
    SymmetricTies::new(g)
        .constraint(s)
        .ok_or_else(|| Error::Undefined(format!("constraint of isolated node `{node}`")))
}

/// Burt's effective size: alters discounted by their redundancy.
pub fn effective_size(g: &SocialGraph, node: &str) -> Result<f64> {
    let s = g.require(node)?;
    SymmetricTies::new(g)
        .effective_size(s)
        .ok_or_else(|| Error::Undefined(format!("effective size of isolated node `{node}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(edges: &[(&str, &str, u64)]) -> SocialGraph {
        SocialGraph::from_edges(Vec::<&str>::new(), edges.iter().copied()).unwrap()
    }

    fn complete_triad(w: u64) -> SocialGraph {
        graph(&[
            ("A", "B", w),
            ("B", "A", w),
            ("A", "C", w),
            ("C", "A", w),
            ("B", "C", w),
            ("C", "B", w),
        ])
    }

    #[test]
    fn farness_examples() {
        let chain = graph(&[("A", "B", 1), ("B", "C", 1)]);
        assert_eq!(farness(&chain, "A", PenaltyPolicy::default()).unwrap(), 3.0);
        assert_eq!(
            farness(&complete_triad(1), "B", PenaltyPolicy::default()).unwrap(),
            2.0
        );

        let sink =
            SocialGraph::from_edges(["E"], [("A", "B", 1), ("B", "C", 1), ("C", "D", 1)]).unwrap();
        assert_eq!(farness(&sink, "D", PenaltyPolicy::NodeCount).unwrap(), 20.0);
        assert_eq!(
            farness(&sink, "D", PenaltyPolicy::Fixed(2.5)).unwrap(),
            10.0
        );
        assert_eq!(farness(&sink, "A", PenaltyPolicy::Ignore).unwrap(), 6.0);
        assert!(matches!(
            farness(&sink, "Z", PenaltyPolicy::default()),
            Err(Error::MissingNode(_))
        ));
    }

    #[test]
    fn clustering_examples() {
        for v in ["A", "B", "C"] {
            assert_eq!(clustering_coefficient(&complete_triad(1), v).unwrap(), 1.0);
        }
        let star = graph(&[("H", "a", 1), ("H", "b", 1), ("H", "c", 1)]);
        assert_eq!(clustering_coefficient(&star, "H").unwrap(), 0.0);
        assert_eq!(clustering_coefficient(&star, "a").unwrap(), 0.0);
        // One of the two possible directed links between H's neighbours.
        let half = graph(&[("H", "a", 1), ("b", "H", 1), ("a", "b", 1)]);
        assert_eq!(clustering_coefficient(&half, "H").unwrap(), 0.5);
    }

    #[test]
    fn constraint_examples() {
        let dyad = graph(&[("A", "B", 1), ("B", "A", 1)]);
        assert_eq!(burt_constraint(&dyad, "A").unwrap(), 1.0);
        assert!((burt_constraint(&complete_triad(1), "A").unwrap() - 1.125).abs() < 1e-12);
        let open = graph(&[("E", "a", 1), ("b", "E", 1)]);
        assert!((burt_constraint(&open, "E").unwrap() - 0.5).abs() < 1e-12);
        let iso = SocialGraph::from_edges(["Z"], [("A", "B", 1)]).unwrap();
        assert!(matches!(
            burt_constraint(&iso, "Z"),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn constraint_ignores_weight_scale() {
        let g = graph(&[
            ("A", "B", 1),
            ("B", "C", 2),
            ("C", "A", 3),
            ("A", "D", 1),
            ("D", "C", 5),
        ]);
        let scaled = graph(&[
            ("A", "B", 7),
            ("B", "C", 14),
            ("C", "A", 21),
            ("A", "D", 7),
            ("D", "C", 35),
        ]);
        for v in ["A", "B", "C", "D"] {
            let a = burt_constraint(&g, v).unwrap();
            let b = burt_constraint(&scaled, v).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn effective_size_examples() {
        let dyad = graph(&[("A", "B", 1), ("B", "A", 1)]);
        assert_eq!(effective_size(&dyad, "A").unwrap(), 1.0);
        let open = graph(&[("E", "a", 1), ("b", "E", 1)]);
        assert_eq!(effective_size(&open, "E").unwrap(), 2.0);
        assert!((effective_size(&complete_triad(1), "A").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn averages() {
        assert_eq!(average_clustering(&complete_triad(1)), 1.0);
        assert_eq!(average_finite_distance(&complete_triad(1)), 1.0);
        let chain = graph(&[("A", "B", 1), ("B", "C", 1)]);
        assert!((average_finite_distance(&chain) - 4.0 / 3.0).abs() < 1e-12);
    }
}
