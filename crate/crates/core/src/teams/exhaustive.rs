use super::{to_assignment, ObjectiveWeights, SizeBounds, TeamAssignment, TeamParams, TeamScorer};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::metrics::NodeMetrics;

const MAX_NODES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub assignment: TeamAssignment,
    /// Number of size-feasible partitions scored.
    pub evaluated: usize,
}

/// Score every size-feasible partition and keep the best; ties go to the
/// canonically smallest partition. Refuses graphs over ten nodes.
pub fn brute_force_teams(
    g: &SocialGraph,
    metrics: &[NodeMetrics],
    bounds: SizeBounds,
    weights: ObjectiveWeights,
) -> Result<BruteForce> {
    bounds.validate()?;
    let n = g.node_count();
    if n > MAX_NODES {
        return Err(Error::TooLarge(n));
    }
    let scorer = TeamScorer::new(g, metrics, weights)?;
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    let mut evaluated = 0;

    // Restricted growth strings enumerate each set partition once, blocks
    // ordered by smallest element (the canonical order).
    let mut rgs = vec![0usize; n];
    let mut visit = |rgs: &[usize]| {
        let k = rgs.iter().max().map_or(0, |m| m + 1);
        let mut teams = vec![Vec::new(); k];
        for (v, &b) in rgs.iter().enumerate() {
            teams[b].push(v);
        }
        let sizes: Vec<usize> = teams.iter().map(Vec::len).collect();
        if teams.is_empty() || !bounds.is_feasible(&sizes) {
            return;
        }
        evaluated += 1;
        let (obj, _) = scorer.evaluate(&teams).expect("feasible partition");
        let replace = match &best {
            None => true,
            Some((b, bt)) => obj > *b || (obj == *b && teams < *bt),
        };
        if replace {
            best = Some((obj, teams));
        }
    };
    if n > 0 {
        enumerate(&mut rgs, 1, 0, &mut visit);
    }

    let (_, teams) = best.ok_or_else(|| {
        Error::param(format!(
            "no partition of {n} students fits sizes [{}, {}]",
            bounds.s_min, bounds.s_max
        ))
    })?;
    let params = TeamParams {
        weights,
        bounds,
        restarts: 0,
        iterations: 0,
    };
    Ok(BruteForce {
        assignment: to_assignment(g, &scorer, teams, params, 0)?,
        evaluated,
    })
}

fn enumerate(rgs: &mut [usize], pos: usize, max: usize, visit: &mut impl FnMut(&[usize])) {
    if pos == rgs.len() {
        visit(rgs);
        return;
    }
    for b in 0..=max + 1 {
        rgs[pos] = b;
        enumerate(rgs, pos + 1, max.max(b), visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{compute_metrics, MetricsOptions};

    fn ring(n: usize) -> (SocialGraph, Vec<NodeMetrics>) {
        let ids: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
        let g =
            SocialGraph::from_index_edges(ids, (0..n).map(|i| (i, (i + 1) % n, 1 + i as u64 % 2)))
                .unwrap();
        let m = compute_metrics(&g, &MetricsOptions::default()).unwrap();
        (g, m)
    }

    #[test]
    fn partition_counts() {
        let (g, m) = ring(4);
        let bf =
            brute_force_teams(&g, &m, SizeBounds::new(2, 2), ObjectiveWeights::default()).unwrap();
        assert_eq!(bf.evaluated, 3);
        let (g, m) = ring(6);
        let bf =
            brute_force_teams(&g, &m, SizeBounds::new(3, 3), ObjectiveWeights::default()).unwrap();
        assert_eq!(bf.evaluated, 10);
        assert_eq!(bf.assignment.teams.len(), 2);
    }

    #[test]
    fn refuses_large_graphs() {
        let (g, m) = ring(11);
        let err = brute_force_teams(&g, &m, SizeBounds::new(3, 4), ObjectiveWeights::default())
            .unwrap_err();
        assert!(matches!(err, Error::TooLarge(11)));
    }

    #[test]
    fn every_rgs_is_a_distinct_partition() {
        // Bell(5) = 52
        let mut count = 0;
        let mut rgs = vec![0; 5];
        enumerate(&mut rgs, 1, 0, &mut |_| count += 1);
        assert_eq!(count, 52);
    }
}
