//! Per-student network metrics.

mod brokerage;
mod rank;
mod rewire;
mod structure;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use brokerage::{brokerage_counts, classify, GroupPartition, Role, RoleCounts};
pub use rank::{
    eigencentrality, hits, normalize_by_max, pagerank, EigenVariant, Hits, IterParams,
    PageRankParams, Ranking,
};
pub use rewire::{rewire_objective, rewire_optimize, RewireParams, RewireResult};
pub use structure::{
    average_clustering, average_finite_distance, burt_constraint, clustering_coefficient,
    effective_size, farness, PenaltyPolicy,
};

use crate::error::Result;
use crate::format::sig9;
use crate::graph::{csv_err, SocialGraph, StudentId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMetrics {
    pub student: StudentId,
    pub pagerank: f64,
    pub authority: f64,
    pub hub: f64,
    pub farness: f64,
    pub clustering: f64,
    pub eigencentrality: f64,
    /// Zero for isolated students, who are treated as unconstrained.
    pub constraint: f64,
    /// Zero for isolated students.
    pub effective_size: f64,
    pub brokerage: RoleCounts,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsOptions {
    pub pagerank: PageRankParams,
    pub iteration: IterParams,
    pub eigen_variant: EigenVariant,
    pub penalty: PenaltyPolicy,
}

/// Every metric except brokerage (which needs a group partition) for all
/// nodes, in canonical node order. Scores that are undefined on an
/// edgeless graph (HITS, eigenvector centrality) are reported as zero.
pub fn compute_metrics(g: &SocialGraph, opts: &MetricsOptions) -> Result<Vec<NodeMetrics>> {
    let n = g.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let pr = pagerank(g, opts.pagerank)?;
    let (authority, hub, eigen) = if g.edge_count() > 0 {
        let h = hits(g, opts.iteration)?;
        let e = eigencentrality(g, opts.iteration, opts.eigen_variant)?;
        (h.authority.scores, h.hub.scores, e.scores)
    } else {
        (vec![0.0; n], vec![0.0; n], vec![0.0; n])
    };
    let ties = structure::SymmetricTies::new(g);
    let rows = (0..n)
        .into_par_iter()
        .map(|v| NodeMetrics {
            student: g.id(v).to_owned(),
            pagerank: pr.scores[v],
            authority: authority[v],
            hub: hub[v],
            farness: structure::farness_of(g, v, opts.penalty),
            clustering: structure::clustering_of(g, v),
            eigencentrality: eigen[v],
            constraint: ties.constraint(v).unwrap_or(0.0),
            effective_size: ties.effective_size(v).unwrap_or(0.0),
            brokerage: RoleCounts::default(),
        })
        .collect();
    Ok(rows)
}

pub fn attach_brokerage(rows: &mut [NodeMetrics], counts: &[RoleCounts]) {
    for (row, c) in rows.iter_mut().zip(counts) {
        row.brokerage = *c;
    }
}

pub const METRICS_HEADER: [&str; 14] = [
    "student",
    "pagerank",
    "authority",
    "hub",
    "farness",
    "clustering",
    "eigencentrality",
    "constraint",
    "effective_size",
    "coordinator",
    "gatekeeper",
    "representative",
    "consultant",
    "liaison",
];

pub fn write_metrics_csv<W: Write>(writer: W, rows: &[NodeMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(METRICS_HEADER).map_err(csv_err)?;
    for r in rows {
        let b = r.brokerage;
        let mut rec = vec![r.student.clone()];
        rec.extend(
            [
                r.pagerank,
                r.authority,
                r.hub,
                r.farness,
                r.clustering,
                r.eigencentrality,
                r.constraint,
                r.effective_size,
            ]
            .map(sig9),
        );
        rec.extend(
            [
                b.coordinator,
                b.gatekeeper,
                b.representative,
                b.consultant,
                b.liaison,
            ]
            .map(|c| c.to_string()),
        );
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_for_triad_and_isolate() {
        let g = SocialGraph::from_edges(
            ["Z"],
            [
                ("A", "B", 1),
                ("B", "A", 1),
                ("A", "C", 1),
                ("C", "A", 1),
                ("B", "C", 1),
                ("C", "B", 1),
            ],
        )
        .unwrap();
        let mut rows = compute_metrics(&g, &MetricsOptions::default()).unwrap();
        let counts = brokerage_counts(&g, &GroupPartition::single(&g, "g")).unwrap();
        attach_brokerage(&mut rows, &counts);
        assert_eq!(rows.len(), 4);
        assert!((rows.iter().map(|r| r.pagerank).sum::<f64>() - 1.0).abs() < 1e-9);
        let z = &rows[3];
        assert_eq!(z.student, "Z");
        assert_eq!(
            (z.constraint, z.effective_size, z.clustering),
            (0.0, 0.0, 0.0)
        );
        assert_eq!(z.farness, 12.0);
        assert!((rows[0].constraint - 1.125).abs() < 1e-12);
        assert_eq!(rows[0].brokerage.coordinator, 2);

        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), METRICS_HEADER.join(","));
        assert_eq!(lines.clone().count(), 4);
        assert!(lines.next().unwrap().starts_with("A,"));
    }

    #[test]
    fn empty_and_edgeless() {
        assert!(
            compute_metrics(&SocialGraph::default(), &MetricsOptions::default())
                .unwrap()
                .is_empty()
        );
        let g = SocialGraph::from_edges(["A", "B"], Vec::<(&str, &str, u64)>::new()).unwrap();
        let rows = compute_metrics(&g, &MetricsOptions::default()).unwrap();
        assert_eq!(rows[0].pagerank, 0.5);
        assert_eq!(rows[0].authority, 0.0);
    }
}
