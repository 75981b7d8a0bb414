//! Rank agreement between flow outcomes and centrality measures.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{simulate, DiffusionTrace, FlowSpec, Mechanism, Trajectory};
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::graph::{csv_err, SocialGraph};
use crate::metrics::NodeMetrics;

/// Which per-node flow outcome is ranked against a centrality measure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowOutcome {
    /// Earlier mean first arrival ranks higher; unreached nodes rank last.
    #[default]
    MeanArrival,
    /// More token visits rank higher.
    Receipts,
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation with mid-ranked ties. Zero when either side has no
/// rank variation.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman inputs must align");
    let (rx, ry) = (mid_ranks(x), mid_ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Spearman correlation between `metric` (one value per node, canonical
/// order) and the chosen flow outcome. Needs at least three reached nodes.
pub fn flow_centrality_correlation(
    trace: &DiffusionTrace,
    metric: &[f64],
    outcome: FlowOutcome,
) -> Result<f64> {
    if metric.len() != trace.students.len() {
        return Err(Error::Data(
            "metric and trace cover different node sets".into(),
        ));
    }
    if trace.reached_count() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} nodes reached; correlation needs at least 3",
            trace.reached_count()
        )));
    }
    let flow: Vec<f64> = match outcome {
        FlowOutcome::MeanArrival => trace
            .mean_arrival
            .iter()
            .map(|a| a.map_or(f64::NEG_INFINITY, |a| -a))
            .collect(),
        FlowOutcome::Receipts => trace.receipts.iter().map(|&r| r as f64).collect(),
    };
    Ok(spearman(metric, &flow))
}

pub const TYPOLOGY_COLUMNS: [&str; 4] = ["closeness", "eigencentrality", "pagerank", "degree"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypologyRow {
    pub mechanism: Mechanism,
    pub trajectory: Trajectory,
    /// One value per [`TYPOLOGY_COLUMNS`] entry; NaN where too few nodes
    /// were reached.
    pub correlations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypologyReport {
    pub outcome: FlowOutcome,
    pub rows: Vec<TypologyRow>,
}

/// Correlate each flow with closeness (negated farness), eigenvector
/// centrality, PageRank and total degree.
pub fn typology_report(
    g: &SocialGraph,
    specs: &[FlowSpec],
    metrics: &[NodeMetrics],
    outcome: FlowOutcome,
) -> Result<TypologyReport> {
    if specs.is_empty() {
        return Err(Error::param("typology report needs at least one flow"));
    }
    if metrics.len() != g.node_count() {
        return Err(Error::Data(
            "metrics table does not match the graph's nodes".into(),
        ));
    }
    let columns: [Vec<f64>; 4] = [
        metrics.iter().map(|m| -m.farness).collect(),
        metrics.iter().map(|m| m.eigencentrality).collect(),
        metrics.iter().map(|m| m.pagerank).collect(),
        (0..g.node_count())
            .map(|v| (g.in_degree(v) + g.out_degree(v)) as f64)
            .collect(),
    ];
    let rows = specs
        .iter()
        .map(|spec| {
            let trace = simulate(g, spec)?;
            let correlations = columns
                .iter()
                .map(|col| flow_centrality_correlation(&trace, col, outcome).unwrap_or(f64::NAN))
                .collect();
            Ok(TypologyRow {
                mechanism: spec.mechanism,
                trajectory: spec.trajectory,
                correlations,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TypologyReport { outcome, rows })
}

pub fn write_typology_csv<W: Write>(writer: W, report: &TypologyReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["mechanism", "trajectory"];
    header.extend(TYPOLOGY_COLUMNS);
    w.write_record(&header).map_err(csv_err)?;
    for row in &report.rows {
        let mut rec = vec![
            row.mechanism.label().to_owned(),
            row.trajectory.label().to_owned(),
        ];
        rec.extend(
            row.correlations
                .iter()
                .map(|&c| if c.is_nan() { "NA".to_owned() } else { sig9(c) }),
        );
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
