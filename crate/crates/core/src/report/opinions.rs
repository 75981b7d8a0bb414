//! Aggregation of externally scored opinions per team.

use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::StudentId;
use crate::teams::TeamAssignment;

/// One opinion: a sentiment in `[-1, 1]` held by a student about an aspect
/// of an entity at a point in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionRecord {
    pub entity: String,
    pub aspect: String,
    pub sentiment: f64,
    pub holder: StudentId,
    pub time: u64,
}

impl OpinionRecord {
    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.sentiment) {
            return Err(Error::Data(format!(
                "sentiment {} outside [-1, 1]",
                self.sentiment
            )));
        }
        if self.holder.is_empty() {
            return Err(Error::Data("opinion holder is empty".into()));
        }
        Ok(())
    }
}

/// Read pre-scored opinions from JSON-Lines. Any invalid line fails the read.
pub fn parse_opinions<R: BufRead>(reader: R) -> Result<Vec<OpinionRecord>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: OpinionRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("opinion line {}: {e}", n + 1)))?;
        rec.validate()
            .map_err(|e| Error::Data(format!("opinion line {}: {e}", n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamOpinion {
    pub team: usize,
    pub count: usize,
    pub mean_sentiment: Option<f64>,
    pub earliest: Option<u64>,
    pub latest: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionSummary {
    pub teams: Vec<TeamOpinion>,
    /// Mean over all records whose holder is on a team.
    pub overall_mean: Option<f64>,
    pub counted: usize,
    /// Records whose holder is on no team.
    pub ignored: usize,
}

pub fn aggregate_opinions(
    records: &[OpinionRecord],
    assignment: &TeamAssignment,
) -> OpinionSummary {
    let team_of: HashMap<&str, usize> = assignment
        .teams
        .iter()
        .enumerate()
        .flat_map(|(t, members)| members.iter().map(move |s| (s.as_str(), t)))
        .collect();
    let mut sums = vec![0.0; assignment.teams.len()];
    let mut teams: Vec<TeamOpinion> = (0..assignment.teams.len())
        .map(|team| TeamOpinion {
            team,
            count: 0,
            mean_sentiment: None,
            earliest: None,
            latest: None,
        })
        .collect();
    let mut total = 0.0;
    let mut counted = 0;
    let mut ignored = 0;
    for r in records {
        let Some(&t) = team_of.get(r.holder.as_str()) else {
            ignored += 1;
            continue;
        };
        let entry = &mut teams[t];
        entry.count += 1;
        sums[t] += r.sentiment;
        entry.earliest = Some(entry.earliest.map_or(r.time, |e| e.min(r.time)));
        entry.latest = Some(entry.latest.map_or(r.time, |e| e.max(r.time)));
        total += r.sentiment;
        counted += 1;
    }
    for (entry, sum) in teams.iter_mut().zip(sums) {
        if entry.count > 0 {
            entry.mean_sentiment = Some(sum / entry.count as f64);
        }
    }
    OpinionSummary {
        teams,
        overall_mean: (counted > 0).then(|| total / counted as f64),
        counted,
        ignored,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::teams::{Breakdown, ObjectiveWeights, SizeBounds, TeamParams};

    pub(crate) fn roster(teams: &[&[&str]]) -> TeamAssignment {
        TeamAssignment {
            params: TeamParams {
                weights: ObjectiveWeights::default(),
                bounds: SizeBounds::new(2, 4),
                restarts: 1,
                iterations: 1,
            },
            seed: 0,
            objective: 0.0,
            breakdown: Breakdown::default(),
            teams: teams
                .iter()
                .map(|t| t.iter().map(|s| s.to_string()).collect())
                .collect(),
        }
    }

    fn op(holder: &str, sentiment: f64, time: u64) -> OpinionRecord {
        OpinionRecord {
            entity: "course".into(),
            aspect: "workload".into(),
            sentiment,
            holder: holder.into(),
            time,
        }
    }

    #[test]
    fn vacuous() {
        let s = aggregate_opinions(&[], &roster(&[&["a", "b"]]));
        assert_eq!(s.teams[0].count, 0);
        assert_eq!(s.teams[0].mean_sentiment, None);
        assert_eq!(s.overall_mean, None);
        assert_eq!((s.counted, s.ignored), (0, 0));
    }

    #[test]
    fn symmetric_mean_and_ignored_holders() {
        let recs = [op("a", 0.5, 30), op("b", -0.5, 10), op("zed", 1.0, 5)];
        let s = aggregate_opinions(&recs, &roster(&[&["a", "b"]]));
        assert_eq!(s.teams[0].mean_sentiment, Some(0.0));
        assert_eq!(
            (s.teams[0].earliest, s.teams[0].latest),
            (Some(10), Some(30))
        );
        assert_eq!((s.counted, s.ignored), (2, 1));
    }

    #[test]
    fn parse_validates() {
        let good = r#"{"entity":"e","aspect":"a","sentiment":-0.25,"holder":"s1","time":3}"#;
        assert_eq!(parse_opinions(good.as_bytes()).unwrap().len(), 1);
        let bad = r#"{"entity":"e","aspect":"a","sentiment":1.5,"holder":"s1","time":3}"#;
        assert!(parse_opinions(bad.as_bytes()).is_err());
        let empty_holder = r#"{"entity":"e","aspect":"a","sentiment":0.5,"holder":"","time":3}"#;
        assert!(parse_opinions(empty_holder.as_bytes()).is_err());
    }
}
