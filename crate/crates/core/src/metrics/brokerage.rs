//! Brokerage roles on directed two-paths.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{SocialGraph, StudentId};

/// Assignment of every student to a group label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPartition {
    labels: BTreeMap<StudentId, String>,
}

impl GroupPartition {
    pub fn new(labels: BTreeMap<StudentId, String>) -> Self {
        GroupPartition { labels }
    }

    /// Everyone in one group.
    pub fn single(g: &SocialGraph, label: &str) -> Self {
        GroupPartition {
            labels: g
                .ids()
                .iter()
                .map(|id| (id.clone(), label.to_owned()))
                .collect(),
        }
    }

    pub fn label(&self, id: &str) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn labels(&self) -> &BTreeMap<StudentId, String> {
        &self.labels
    }

    pub fn group_count(&self) -> usize {
        let mut groups: Vec<&String> = self.labels.values().collect();
        groups.sort();
        groups.dedup();
        groups.len()
    }

    /// Dense group index per canonical node index.
    pub fn group_indices(&self, g: &SocialGraph) -> Result<Vec<usize>> {
        let mut dense: HashMap<&str, usize> = HashMap::new();
        g.ids()
            .iter()
            .map(|id| {
                let label = self
                    .label(id)
                    .ok_or_else(|| Error::Data(format!("student `{id}` has no group")))?;
                let next = dense.len();
                Ok(*dense.entry(label).or_insert(next))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleCounts {
    pub coordinator: u64,
    pub gatekeeper: u64,
    pub representative: u64,
    pub consultant: u64,
    pub liaison: u64,
}

impl RoleCounts {
    pub fn as_array(&self) -> [u64; 5] {
        [
            self.coordinator,
            self.gatekeeper,
            self.representative,
            self.consultant,
            self.liaison,
        ]
    }

    pub fn total(&self) -> u64 {
        self.as_array().iter().sum()
    }

    pub fn add(&mut self, other: &RoleCounts) {
        self.coordinator += other.coordinator;
        self.gatekeeper += other.gatekeeper;
        self.representative += other.representative;
        self.consultant += other.consultant;
        self.liaison += other.liaison;
    }
}

/// Role of broker `b` on the two-path `i -> b -> k`, given group ids.
pub fn classify(gi: usize, gb: usize, gk: usize) -> Role {
    match (gi == gb, gb == gk, gi == gk) {
        (true, true, _) => Role::Coordinator,
        (false, true, _) => Role::Gatekeeper,
        (true, false, _) => Role::Representative,
        (false, false, true) => Role::Consultant,
        (false, false, false) => Role::Liaison,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Coordinator,
    Gatekeeper,
    Representative,
    Consultant,
    Liaison,
}

/// Count, for each node, how often it brokers each role across all directed
/// two-paths `i -> b -> k` with `i != k`.
pub fn brokerage_counts(g: &SocialGraph, partition: &GroupPartition) -> Result<Vec<RoleCounts>> {
    let groups = partition.group_indices(g)?;
    Ok(brokerage_with_groups(g, &groups))
}

pub(crate) fn brokerage_with_groups(g: &SocialGraph, groups: &[usize]) -> Vec<RoleCounts> {
    (0..g.node_count())
        .map(|b| {
            let mut c = RoleCounts::default();
            for &(i, _) in g.in_neighbors(b) {
                for &(k, _) in g.out_neighbors(b) {
                    if i == k {
                        continue;
                    }
                    match classify(groups[i], groups[b], groups[k]) {
                        Role::Coordinator => c.coordinator += 1,
                        Role::Gatekeeper => c.gatekeeper += 1,
                        Role::Representative => c.representative += 1,
                        Role::Consultant => c.consultant += 1,
                        Role::Liaison => c.liaison += 1,
                    }
                }
            }
            c
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> SocialGraph {
        SocialGraph::from_edges(Vec::<&str>::new(), [("A", "B", 1), ("B", "C", 1)]).unwrap()
    }

    fn partition(pairs: &[(&str, &str)]) -> GroupPartition {
        GroupPartition::new(
            pairs
                .iter()
                .map(|&(a, b)| (a.to_owned(), b.to_owned()))
                .collect(),
        )
    }

    #[test]
    fn single_group_coordinator() {
        let g = chain();
        let counts = brokerage_counts(&g, &GroupPartition::single(&g, "all")).unwrap();
        assert_eq!(counts[1].coordinator, 1);
        assert_eq!(counts[1].total(), 1);
        assert_eq!(counts[0].total() + counts[2].total(), 0);
    }

    #[test]
    fn representative_case() {
        let g = chain();
        let p = partition(&[("A", "g1"), ("B", "g1"), ("C", "g2")]);
        let counts = brokerage_counts(&g, &p).unwrap();
        assert_eq!(
            counts[1],
            RoleCounts {
                representative: 1,
                ..Default::default()
            }
        );
    }

    #[test]
    fn classification_table() {
        assert_eq!(classify(0, 0, 0), Role::Coordinator);
        assert_eq!(classify(1, 0, 0), Role::Gatekeeper);
        assert_eq!(classify(0, 0, 1), Role::Representative);
        assert_eq!(classify(0, 1, 0), Role::Consultant);
        assert_eq!(classify(0, 1, 2), Role::Liaison);
    }

    #[test]
    fn missing_group_is_named() {
        let g = chain();
        let err = brokerage_counts(&g, &partition(&[("A", "x"), ("B", "x")])).unwrap_err();
        assert!(err.to_string().contains("`C`"));
    }

    #[test]
    fn reciprocal_pair_is_not_a_two_path() {
        let g =
            SocialGraph::from_edges(Vec::<&str>::new(), [("A", "B", 1), ("B", "A", 1)]).unwrap();
        let counts = brokerage_counts(&g, &GroupPartition::single(&g, "x")).unwrap();
        assert!(counts.iter().all(|c| c.total() == 0));
    }
}
