//! Team scoring and team formation.
//!
//! A team is scored on three terms computed from per-student metrics:
//! collaboration cost (lower is better), structural-hole richness and the
//! balance of brokerage roles among its members. An assignment's objective
//! is the mean weighted team score.

mod exhaustive;
mod search;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use exhaustive::{brute_force_teams, BruteForce};
pub use search::{form_teams, form_teams_scored};

use crate::error::{Error, Result};
use crate::graph::{SocialGraph, StudentId};
use crate::metrics::{NodeMetrics, RoleCounts};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub w_cost: f64,
    pub w_hole: f64,
    pub w_balance: f64,
}

impl ObjectiveWeights {
    pub fn new(w_cost: f64, w_hole: f64, w_balance: f64) -> Result<Self> {
        let w = ObjectiveWeights {
            w_cost,
            w_hole,
            w_balance,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.w_cost, self.w_hole, self.w_balance];
        if ws.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::param("objective weights must lie in [0, 1]"));
        }
        if (ws.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::param("objective weights must sum to 1"));
        }
        Ok(())
    }
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            w_cost: 1.0 / 3.0,
            w_hole: 1.0 / 3.0,
            w_balance: 1.0 / 3.0,
        }
    }
}

/// What to do when the students do not divide evenly into teams within
/// the size bounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemainderPolicy {
    /// Allow one team of size `2..s_min`.
    #[default]
    SmallerTeam,
    /// Allow one team of size `s_max+1 ..= s_max+s_min-1`.
    LargerTeam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeBounds {
    pub s_min: usize,
    pub s_max: usize,
    #[serde(default)]
    pub remainder: RemainderPolicy,
}

impl SizeBounds {
    pub fn new(s_min: usize, s_max: usize) -> Self {
        SizeBounds {
            s_min,
            s_max,
            remainder: RemainderPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_min < 2 || self.s_max < self.s_min {
            return Err(Error::param(format!(
                "team size bounds [{}, {}] need 2 <= s_min <= s_max",
                self.s_min, self.s_max
            )));
        }
        Ok(())
    }

    fn off_size(&self, size: usize) -> bool {
        match self.remainder {
            RemainderPolicy::SmallerTeam => (2..self.s_min).contains(&size),
            RemainderPolicy::LargerTeam => {
                (self.s_max + 1..self.s_max + self.s_min).contains(&size)
            }
        }
    }

    /// Every size within bounds except at most one remainder team.
    pub fn is_feasible(&self, sizes: &[usize]) -> bool {
        let mut off = 0;
        for &s in sizes {
            if (self.s_min..=self.s_max).contains(&s) {
                continue;
            }
            if self.off_size(s) {
                off += 1;
            } else {
                return false;
            }
        }
        off <= 1
    }

    /// A feasible list of team sizes for `n` students in exactly `teams`
    /// teams, if one exists.
    pub fn sizes_for(&self, n: usize, teams: usize) -> Option<Vec<usize>> {
        if teams == 0 {
            return None;
        }
        let balanced = |n: usize, t: usize| -> Option<Vec<usize>> {
            if t == 0 {
                return (n == 0).then(Vec::new);
            }
            (t * self.s_min <= n && n <= t * self.s_max)
                .then(|| (0..t).map(|i| n / t + usize::from(i < n % t)).collect())
        };
        if let Some(s) = balanced(n, teams) {
            return Some(s);
        }
        let odd: Vec<usize> = match self.remainder {
            RemainderPolicy::SmallerTeam => (2..self.s_min).rev().collect(),
            RemainderPolicy::LargerTeam => (self.s_max + 1..self.s_max + self.s_min).collect(),
        };
        odd.into_iter().find_map(|r| {
            let rest = n.checked_sub(r)?;
            let mut s = balanced(rest, teams - 1)?;
            s.push(r);
            Some(s)
        })
    }

    /// Team counts for which [`sizes_for`](Self::sizes_for) succeeds.
    pub fn feasible_team_counts(&self, n: usize) -> Vec<usize> {
        (1..=n / 2)
            .filter(|&t| self.sizes_for(n, t).is_some())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    /// Mean collaboration cost over teams.
    pub cost_term: f64,
    /// Mean structural-hole score over teams.
    pub hole_term: f64,
    /// Mean brokerage balance over teams.
    pub balance_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamParams {
    pub weights: ObjectiveWeights,
    pub bounds: SizeBounds,
    pub restarts: usize,
    pub iterations: usize,
}

/// A partition of students into teams with its score. Members and teams are
/// sorted canonically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamAssignment {
    pub params: TeamParams,
    pub seed: u64,
    pub objective: f64,
    pub breakdown: Breakdown,
    pub teams: Vec<Vec<StudentId>>,
}

impl TeamAssignment {
    pub fn team_of(&self, student: &str) -> Option<usize> {
        self.teams
            .iter()
            .position(|t| t.iter().any(|s| s == student))
    }

    pub fn student_count(&self) -> usize {
        self.teams.iter().map(Vec::len).sum()
    }
}

/// Normalised Shannon entropy of pooled role counts, in `[0, 1]`.
pub fn role_entropy(pooled: &[u64; 5]) -> f64 {
    let total: u64 = pooled.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let h: f64 = pooled
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            -p * p.ln()
        })
        .sum();
    (h / 5f64.ln()).max(0.0)
}

/// Per-student contributions to the team terms.
#[derive(Debug, Clone)]
pub struct TeamScorer {
    weights: ObjectiveWeights,
    cost: Vec<f64>,
    hole: Vec<f64>,
    roles: Vec<[u64; 5]>,
}

impl TeamScorer {
    /// `metrics` must hold one row per graph node in canonical order.
    pub fn new(
        g: &SocialGraph,
        metrics: &[NodeMetrics],
        weights: ObjectiveWeights,
    ) -> Result<Self> {
        weights.validate()?;
        if metrics.len() != g.node_count()
            || metrics.iter().zip(g.ids()).any(|(m, id)| &m.student != id)
        {
            return Err(Error::Data(
                "metrics table does not match the graph's nodes".into(),
            ));
        }
        let max_far = metrics.iter().map(|m| m.farness).fold(0.0, f64::max);
        let max_clust = metrics.iter().map(|m| m.clustering).fold(0.0, f64::max);
        let norm = |x: f64, max: f64| if max > 0.0 { x / max } else { 0.0 };
        let cost = metrics
            .iter()
            .map(|m| (norm(m.farness, max_far) + 1.0 - norm(m.clustering, max_clust)) / 2.0)
            .collect();
        let hole = metrics
            .iter()
            .enumerate()
            .map(|(v, m)| {
                if g.neighbors(v).is_empty() {
                    1.0
                } else {
                    1.0 / (1.0 + m.constraint)
                }
            })
            .collect();
        let roles = metrics.iter().map(|m| m.brokerage.as_array()).collect();
        Ok(TeamScorer {
            weights,
            cost,
            hole,
            roles,
        })
    }

    /// Add external per-student costs (conative profile mismatch, say) to
    /// the collaboration-cost contributions. Students absent from the map
    /// add nothing.
    pub fn with_attribute_costs(
        mut self,
        g: &SocialGraph,
        costs: &BTreeMap<StudentId, f64>,
    ) -> Result<Self> {
        for (student, &c) in costs {
            if !c.is_finite() {
                return Err(Error::param(format!(
                    "attribute cost of `{student}` is not finite"
                )));
            }
            self.cost[g.require(student)?] += c;
        }
        Ok(self)
    }

    pub fn weights(&self) -> ObjectiveWeights {
        self.weights
    }

    pub fn node_count(&self) -> usize {
        self.cost.len()
    }

    pub(crate) fn aggregate(&self, members: &[usize]) -> TeamAggregate {
        let mut agg = TeamAggregate::default();
        for &v in members {
            agg.add(self, v);
        }
        agg
    }

    pub(crate) fn score(&self, agg: &TeamAggregate) -> f64 {
        let (cost, hole, balance) = agg.terms();
        self.weights.w_hole * hole + self.weights.w_balance * balance - self.weights.w_cost * cost
    }

    /// Objective and breakdown of a partition given as node indices.
    pub fn evaluate(&self, teams: &[Vec<usize>]) -> Result<(f64, Breakdown)> {
        if teams.is_empty() {
            return Err(Error::param("an assignment needs at least one team"));
        }
        let mut sum = 0.0;
        let mut b = Breakdown::default();
        for t in teams {
            if t.len() < 2 {
                return Err(Error::param("every team needs at least two members"));
            }
            let agg = self.aggregate(t);
            let (cost, hole, balance) = agg.terms();
            sum += self.score(&agg);
            b.cost_term += cost;
            b.hole_term += hole;
            b.balance_term += balance;
        }
        let k = teams.len() as f64;
        b.cost_term /= k;
        b.hole_term /= k;
        b.balance_term /= k;
        Ok((sum / k, b))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct TeamAggregate {
    size: usize,
    cost: f64,
    hole: f64,
    roles: [u64; 5],
}

impl TeamAggregate {
    pub(crate) fn add(&mut self, s: &TeamScorer, v: usize) {
        self.size += 1;
        self.cost += s.cost[v];
        self.hole += s.hole[v];
        for (r, c) in self.roles.iter_mut().zip(&s.roles[v]) {
            *r += c;
        }
    }

    pub(crate) fn remove(&mut self, s: &TeamScorer, v: usize) {
        self.size -= 1;
        self.cost -= s.cost[v];
        self.hole -= s.hole[v];
        for (r, c) in self.roles.iter_mut().zip(&s.roles[v]) {
            *r -= c;
        }
    }

    pub(crate) fn size(&self) -> usize {
        self.size
    }

    /// (cost, hole, balance) means for the team.
    fn terms(&self) -> (f64, f64, f64) {
        let n = self.size as f64;
        (self.cost / n, self.hole / n, role_entropy(&self.roles))
    }
}

fn resolve_team(g: &SocialGraph, team: &[StudentId]) -> Result<Vec<usize>> {
    let members: BTreeSet<usize> = team.iter().map(|s| g.require(s)).collect::<Result<_>>()?;
    Ok(members.into_iter().collect())
}

/// Mean over members of `(farness/max farness + 1 - clustering/max
/// clustering) / 2`. Lower is better.
pub fn collaboration_cost(
    g: &SocialGraph,
    team: &[StudentId],
    metrics: &[NodeMetrics],
) -> Result<f64> {
    let members = resolve_team(g, team)?;
    if members.len() < 2 {
        return Err(Error::param(
            "collaboration cost needs at least two members",
        ));
    }
    let s = TeamScorer::new(g, metrics, ObjectiveWeights::default())?;
    Ok(members.iter().map(|&v| s.cost[v]).sum::<f64>() / members.len() as f64)
}

/// Mean over members of `1 / (1 + constraint)`; isolated members count 1.
pub fn structural_hole_score(
    g: &SocialGraph,
    team: &[StudentId],
    metrics: &[NodeMetrics],
) -> Result<f64> {
    let members = resolve_team(g, team)?;
    if members.is_empty() {
        return Err(Error::param("structural-hole score of an empty team"));
    }
    let s = TeamScorer::new(g, metrics, ObjectiveWeights::default())?;
    Ok(members.iter().map(|&v| s.hole[v]).sum::<f64>() / members.len() as f64)
}

/// Normalised entropy of the team's pooled brokerage role counts.
pub fn brokerage_balance<'a>(team: impl IntoIterator<Item = &'a RoleCounts>) -> f64 {
    let mut pooled = RoleCounts::default();
    for c in team {
        pooled.add(c);
    }
    role_entropy(&pooled.as_array())
}

/// Mean weighted team score of an assignment.
pub fn objective(
    g: &SocialGraph,
    teams: &[Vec<StudentId>],
    weights: ObjectiveWeights,
    metrics: &[NodeMetrics],
) -> Result<f64> {
    let scorer = TeamScorer::new(g, metrics, weights)?;
    let indexed: Vec<Vec<usize>> = teams
        .iter()
        .map(|t| resolve_team(g, t))
        .collect::<Result<_>>()?;
    let mut seen = BTreeSet::new();
    for v in indexed.iter().flatten() {
        if !seen.insert(*v) {
            return Err(Error::param(format!(
                "student `{}` is in more than one team",
                g.id(*v)
            )));
        }
    }
    scorer.evaluate(&indexed).map(|(o, _)| o)
}

/// Sort members and teams; teams are ordered by their smallest member.
pub(crate) fn canonical(mut teams: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    teams.iter_mut().for_each(|t| t.sort_unstable());
    teams.retain(|t| !t.is_empty());
    teams.sort();
    teams
}

pub(crate) fn to_assignment(
    g: &SocialGraph,
    scorer: &TeamScorer,
    teams: Vec<Vec<usize>>,
    params: TeamParams,
    seed: u64,
) -> Result<TeamAssignment> {
    let teams = canonical(teams);
    let (objective, breakdown) = scorer.evaluate(&teams)?;
    Ok(TeamAssignment {
        params,
        seed,
        objective,
        breakdown,
        teams: teams
            .iter()
            .map(|t| t.iter().map(|&v| g.id(v).to_owned()).collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{compute_metrics, MetricsOptions};

    fn ids(xs: &[&str]) -> Vec<StudentId> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn balance_examples() {
        let c = |a: [u64; 5]| RoleCounts {
            coordinator: a[0],
            gatekeeper: a[1],
            representative: a[2],
            consultant: a[3],
            liaison: a[4],
        };
        assert!((brokerage_balance([&c([4, 4, 4, 4, 4])]) - 1.0).abs() < 1e-15);
        assert_eq!(brokerage_balance([&c([9, 0, 0, 0, 0])]), 0.0);
        let v = brokerage_balance([&c([1, 2, 0, 0, 0]), &c([1, 0, 0, 0, 0])]);
        assert!((v - 2f64.ln() / 5f64.ln()).abs() < 1e-15);
        assert!((v - 0.4307).abs() < 1e-4);
        assert_eq!(brokerage_balance([&c([0; 5])]), 0.0);
        assert_eq!(brokerage_balance(std::iter::empty()), 0.0);
    }

    #[test]
    fn weights_validation() {
        assert!(ObjectiveWeights::new(1.0, 0.0, 0.0).is_ok());
        assert!(ObjectiveWeights::new(0.5, 0.5, 0.5).is_err());
        assert!(ObjectiveWeights::new(1.5, -0.5, 0.0).is_err());
        ObjectiveWeights::default().validate().unwrap();
    }

    #[test]
    fn size_feasibility() {
        let b = SizeBounds::new(3, 4);
        assert!(b.is_feasible(&[3, 4]));
        assert!(b.is_feasible(&[3, 3, 2]));
        assert!(!b.is_feasible(&[2, 2, 4]));
        assert!(!b.is_feasible(&[1, 3, 4]));
        assert!(!b.is_feasible(&[5, 3]));
        assert_eq!(b.feasible_team_counts(8), [2, 3]);
        assert_eq!(b.sizes_for(8, 3), Some(vec![3, 3, 2]));
        let fixed = SizeBounds::new(3, 3);
        assert_eq!(fixed.feasible_team_counts(7), Vec::<usize>::new());
        let larger = SizeBounds {
            remainder: RemainderPolicy::LargerTeam,
            ..fixed
        };
        assert_eq!(larger.sizes_for(7, 2), Some(vec![3, 4]));
        assert!(SizeBounds::new(1, 3).validate().is_err());
        assert!(SizeBounds::new(4, 3).validate().is_err());
    }

    #[test]
    fn dyad_cost_and_holes() {
        let g =
            SocialGraph::from_edges(Vec::<&str>::new(), [("A", "B", 1), ("B", "A", 1)]).unwrap();
        let m = compute_metrics(&g, &MetricsOptions::default()).unwrap();
        // farness 1 = max, clustering 0 = max: ((1/1) + 1 - 0) / 2
        assert_eq!(collaboration_cost(&g, &ids(&["A", "B"]), &m).unwrap(), 1.0);
        assert_eq!(
            structural_hole_score(&g, &ids(&["A", "B"]), &m).unwrap(),
            0.5
        );
        assert!(collaboration_cost(&g, &ids(&["A"]), &m).is_err());
        assert!(structural_hole_score(&g, &[], &m).is_err());
        assert!(matches!(
            collaboration_cost(&g, &ids(&["A", "Q"]), &m),
            Err(Error::MissingNode(_))
        ));
    }

    #[test]
    fn isolated_members_are_unconstrained() {
        let g = SocialGraph::from_edges(["X", "Y"], [("A", "B", 1)]).unwrap();
        let m = compute_metrics(&g, &MetricsOptions::default()).unwrap();
        assert_eq!(
            structural_hole_score(&g, &ids(&["X", "Y"]), &m).unwrap(),
            1.0
        );
    }

    #[test]
    fn cost_only_objective_is_negated_mean_cost() {
        let g = SocialGraph::from_edges(
            Vec::<&str>::new(),
            [
                ("A", "B", 1),
                ("B", "C", 2),
                ("C", "A", 1),
                ("C", "D", 1),
                ("D", "A", 3),
            ],
        )
        .unwrap();
        let m = compute_metrics(&g, &MetricsOptions::default()).unwrap();
        let teams = vec![ids(&["A", "B"]), ids(&["C", "D"])];
        let w = ObjectiveWeights::new(1.0, 0.0, 0.0).unwrap();
        let o = objective(&g, &teams, w, &m).unwrap();
        let mean = (collaboration_cost(&g, &teams[0], &m).unwrap()
            + collaboration_cost(&g, &teams[1], &m).unwrap())
            / 2.0;
        assert!((o + mean).abs() < 1e-12);
        let overlapping = vec![ids(&["A", "B"]), ids(&["B", "C"])];
        assert!(objective(&g, &overlapping, w, &m).is_err());
    }
}
