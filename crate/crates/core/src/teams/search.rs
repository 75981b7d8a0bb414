use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    canonical, to_assignment, ObjectiveWeights, SizeBounds, TeamAggregate, TeamAssignment,
    TeamParams, TeamScorer,
};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::metrics::NodeMetrics;

const IMPROVEMENT_EPS: f64 = 1e-12;

/// Multi-restart hill climbing over move and swap neighbourhoods.
///
/// Restart `r` uses seed `seed + r` and the `r`-th feasible team count
/// (cycling), starts from a random partition and applies first-improvement
/// moves until a full pass finds none or `iterations` passes have run. The
/// best restart wins; ties go to the canonically smallest partition, so
/// the result does not depend on how restarts are scheduled.
pub fn form_teams(
    g: &SocialGraph,
    metrics: &[NodeMetrics],
    bounds: SizeBounds,
    weights: ObjectiveWeights,
    restarts: usize,
    iterations: usize,
    seed: u64,
) -> Result<TeamAssignment> {
    let scorer = TeamScorer::new(g, metrics, weights)?;
    form_teams_scored(g, &scorer, bounds, restarts, iterations, seed)
}

/// [`form_teams`] with a prepared scorer, for callers that adjust
/// per-student contributions.
pub fn form_teams_scored(
    g: &SocialGraph,
    scorer: &TeamScorer,
    bounds: SizeBounds,
    restarts: usize,
    iterations: usize,
    seed: u64,
) -> Result<TeamAssignment> {
    bounds.validate()?;
    let n = g.node_count();
    if n < bounds.s_min {
        return Err(Error::param(format!(
            "{n} students cannot fill a team of {}",
            bounds.s_min
        )));
    }
    let counts = bounds.feasible_team_counts(n);
    if counts.is_empty() {
        return Err(Error::param(format!(
            "no partition of {n} students fits sizes [{}, {}]",
            bounds.s_min, bounds.s_max
        )));
    }
    if restarts == 0 {
        return Err(Error::param("restarts must be at least 1"));
    }
    if scorer.node_count() != g.node_count() {
        return Err(Error::Data(
            "scorer does not match the graph's nodes".into(),
        ));
    }

    let results: Vec<(f64, Vec<Vec<usize>>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let t = counts[r % counts.len()];
            let sizes = bounds.sizes_for(n, t).expect("count is feasible");
            let teams = climb(
                scorer,
                &bounds,
                initial(n, &sizes, &mut rng),
                iterations,
                &mut rng,
            );
            let teams = canonical(teams);
            let (obj, _) = scorer.evaluate(&teams).expect("feasible teams score");
            (obj, teams)
        })
        .collect();

    let best = results
        .into_iter()
        .reduce(|a, b| match b.0.total_cmp(&a.0) {
            std::cmp::Ordering::Greater => b,
            std::cmp::Ordering::Less => a,
            std::cmp::Ordering::Equal => {
                if b.1 < a.1 {
                    b
                } else {
                    a
                }
            }
        })
        .expect("at least one restart");
    let params = TeamParams {
        weights: scorer.weights(),
        bounds,
        restarts,
        iterations,
    };
    to_assignment(g, scorer, best.1, params, seed)
}

fn initial(n: usize, sizes: &[usize], rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut it = order.into_iter();
    sizes
        .iter()
        .map(|&s| it.by_ref().take(s).collect())
        .collect()
}

/// Hill climbing from `teams`. Every applied step strictly raises the
/// objective by more than `IMPROVEMENT_EPS`.
pub(crate) fn climb(
    scorer: &TeamScorer,
    bounds: &SizeBounds,
    mut teams: Vec<Vec<usize>>,
    passes: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    climb_traced(scorer, bounds, &mut teams, passes, rng, |_| {});
    teams
}

/// As [`climb`], calling `on_step` with the objective after every applied
/// step.
pub(crate) fn climb_traced(
    scorer: &TeamScorer,
    bounds: &SizeBounds,
    teams: &mut [Vec<usize>],
    passes: usize,
    rng: &mut ChaCha8Rng,
    mut on_step: impl FnMut(f64),
) {
    let k = teams.len();
    let mut team_of = vec![0usize; scorer.node_count()];
    for (t, members) in teams.iter().enumerate() {
        for &v in members {
            team_of[v] = t;
        }
    }
    let mut aggs: Vec<TeamAggregate> = teams.iter().map(|m| scorer.aggregate(m)).collect();
    let mut scores: Vec<f64> = aggs.iter().map(|a| scorer.score(a)).collect();
    let mut sizes: Vec<usize> = teams.iter().map(Vec::len).collect();
    let mut order: Vec<usize> = teams.iter().flatten().copied().collect();
    order.sort_unstable();

    for _ in 0..passes {
        let mut improved = false;
        order.shuffle(rng);
        for &x in &order {
            let a = team_of[x];
            let mut without_x = aggs[a];
            without_x.remove(scorer, x);
            'targets: for b in 0..k {
                if b == a {
                    continue;
                }
                // Move x from a to b.
                sizes[a] -= 1;
                sizes[b] += 1;
                let legal = without_x.size() >= 2 && bounds.is_feasible(&sizes);
                sizes[a] += 1;
                sizes[b] -= 1;
                if legal {
                    let mut with_x = aggs[b];
                    with_x.add(scorer, x);
                    let (sa, sb) = (scorer.score(&without_x), scorer.score(&with_x));
                    if sa + sb - scores[a] - scores[b] > IMPROVEMENT_EPS {
                        teams[a].retain(|&v| v != x);
                        teams[b].push(x);
                        team_of[x] = b;
                        sizes[a] -= 1;
                        sizes[b] += 1;
                        (aggs[a], aggs[b], scores[a], scores[b]) = (without_x, with_x, sa, sb);
                        improved = true;
                        on_step(scores.iter().sum::<f64>() / k as f64);
                        break 'targets;
                    }
                }
                // Swap x with each member y of b.
                for yi in 0..teams[b].len() {
                    let y = teams[b][yi];
                    let mut na = without_x;
                    na.add(scorer, y);
                    let mut nb = aggs[b];
                    nb.remove(scorer, y);
                    nb.add(scorer, x);
                    let (sa, sb) = (scorer.score(&na), scorer.score(&nb));
                    if sa + sb - scores[a] - scores[b] > IMPROVEMENT_EPS {
                        teams[a].retain(|&v| v != x);
                        teams[a].push(y);
                        teams[b][yi] = x;
                        team_of[x] = b;
                        team_of[y] = a;
                        (aggs[a], aggs[b], scores[a], scores[b]) = (na, nb, sa, sb);
                        improved = true;
                        on_step(scores.iter().sum::<f64>() / k as f64);
                        break 'targets;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
}
