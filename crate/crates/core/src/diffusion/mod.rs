//! Discrete-time information flow over the reply graph.
//!
//! A flow is a mechanism (how an item is passed on) crossed with a
//! trajectory (which routes a single copy may take). Every copy of an item
//! is a token carrying its own route, inherited from its parent when
//! copied. All tokens act simultaneously once per step.

mod correlation;

use std::io::Write;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use correlation::{
    flow_centrality_correlation, spearman, typology_report, write_typology_csv, FlowOutcome,
    TypologyReport, TypologyRow, TYPOLOGY_COLUMNS,
};

use crate::error::{Error, Result};
use crate::graph::{csv_err, SocialGraph, StudentId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    /// The item leaves the sender.
    Transfer,
    /// The holder keeps the item and copies it to one neighbour per step.
    SerialDup,
    /// The holder copies the item to every eligible neighbour at once.
    ParallelDup,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [
        Mechanism::Transfer,
        Mechanism::SerialDup,
        Mechanism::ParallelDup,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Mechanism::Transfer => "transfer",
            Mechanism::SerialDup => "serial-dup",
            Mechanism::ParallelDup => "parallel-dup",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trajectory {
    /// Only hops that stay on a shortest path from the token's origin.
    Geodesic,
    /// No node visited twice by one token.
    Path,
    /// No directed edge used twice by one token.
    Trail,
    /// Unrestricted.
    Walk,
}

impl Trajectory {
    pub const ALL: [Trajectory; 4] = [
        Trajectory::Geodesic,
        Trajectory::Path,
        Trajectory::Trail,
        Trajectory::Walk,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Trajectory::Geodesic => "geodesic",
            Trajectory::Path => "path",
            Trajectory::Trail => "trail",
            Trajectory::Walk => "walk",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopChoice {
    /// Random hops favour heavier edges in proportion to weight.
    #[default]
    WeightProportional,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub mechanism: Mechanism,
    pub trajectory: Trajectory,
    pub sources: Vec<StudentId>,
    /// `None` for a targetless flow that runs until `max_steps`.
    #[serde(default)]
    pub target: Option<StudentId>,
    pub max_steps: u32,
    pub replications: u32,
    pub seed: u64,
    /// Bound on live tokens; `None` means ten times the node count.
    #[serde(default)]
    pub copy_cap: Option<usize>,
    #[serde(default)]
    pub hop_choice: HopChoice,
}

impl FlowSpec {
    pub fn new(mechanism: Mechanism, trajectory: Trajectory, sources: Vec<StudentId>) -> Self {
        FlowSpec {
            mechanism,
            trajectory,
            sources,
            target: None,
            max_steps: 10,
            replications: 100,
            seed: 0,
            copy_cap: None,
            hop_choice: HopChoice::default(),
        }
    }

    pub fn effective_cap(&self, g: &SocialGraph) -> usize {
        self.copy_cap.unwrap_or(10 * g.node_count())
    }
}

/// Per-node results of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub first_arrival: Vec<Option<u32>>,
    pub receipts: Vec<u64>,
    pub steps_run: u32,
    pub cap_hit: bool,
    /// Tokens were still active when the step budget ran out.
    pub step_limit_hit: bool,
    /// Live tokens after each step (index 0 is the start).
    pub live_per_step: Vec<usize>,
    /// Informed nodes after each step (index 0 is the start).
    pub informed_per_step: Vec<usize>,
    /// Route of every token ever created, when requested.
    pub routes: Option<Vec<Vec<usize>>>,
}

/// Replications merged: minimum first arrival, mean arrival over the
/// replications that reached each node, total receipts.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionTrace {
    pub spec: FlowSpec,
    pub students: Vec<StudentId>,
    pub first_arrival: Vec<Option<u32>>,
    pub mean_arrival: Vec<Option<f64>>,
    pub reached_in: Vec<u32>,
    pub receipts: Vec<u64>,
    pub steps_run: u32,
    pub truncated: bool,
}

impl DiffusionTrace {
    pub fn reached_count(&self) -> usize {
        self.first_arrival.iter().filter(|a| a.is_some()).count()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["student", "first_arrival", "receipts"])
            .map_err(csv_err)?;
        for (i, s) in self.students.iter().enumerate() {
            let arrival =
                self.first_arrival[i].map_or_else(|| "NEVER".to_owned(), |a| a.to_string());
            w.write_record([s.as_str(), &arrival, &self.receipts[i].to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Token {
    /// Index into the resolved source list.
    origin: usize,
    at: usize,
    route: Vec<usize>,
}

struct Resolved {
    sources: Vec<usize>,
    target: Option<usize>,
    /// Hop distances from each source; only filled for geodesic flows.
    source_dist: Vec<Vec<Option<u32>>>,
    cap: usize,
}

fn resolve(g: &SocialGraph, spec: &FlowSpec) -> Result<Resolved> {
    if spec.sources.is_empty() {
        return Err(Error::param("a flow needs at least one source"));
    }
    if spec.max_steps == 0 || spec.replications == 0 {
        return Err(Error::param(
            "max_steps and replications must be at least 1",
        ));
    }
    let mut sources = spec
        .sources
        .iter()
        .map(|s| g.require(s))
        .collect::<Result<Vec<_>>>()?;
    sources.sort_unstable();
    sources.dedup();
    let cap = spec.effective_cap(g);
    if cap < sources.len() {
        return Err(Error::param(format!(
            "copy cap {cap} is below the number of sources"
        )));
    }
    let target = spec.target.as_deref().map(|t| g.require(t)).transpose()?;
    let source_dist = if spec.trajectory == Trajectory::Geodesic {
        sources.iter().map(|&s| g.hop_distances(s)).collect()
    } else {
        Vec::new()
    };
    Ok(Resolved {
        sources,
        target,
        source_dist,
        cap,
    })
}

fn eligible(
    g: &SocialGraph,
    spec: &FlowSpec,
    r: &Resolved,
    tok: &Token,
    out: &mut Vec<(usize, u64)>,
) {
    out.clear();
    let here = tok.at;
    for &(v, w) in g.out_neighbors(here) {
        let ok = match spec.trajectory {
            Trajectory::Walk => true,
            Trajectory::Path => !tok.route.contains(&v),
            Trajectory::Trail => !tok.route.windows(2).any(|e| e[0] == here && e[1] == v),
            Trajectory::Geodesic => {
                let d = &r.source_dist[tok.origin];
                matches!((d[here], d[v]), (Some(a), Some(b)) if b == a + 1)
            }
        };
        if ok {
            out.push((v, w));
        }
    }
}

fn pick(rng: &mut ChaCha8Rng, choice: HopChoice, options: &[(usize, u64)]) -> usize {
    match choice {
        HopChoice::Uniform => options[rng.random_range(0..options.len())].0,
        HopChoice::WeightProportional => {
            let total: u64 = options.iter().map(|&(_, w)| w).sum();
            let mut x = rng.random_range(0..total);
            for &(v, w) in options {
                if x < w {
                    return v;
                }
                x -= w;
            }
            unreachable!("x < total")
        }
    }
}

/// Run one replication with its own seed.
pub fn simulate_once(
    g: &SocialGraph,
    spec: &FlowSpec,
    seed: u64,
    record_routes: bool,
) -> Result<Replication> {
    let r = resolve(g, spec)?;
    Ok(run(g, spec, &r, seed, record_routes))
}

fn run(
    g: &SocialGraph,
    spec: &FlowSpec,
    r: &Resolved,
    seed: u64,
    record_routes: bool,
) -> Replication {
    let n = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep_route =
        record_routes || matches!(spec.trajectory, Trajectory::Path | Trajectory::Trail);

    let mut first_arrival = vec![None; n];
    let mut receipts = vec![0u64; n];
    let mut informed = 0usize;
    let mut finished: Vec<Vec<usize>> = Vec::new();
    let mut tokens: Vec<Token> = Vec::with_capacity(r.sources.len());
    for (o, &s) in r.sources.iter().enumerate() {
        first_arrival[s] = Some(0);
        receipts[s] += 1;
        informed += 1;
        let tok = Token {
            origin: o,
            at: s,
            route: vec![s],
        };
        if r.target == Some(s) {
            finished.push(tok.route);
        } else {
            tokens.push(tok);
        }
    }

    let mut live_per_step = vec![tokens.len()];
    let mut informed_per_step = vec![informed];
    let mut cap_hit = false;
    let mut steps_run = 0;
    let mut options = Vec::new();

    for step in 1..=spec.max_steps {
        if tokens.is_empty() {
            break;
        }
        // Children are kept as (parent, node) pairs and only turned into
        // tokens once the cap has decided which of them survive.
        let mut stays = vec![false; tokens.len()];
        let mut children: Vec<(usize, usize)> = Vec::new();
        for (pi, tok) in tokens.iter().enumerate() {
            eligible(g, spec, r, tok, &mut options);
            if options.is_empty() {
                continue;
            }
            match spec.mechanism {
                Mechanism::Transfer => {
                    children.push((pi, pick(&mut rng, spec.hop_choice, &options)))
                }
                Mechanism::SerialDup => {
                    stays[pi] = true;
                    children.push((pi, pick(&mut rng, spec.hop_choice, &options)));
                }
                Mechanism::ParallelDup => children.extend(options.iter().map(|&(v, _)| (pi, v))),
            }
        }
        if children.is_empty() {
            break;
        }
        steps_run = step;
        for &(_, v) in &children {
            receipts[v] += 1;
            if first_arrival[v].is_none() {
                first_arrival[v] = Some(step);
                informed += 1;
            }
        }

        let spawn = |parent: &Token, v: usize| {
            let mut route = if keep_route {
                parent.route.clone()
            } else {
                Vec::new()
            };
            if keep_route {
                route.push(v);
            }
            Token {
                origin: parent.origin,
                at: v,
                route,
            }
        };
        if record_routes {
            // Stuck tokens, retired broadcasters and arrivals at the target
            // are finished. A moved token's old route is a prefix of its
            // child's, so it is not kept separately.
            for (pi, tok) in tokens.iter().enumerate() {
                let moved = children.iter().any(|&(p, _)| p == pi);
                let retired = spec.mechanism == Mechanism::ParallelDup && moved;
                if !moved || retired {
                    finished.push(tok.route.clone());
                }
            }
            for &(pi, v) in &children {
                if r.target == Some(v) {
                    finished.push(spawn(&tokens[pi], v).route);
                }
            }
        }
        // Live candidates: staying parents first, then children not at the target.
        let mut live: Vec<(usize, Option<usize>)> = (0..tokens.len())
            .filter(|&i| stays[i])
            .map(|i| (i, None))
            .collect();
        live.extend(
            children
                .iter()
                .filter(|&&(_, v)| r.target != Some(v))
                .map(|&(p, v)| (p, Some(v))),
        );
        let keep: Vec<usize> = if live.len() > r.cap {
            cap_hit = true;
            let mut keep = index::sample(&mut rng, live.len(), r.cap).into_vec();
            keep.sort_unstable();
            if record_routes {
                let mut k = keep.iter().peekable();
                for (i, &(p, v)) in live.iter().enumerate() {
                    if k.peek() == Some(&&i) {
                        k.next();
                    } else {
                        finished.push(v.map_or_else(
                            || tokens[p].route.clone(),
                            |v| spawn(&tokens[p], v).route,
                        ));
                    }
                }
            }
            keep
        } else {
            (0..live.len()).collect()
        };
        let next: Vec<Token> = keep
            .into_iter()
            .map(|i| match live[i] {
                (p, None) => Token {
                    origin: tokens[p].origin,
                    at: tokens[p].at,
                    route: tokens[p].route.clone(),
                },
                (p, Some(v)) => spawn(&tokens[p], v),
            })
            .collect();
        tokens = next;
        live_per_step.push(tokens.len());
        informed_per_step.push(informed);
    }

    let step_limit_hit = tokens.iter().any(|t| {
        eligible(g, spec, r, t, &mut options);
        !options.is_empty()
    });
    if record_routes {
        finished.extend(tokens.into_iter().map(|t| t.route));
    }
    Replication {
        first_arrival,
        receipts,
        steps_run,
        cap_hit,
        step_limit_hit,
        live_per_step,
        informed_per_step,
        routes: record_routes.then_some(finished),
    }
}

/// Run all replications (replication `i` uses seed `spec.seed + i`) and
/// merge them.
pub fn simulate(g: &SocialGraph, spec: &FlowSpec) -> Result<DiffusionTrace> {
    let r = resolve(g, spec)?;
    let reps: Vec<Replication> = (0..spec.replications)
        .into_par_iter()
        .map(|i| run(g, spec, &r, spec.seed.wrapping_add(u64::from(i)), false))
        .collect();

    let n = g.node_count();
    let mut first_arrival: Vec<Option<u32>> = vec![None; n];
    let mut arrival_sum = vec![0u64; n];
    let mut reached_in = vec![0u32; n];
    let mut receipts = vec![0u64; n];
    let mut steps_run = 0;
    let mut truncated = false;
    for rep in &reps {
        for v in 0..n {
            receipts[v] += rep.receipts[v];
            if let Some(a) = rep.first_arrival[v] {
                first_arrival[v] = Some(first_arrival[v].map_or(a, |b: u32| b.min(a)));
                arrival_sum[v] += u64::from(a);
                reached_in[v] += 1;
            }
        }
        steps_run = steps_run.max(rep.steps_run);
        truncated |= rep.cap_hit || rep.step_limit_hit;
    }
    let mean_arrival = (0..n)
        .map(|v| (reached_in[v] > 0).then(|| arrival_sum[v] as f64 / f64::from(reached_in[v])))
        .collect();
    Ok(DiffusionTrace {
        spec: spec.clone(),
        students: g.ids().to_vec(),
        first_arrival,
        mean_arrival,
        reached_in,
        receipts,
        steps_run,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(edges: &[(&str, &str)]) -> SocialGraph {
        SocialGraph::from_edges(Vec::<&str>::new(), edges.iter().map(|&(a, b)| (a, b, 1))).unwrap()
    }

    fn spec(m: Mechanism, t: Trajectory, src: &str) -> FlowSpec {
        FlowSpec::new(m, t, vec![src.to_owned()])
    }

    #[test]
    fn transfer_along_a_chain() {
        let g = graph(&[("A", "B"), ("B", "C")]);
        let trace = simulate(
            &g,
            &FlowSpec {
                replications: 20,
                ..spec(Mechanism::Transfer, Trajectory::Geodesic, "A")
            },
        )
        .unwrap();
        assert_eq!(trace.first_arrival, [Some(0), Some(1), Some(2)]);
        assert_eq!(trace.mean_arrival, [Some(0.0), Some(1.0), Some(2.0)]);
        assert_eq!(trace.receipts, [20, 20, 20]);
        assert_eq!(trace.steps_run, 2);
        assert!(!trace.truncated);
    }

    #[test]
    fn parallel_walk_floods_a_triangle() {
        let g = graph(&[
            ("A", "B"),
            ("B", "C"),
            ("C", "A"),
            ("B", "A"),
            ("C", "B"),
            ("A", "C"),
        ]);
        let trace = simulate(&g, &spec(Mechanism::ParallelDup, Trajectory::Walk, "B")).unwrap();
        assert!(trace
            .first_arrival
            .iter()
            .all(|a| a.is_some_and(|s| s <= 1)));
        assert!(trace.truncated);
    }

    #[test]
    fn targeted_flow_stops_at_target() {
        let g = graph(&[("A", "B"), ("B", "C"), ("C", "D")]);
        let s = FlowSpec {
            target: Some("C".into()),
            max_steps: 50,
            ..spec(Mechanism::Transfer, Trajectory::Walk, "A")
        };
        let rep = simulate_once(&g, &s, 0, true).unwrap();
        assert_eq!(rep.first_arrival, [Some(0), Some(1), Some(2), None]);
        assert_eq!(rep.steps_run, 2);
        assert!(!rep.step_limit_hit);
    }

    #[test]
    fn spec_validation() {
        let g = graph(&[("A", "B")]);
        assert!(matches!(
            simulate(&g, &spec(Mechanism::Transfer, Trajectory::Walk, "Q")),
            Err(Error::MissingNode(_))
        ));
        assert!(simulate(
            &g,
            &FlowSpec {
                sources: vec![],
                ..spec(Mechanism::Transfer, Trajectory::Walk, "A")
            }
        )
        .is_err());
        assert!(simulate(
            &g,
            &FlowSpec {
                max_steps: 0,
                ..spec(Mechanism::Transfer, Trajectory::Walk, "A")
            }
        )
        .is_err());
        let two = FlowSpec {
            sources: vec!["A".into(), "B".into()],
            copy_cap: Some(1),
            ..spec(Mechanism::Transfer, Trajectory::Walk, "A")
        };
        assert!(simulate(&g, &two).is_err());
        let bad_target = FlowSpec {
            target: Some("Z".into()),
            ..spec(Mechanism::Transfer, Trajectory::Walk, "A")
        };
        assert!(simulate(&g, &bad_target).is_err());
    }

    #[test]
    fn copy_cap_truncates() {
        let g = graph(&[
            ("A", "B"),
            ("B", "A"),
            ("A", "C"),
            ("C", "A"),
            ("B", "C"),
            ("C", "B"),
        ]);
        let s = FlowSpec {
            copy_cap: Some(4),
            max_steps: 6,
            ..spec(Mechanism::SerialDup, Trajectory::Walk, "A")
        };
        let rep = simulate_once(&g, &s, 3, false).unwrap();
        assert!(rep.cap_hit);
        assert!(rep.live_per_step.iter().all(|&l| l <= 4));
    }

    #[test]
    fn weight_proportional_hops() {
        let g =
            SocialGraph::from_edges(Vec::<&str>::new(), [("A", "B", 9), ("A", "C", 1)]).unwrap();
        let s = FlowSpec {
            replications: 2000,
            max_steps: 1,
            seed: 17,
            ..spec(Mechanism::Transfer, Trajectory::Walk, "A")
        };
        let t = simulate(&g, &s).unwrap();
        let frac = t.receipts[1] as f64 / 2000.0;
        assert!((frac - 0.9).abs() < 0.03, "{frac}");
        let u = simulate(
            &g,
            &FlowSpec {
                hop_choice: HopChoice::Uniform,
                ..s
            },
        )
        .unwrap();
        let frac = u.receipts[1] as f64 / 2000.0;
        assert!((frac - 0.5).abs() < 0.05, "{frac}");
    }

    #[test]
    fn trace_csv_marks_unreached() {
        let g = graph(&[("A", "B"), ("C", "A")]);
        let t = simulate(
            &g,
            &FlowSpec {
                replications: 1,
                ..spec(Mechanism::Transfer, Trajectory::Walk, "A")
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "student,first_arrival,receipts\nA,0,1\nB,1,1\nC,NEVER,0\n"
        );
    }
}
