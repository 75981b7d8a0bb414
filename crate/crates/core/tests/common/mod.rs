#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teamform::SocialGraph;

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i:03}")).collect()
}

/// Erdős–Rényi digraph with weights in `1..=max_w`.
pub fn random_digraph(seed: u64, n: usize, p: f64, max_w: u64) -> SocialGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random_bool(p) {
                edges.push((u, v, rng.random_range(1..=max_w)));
            }
        }
    }
    SocialGraph::from_index_edges(ids(n), edges).unwrap()
}

pub fn is_strongly_connected(g: &SocialGraph) -> bool {
    let n = g.node_count();
    n > 0
        && g.hop_distances(0).iter().all(Option::is_some)
        && g.reversed().hop_distances(0).iter().all(Option::is_some)
}

/// First strongly connected draw from a seeded sequence of random digraphs.
pub fn connected_digraph(seed: u64, n: usize, p: f64) -> SocialGraph {
    (0..)
        .map(|k| random_digraph(seed.wrapping_mul(1_000).wrapping_add(k), n, p, 1))
        .find(is_strongly_connected)
        .unwrap()
}

/// Dense weight matrix `w[u][v]`.
pub fn dense(g: &SocialGraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut w = vec![vec![0.0; n]; n];
    for (u, v, x) in g.edges() {
        w[u][v] = x as f64;
    }
    w
}

pub fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    (0..n).map(|i| (0..n).map(|j| m[j][i]).collect()).collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] != 0.0 {
                for j in 0..n {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    c
}

/// Power iteration `x <- M x / |M x|_2` from the uniform unit vector.
pub fn dense_power(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..200_000 {
        let mut y: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| m[i][j] * x[j]).sum())
            .collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        let delta: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
        x = y;
        if delta < 1e-15 {
            break;
        }
    }
    x
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Google-matrix PageRank by dense power iteration, dangling mass spread
/// uniformly.
pub fn dense_pagerank(g: &SocialGraph, d: f64) -> Vec<f64> {
    let n = g.node_count();
    let w = dense(g);
    let mut google = vec![vec![0.0; n]; n];
    for u in 0..n {
        let out: f64 = w[u].iter().sum();
        for v in 0..n {
            let follow = if out > 0.0 {
                w[u][v] / out
            } else {
                1.0 / n as f64
            };
            google[v][u] = d * follow + (1.0 - d) / n as f64;
        }
    }
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let y: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| google[i][j] * x[j]).sum())
            .collect();
        let delta: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
        x = y;
        if delta < 1e-15 {
            break;
        }
    }
    x
}

/// All-pairs hop distances by Floyd–Warshall.
pub fn floyd_warshall(g: &SocialGraph) -> Vec<Vec<Option<u32>>> {
    let n = g.node_count();
    const INF: u32 = u32::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (u, v, _) in g.edges() {
        d[u][v] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d.into_iter()
        .map(|row| row.into_iter().map(|x| (x < INF).then_some(x)).collect())
        .collect()
}

/// Directed clustering by enumerating ordered neighbour pairs.
pub fn brute_clustering(g: &SocialGraph, s: usize) -> f64 {
    let n = g.node_count();
    let nbrs: Vec<usize> = (0..n)
        .filter(|&v| v != s && (g.has_edge(s, v) || g.has_edge(v, s)))
        .collect();
    let k = nbrs.len();
    if k < 2 {
        return 0.0;
    }
    let mut links = 0;
    for &j in &nbrs {
        for &q in &nbrs {
            if j != q && g.has_edge(j, q) {
                links += 1;
            }
        }
    }
    links as f64 / (k * (k - 1)) as f64
}

/// Role counts per broker by a triple loop over (i, b, k); order matches
/// coordinator, gatekeeper, representative, consultant, liaison.
pub fn brute_brokerage(g: &SocialGraph, groups: &[usize]) -> Vec<[u64; 5]> {
    let n = g.node_count();
    let mut out = vec![[0u64; 5]; n];
    for b in 0..n {
        for i in 0..n {
            for k in 0..n {
                if i == k || i == b || k == b || !g.has_edge(i, b) || !g.has_edge(b, k) {
                    continue;
                }
                let (gi, gb, gk) = (groups[i], groups[b], groups[k]);
                let role = if gi == gb && gb == gk {
                    0
                } else if gb == gk {
                    1
                } else if gi == gb {
                    2
                } else if gi == gk {
                    3
                } else {
                    4
                };
                out[b][role] += 1;
            }
        }
    }
    out
}

pub fn two_path_count(g: &SocialGraph) -> u64 {
    let n = g.node_count();
    let mut count = 0;
    for i in 0..n {
        for b in 0..n {
            for k in 0..n {
                if i != k && g.has_edge(i, b) && g.has_edge(b, k) {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Burt's constraint straight from the formula on symmetrised ties.
pub fn brute_constraint(g: &SocialGraph, ego: usize) -> Option<f64> {
    let n = g.node_count();
    let s = |u: usize, v: usize| {
        if u == v {
            0.0
        } else {
            g.sym_weight(u, v) as f64
        }
    };
    let total = |u: usize| (0..n).map(|v| s(u, v)).sum::<f64>();
    let p = |u: usize, v: usize| {
        let t = total(u);
        if t == 0.0 {
            0.0
        } else {
            s(u, v) / t
        }
    };
    if total(ego) == 0.0 {
        return None;
    }
    let mut c = 0.0;
    for j in 0..n {
        if j == ego || s(ego, j) == 0.0 {
            continue;
        }
        let mut term = p(ego, j);
        for q in 0..n {
            if q != ego && q != j && s(ego, q) > 0.0 {
                term += p(ego, q) * p(q, j);
            }
        }
        c += term * term;
    }
    Some(c)
}
