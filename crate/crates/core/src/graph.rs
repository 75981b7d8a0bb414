//! Directed weighted reply graph and shortest-path primitives.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ForumMessage;

pub type StudentId = String;

/// How a thread post without a parent is attributed. Comments always target
/// the author of their parent message.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplyPolicy {
    /// A follow-up post replies to the author of the thread starter.
    #[default]
    ThreadStarter,
    /// Follow-up posts produce no edge.
    CommentsOnly,
    /// A follow-up post replies to every distinct author who wrote in the
    /// thread before it.
    PriorParticipants,
}

/// Simple directed graph with positive integer edge weights. Nodes are kept
/// in ascending id order, and that order is the canonical node index used
/// by every algorithm in this crate.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SocialGraph {
    ids: Vec<StudentId>,
    index: HashMap<StudentId, usize>,
    out_adj: Vec<Vec<(usize, u64)>>,
    in_adj: Vec<Vec<(usize, u64)>>,
    edge_count: usize,
}

impl SocialGraph {
    /// Build from a node set and weighted edges over node indices. Parallel
    /// edges are merged by summing their weights.
    pub fn from_index_edges(
        ids: Vec<StudentId>,
        edges: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Result<Self> {
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != ids {
            return Err(Error::param("node ids must be sorted and unique"));
        }
        let n = ids.len();
        let mut merged: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::param(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(Error::param(format!("self-loop on `{}`", ids[u])));
            }
            if w == 0 {
                return Err(Error::param("edge weights must be positive"));
            }
            *merged.entry((u, v)).or_insert(0) += w;
        }
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for (&(u, v), &w) in &merged {
            out_adj[u].push((v, w));
            in_adj[v].push((u, w));
        }
        for list in &mut in_adj {
            list.sort_unstable();
        }
        let index = ids
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        Ok(SocialGraph {
            ids,
            index,
            out_adj,
            in_adj,
            edge_count: merged.len(),
        })
    }

    /// Build from string-labelled edges plus extra (possibly isolated) nodes.
    pub fn from_edges<S: AsRef<str>>(
        nodes: impl IntoIterator<Item = S>,
        edges: impl IntoIterator<Item = (S, S, u64)>,
    ) -> Result<Self> {
        let edges: Vec<(S, S, u64)> = edges.into_iter().collect();
        let mut set: BTreeSet<String> = nodes.into_iter().map(|s| s.as_ref().to_owned()).collect();
        for (u, v, _) in &edges {
            set.insert(u.as_ref().to_owned());
            set.insert(v.as_ref().to_owned());
        }
        let ids: Vec<String> = set.into_iter().collect();
        let pos: HashMap<&str, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let indexed: Vec<_> = edges
            .iter()
            .map(|(u, v, w)| (pos[u.as_ref()], pos[v.as_ref()], *w))
            .collect();
        Self::from_index_edges(ids, indexed)
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[StudentId] {
        &self.ids
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id)
            .ok_or_else(|| Error::MissingNode(id.to_owned()))
    }

    /// Out-neighbours of `node` with weights, ascending by neighbour index.
    pub fn out_neighbors(&self, node: usize) -> &[(usize, u64)] {
        &self.out_adj[node]
    }

    /// In-neighbours of `node` with weights, ascending by neighbour index.
    pub fn in_neighbors(&self, node: usize) -> &[(usize, u64)] {
        &self.in_adj[node]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_adj[node].len()
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_adj[node].len()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<u64> {
        let list = &self.out_adj[u];
        list.binary_search_by_key(&v, |&(t, _)| t)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v).is_some()
    }

    /// `w(u,v) + w(v,u)`, zero when neither edge exists.
    pub fn sym_weight(&self, u: usize, v: usize) -> u64 {
        self.weight(u, v).unwrap_or(0) + self.weight(v, u).unwrap_or(0)
    }

    /// Union of in- and out-neighbours, ascending, self excluded.
    pub fn neighbors(&self, node: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.out_adj[node]
            .iter()
            .chain(&self.in_adj[node])
            .map(|&(v, _)| v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// All edges as `(u, v, w)` in ascending `(u, v)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().map(move |&(v, w)| (u, v, w)))
    }

    pub fn total_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Same nodes with every edge direction flipped.
    pub fn reversed(&self) -> SocialGraph {
        SocialGraph::from_index_edges(self.ids.clone(), self.edges().map(|(u, v, w)| (v, u, w)))
            .expect("reversal of a valid graph is valid")
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        self.out_adj.iter().map(Vec::len).collect()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        self.in_adj.iter().map(Vec::len).collect()
    }

    /// Hop-count distances from `source` along directed edges.
    pub fn hop_distances(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap() + 1;
            for &(v, _) in &self.out_adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Write the edge list as CSV with a `src,dst,weight` header. Isolated
    /// nodes are not represented.
    pub fn write_edge_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["src", "dst", "weight"]).map_err(csv_err)?;
        for (u, v, weight) in self.edges() {
            w.write_record([self.id(u), self.id(v), &weight.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_edge_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers().map_err(csv_err)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["src", "dst", "weight"] {
            return Err(Error::Data(
                "edge list header must be `src,dst,weight`".into(),
            ));
        }
        let mut edges = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let w: u64 = rec[2]
                .parse()
                .map_err(|_| Error::Data(format!("bad weight `{}`", &rec[2])))?;
            edges.push((rec[0].to_owned(), rec[1].to_owned(), w));
        }
        SocialGraph::from_edges(Vec::<String>::new(), edges)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

/// Counters for interactions that did not become edges.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildDiagnostics {
    /// Comments whose parent id is not in the corpus.
    pub missing_parent: usize,
    /// Comments whose parent lives in another thread.
    pub cross_thread_parent: usize,
    /// Interactions with an anonymous endpoint.
    pub anonymous: usize,
    pub self_replies: usize,
    /// Interactions that produced (or reinforced) an edge.
    pub counted: usize,
}

/// Build the reply graph. Every non-anonymous author becomes a node, even
/// without any interaction.
pub fn build_reply_graph(
    messages: &[ForumMessage],
    policy: ReplyPolicy,
) -> (SocialGraph, BuildDiagnostics) {
    let mut diag = BuildDiagnostics::default();
    let by_id: HashMap<&str, &ForumMessage> = messages.iter().map(|m| (m.id.as_str(), m)).collect();

    // Messages of each thread in chronological order (ties by id).
    let mut threads: BTreeMap<&str, Vec<&ForumMessage>> = BTreeMap::new();
    for m in messages {
        threads.entry(m.thread_id.as_str()).or_default().push(m);
    }
    for list in threads.values_mut() {
        list.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
    }

    let authors: BTreeSet<&str> = messages
        .iter()
        .filter_map(|m| m.author.as_deref())
        .collect();
    let mut weights: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for list in threads.values() {
        let starter = list.iter().find(|m| m.parent_id.is_none());
        let mut prior_authors: BTreeSet<Option<&str>> = BTreeSet::new();
        for m in list {
            let from = m.author.as_deref();
            match &m.parent_id {
                Some(pid) => match by_id.get(pid.as_str()) {
                    None => diag.missing_parent += 1,
                    Some(p) if p.thread_id != m.thread_id => diag.cross_thread_parent += 1,
                    Some(p) => record(&mut weights, &mut diag, from, p.author.as_deref()),
                },
                None => {
                    let is_starter = starter.is_some_and(|s| s.id == m.id);
                    if !is_starter {
                        match policy {
                            ReplyPolicy::ThreadStarter => record(
                                &mut weights,
                                &mut diag,
                                from,
                                starter.and_then(|s| s.author.as_deref()),
                            ),
                            ReplyPolicy::CommentsOnly => {}
                            ReplyPolicy::PriorParticipants => {
                                for &to in &prior_authors {
                                    record(&mut weights, &mut diag, from, to);
                                }
                            }
                        }
                    }
                }
            }
            prior_authors.insert(from);
        }
    }

    let graph = SocialGraph::from_edges(authors, weights.into_iter().map(|((u, v), w)| (u, v, w)))
        .expect("reply edges are valid by construction");
    (graph, diag)
}

fn record<'a>(
    weights: &mut BTreeMap<(&'a str, &'a str), u64>,
    diag: &mut BuildDiagnostics,
    from: Option<&'a str>,
    to: Option<&'a str>,
) {
    match (from, to) {
        (Some(u), Some(v)) if u == v => diag.self_replies += 1,
        (Some(u), Some(v)) => {
            diag.counted += 1;
            *weights.entry((u, v)).or_insert(0) += 1;
        }
        _ => diag.anonymous += 1,
    }
}

/// Shortest hop-count distances from one source. `None` marks nodes with no
/// directed path from the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceRow {
    pub source: usize,
    pub dist: Vec<Option<u32>>,
}

impl DistanceRow {
    pub fn get(&self, g: &SocialGraph, id: &str) -> Option<Option<u32>> {
        g.index_of(id).map(|i| self.dist[i])
    }
}

pub fn geodesic_distances(g: &SocialGraph, source: &str) -> Result<DistanceRow> {
    let s = g.require(source)?;
    Ok(DistanceRow {
        source: s,
        dist: g.hop_distances(s),
    })
}
