//! Skill profiles from post text, refined by graph rank, and a skill-based
//! group partition for brokerage analysis.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::StudentId;
use crate::ingest::ForumMessage;
use crate::metrics::GroupPartition;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Group label for students with no observed terms.
pub const UNOBSERVED: &str = "unobserved";

/// Parse a stopword list: one token per line, blank lines ignored.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

/// Lowercase, split on non-alphanumeric characters, drop stopwords and
/// tokens shorter than `min_len` characters.
pub fn tokenize<'a>(
    text: &'a str,
    stopwords: &'a HashSet<String>,
    min_len: usize,
) -> impl Iterator<Item = String> + 'a {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(move |t| t.chars().count() >= min_len && !stopwords.contains(t))
}

/// Relative frequency of every retained term across one author's messages.
pub fn term_distribution(
    messages: &[ForumMessage],
    stopwords: &HashSet<String>,
    min_len: usize,
) -> Result<BTreeMap<String, f64>> {
    let mut authors = messages.iter().map(|m| m.author.as_deref());
    if let Some(first) = authors.next() {
        if first.is_none() || authors.any(|a| a != first) {
            return Err(Error::param(
                "term distribution expects messages of one named author",
            ));
        }
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for m in messages {
        for t in tokenize(&m.body, stopwords, min_len) {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    Ok(normalize_counts(&counts))
}

fn normalize_counts(counts: &BTreeMap<String, u64>) -> BTreeMap<String, f64> {
    let total: u64 = counts.values().sum();
    counts
        .iter()
        .map(|(t, &c)| (t.clone(), c as f64 / total as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillTerm {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillProfile {
    pub student: StudentId,
    pub terms: Vec<SkillTerm>,
    #[serde(skip)]
    pub k: usize,
    pub refined: bool,
}

/// The `k` most probable terms, ties broken by ascending term.
pub fn top_k_skills(dist: &BTreeMap<String, f64>, k: usize) -> Result<Vec<SkillTerm>> {
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    let mut terms: Vec<(&String, f64)> = dist.iter().map(|(t, &p)| (t, p)).collect();
    terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(terms
        .into_iter()
        .take(k)
        .map(|(t, p)| SkillTerm {
            term: t.clone(),
            weight: p,
        })
        .collect())
}

/// Boost every weight by `1 + beta * rank_score`. The order of terms is
/// untouched.
pub fn refine_skills(profile: &SkillProfile, rank_score: f64, beta: f64) -> Result<SkillProfile> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::param(format!(
            "beta must be non-negative, got {beta}"
        )));
    }
    if !(0.0..=1.0).contains(&rank_score) {
        return Err(Error::param(format!(
            "rank score {rank_score} outside [0, 1]"
        )));
    }
    let factor = 1.0 + beta * rank_score;
    Ok(SkillProfile {
        student: profile.student.clone(),
        terms: profile
            .terms
            .iter()
            .map(|t| SkillTerm {
                term: t.term.clone(),
                weight: t.weight * factor,
            })
            .collect(),
        k: profile.k,
        refined: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkillOptions {
    pub k: usize,
    pub min_len: usize,
    /// Weight terms by smoothed inverse author frequency `ln(1 + N/df)`
    /// before picking the top `k`.
    pub idf: bool,
}

impl Default for SkillOptions {
    fn default() -> Self {
        SkillOptions {
            k: 5,
            min_len: 3,
            idf: false,
        }
    }
}

/// One unrefined profile per named author, ascending by student id.
pub fn skill_profiles(
    messages: &[ForumMessage],
    stopwords: &HashSet<String>,
    opts: &SkillOptions,
) -> Result<Vec<SkillProfile>> {
    let mut by_author: BTreeMap<&str, Vec<ForumMessage>> = BTreeMap::new();
    for m in messages {
        if let Some(a) = &m.author {
            by_author.entry(a).or_default().push(m.clone());
        }
    }
    let mut dists = Vec::with_capacity(by_author.len());
    for (author, msgs) in &by_author {
        dists.push((*author, term_distribution(msgs, stopwords, opts.min_len)?));
    }
    if opts.idf {
        let n = dists.len() as f64;
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for (_, d) in &dists {
            for t in d.keys() {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
        }
        for (_, d) in &mut dists {
            for (t, p) in d.iter_mut() {
                *p *= (1.0 + n / df[t] as f64).ln();
            }
            let total: f64 = d.values().sum();
            if total > 0.0 {
                d.values_mut().for_each(|p| *p /= total);
            }
        }
    }
    dists
        .into_iter()
        .map(|(author, d)| {
            Ok(SkillProfile {
                student: author.to_owned(),
                terms: top_k_skills(&d, opts.k)?,
                k: opts.k,
                refined: false,
            })
        })
        .collect()
}

/// Group students by skill-vector similarity.
///
/// Seeded k-way assignment: the first centre is drawn from the seed, later
/// centres are chosen farthest-first (lowest best cosine similarity to the
/// centres so far), then assignment and centroid updates alternate until
/// stable. Groups are labelled `g0, g1, ...` in order of their smallest
/// member; students with empty profiles go to [`UNOBSERVED`].
pub fn skill_partition(
    profiles: &[SkillProfile],
    n_groups: usize,
    seed: u64,
) -> Result<GroupPartition> {
    if n_groups == 0 {
        return Err(Error::param("n_groups must be at least 1"));
    }
    if n_groups > profiles.len() {
        return Err(Error::param(format!(
            "{n_groups} groups requested for {} students",
            profiles.len()
        )));
    }
    let mut sorted: Vec<&SkillProfile> = profiles.iter().collect();
    sorted.sort_by(|a, b| a.student.cmp(&b.student));

    let (observed, empty): (Vec<&SkillProfile>, Vec<&SkillProfile>) =
        sorted.into_iter().partition(|p| !p.terms.is_empty());
    let mut labels: BTreeMap<StudentId, String> = empty
        .iter()
        .map(|p| (p.student.clone(), UNOBSERVED.to_owned()))
        .collect();
    if observed.is_empty() {
        return Ok(GroupPartition::new(labels));
    }

    let vectors: Vec<SparseVec> = observed
        .iter()
        .map(|p| SparseVec::from_profile(p))
        .collect();
    let k = n_groups.min(vectors.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centre_ids = vec![rng.random_range(0..vectors.len())];
    while centre_ids.len() < k {
        let next = (0..vectors.len())
            .filter(|i| !centre_ids.contains(i))
            .map(|i| {
                let best = centre_ids
                    .iter()
                    .map(|&c| vectors[i].cosine(&vectors[c]))
                    .fold(f64::NEG_INFINITY, f64::max);
                (i, best)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("fewer centres than vectors")
            .0;
        centre_ids.push(next);
    }
    let mut centres: Vec<SparseVec> = centre_ids.iter().map(|&c| vectors[c].clone()).collect();
    let mut assign = vec![usize::MAX; vectors.len()];
    for _ in 0..100 {
        let next: Vec<usize> = vectors
            .iter()
            .map(|v| {
                centres
                    .iter()
                    .enumerate()
                    .map(|(c, centre)| (c, v.cosine(centre)))
                    .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                    .expect("at least one centre")
                    .0
            })
            .collect();
        if next == assign {
            break;
        }
        assign = next;
        for (c, centre) in centres.iter_mut().enumerate() {
            let members: Vec<&SparseVec> = vectors
                .iter()
                .zip(&assign)
                .filter(|(_, &a)| a == c)
                .map(|(v, _)| v)
                .collect();
            if !members.is_empty() {
                *centre = SparseVec::sum(&members);
            }
        }
    }

    // Canonical labels: order clusters by their first member.
    let mut relabel: BTreeMap<usize, usize> = BTreeMap::new();
    for &a in &assign {
        let next = relabel.len();
        relabel.entry(a).or_insert(next);
    }
    for (p, a) in observed.iter().zip(&assign) {
        labels.insert(p.student.clone(), format!("g{}", relabel[a]));
    }
    Ok(GroupPartition::new(labels))
}

#[derive(Debug, Clone)]
struct SparseVec(BTreeMap<String, f64>);

impl SparseVec {
    fn from_profile(p: &SkillProfile) -> Self {
        SparseVec(p.terms.iter().map(|t| (t.term.clone(), t.weight)).collect())
    }

    fn sum(vs: &[&SparseVec]) -> Self {
        let mut out = BTreeMap::new();
        for v in vs {
            for (t, w) in &v.0 {
                *out.entry(t.clone()).or_insert(0.0) += w;
            }
        }
        SparseVec(out)
    }

    fn norm(&self) -> f64 {
        self.0.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    fn cosine(&self, other: &SparseVec) -> f64 {
        let dot: f64 = self
            .0
            .iter()
            .filter_map(|(t, w)| other.0.get(t).map(|o| w * o))
            .sum();
        let denom = self.norm() * other.norm();
        if denom > 0.0 {
            dot / denom
        } else {
            0.0
        }
    }
}

/// Every distinct term across a set of profiles.
pub fn vocabulary(profiles: &[SkillProfile]) -> BTreeSet<&str> {
    profiles
        .iter()
        .flat_map(|p| p.terms.iter().map(|t| t.term.as_str()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(author: &str, body: &str) -> ForumMessage {
        ForumMessage {
            id: format!("{author}-{}", body.len()),
            thread_id: "t".into(),
            parent_id: None,
            author: Some(author.into()),
            timestamp: 0,
            body: body.into(),
        }
    }

    fn profile(student: &str, terms: &[(&str, f64)]) -> SkillProfile {
        SkillProfile {
            student: student.into(),
            terms: terms
                .iter()
                .map(|&(t, w)| SkillTerm {
                    term: t.into(),
                    weight: w,
                })
                .collect(),
            k: 5,
            refined: false,
        }
    }

    #[test]
    fn counts_become_probabilities() {
        let d = term_distribution(
            &[msg("a", "Recursion, recursion; graphs!")],
            &default_stopwords(),
            3,
        )
        .unwrap();
        assert_eq!(d.len(), 2);
        assert!((d["recursion"] - 2.0 / 3.0).abs() < 1e-15);
        assert!((d["graphs"] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn stopwords_only_gives_empty() {
        let d =
            term_distribution(&[msg("a", "the and of it was")], &default_stopwords(), 1).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn mixed_authors_rejected() {
        let err = term_distribution(&[msg("a", "x"), msg("b", "y")], &default_stopwords(), 1);
        assert!(err.is_err());
    }

    #[test]
    fn min_len_filters_short_tokens() {
        let d = term_distribution(&[msg("a", "ab abc abcd")], &HashSet::new(), 3).unwrap();
        assert_eq!(d.keys().collect::<Vec<_>>(), ["abc", "abcd"]);
    }

    #[test]
    fn top_k_prefix_and_tie_break() {
        let d: BTreeMap<String, f64> = [("a", 0.5), ("b", 0.3), ("c", 0.2)]
            .map(|(t, p)| (t.to_owned(), p))
            .into();
        let top: Vec<String> = top_k_skills(&d, 2)
            .unwrap()
            .into_iter()
            .map(|t| t.term)
            .collect();
        assert_eq!(top, ["a", "b"]);
        let tie: BTreeMap<String, f64> = [("y", 0.5), ("x", 0.5)]
            .map(|(t, p)| (t.to_owned(), p))
            .into();
        assert_eq!(top_k_skills(&tie, 1).unwrap()[0].term, "x");
        assert_eq!(top_k_skills(&tie, 9).unwrap().len(), 2);
        assert!(top_k_skills(&tie, 0).is_err());
    }

    #[test]
    fn refinement_rules() {
        let p = profile("s", &[("graphs", 0.4), ("trees", 0.2)]);
        assert_eq!(refine_skills(&p, 0.7, 0.0).unwrap().terms, p.terms);
        assert_eq!(refine_skills(&p, 0.0, 2.0).unwrap().terms, p.terms);
        let r = refine_skills(&p, 1.0, 0.5).unwrap();
        assert!((r.terms[0].weight - 0.6).abs() < 1e-15);
        assert!(r.refined);
        assert!(refine_skills(&p, 1.0, -0.1).is_err());
        assert!(refine_skills(&p, 1.5, 1.0).is_err());
    }

    #[test]
    fn profiles_for_each_named_author() {
        let mut msgs = vec![
            msg("b", "sonnet sonnet meter"),
            msg("a", "plot narrator plot plot"),
        ];
        msgs.push(ForumMessage {
            author: None,
            ..msg("x", "anonymous words")
        });
        let ps = skill_profiles(&msgs, &default_stopwords(), &SkillOptions::default()).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].student, "a");
        assert_eq!(ps[0].terms[0].term, "plot");
        assert!((ps[0].terms.iter().map(|t| t.weight).sum::<f64>() - 1.0).abs() < 1e-12);

        let idf = skill_profiles(
            &msgs,
            &default_stopwords(),
            &SkillOptions {
                idf: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(idf[1].terms[0].term, "sonnet");
    }

    #[test]
    fn single_group_and_unobserved() {
        let ps = vec![
            profile("a", &[("x", 1.0)]),
            profile("b", &[("y", 1.0)]),
            profile("c", &[]),
        ];
        let part = skill_partition(&ps, 1, 3).unwrap();
        assert_eq!(part.label("a"), Some("g0"));
        assert_eq!(part.label("b"), Some("g0"));
        assert_eq!(part.label("c"), Some(UNOBSERVED));
        assert!(skill_partition(&ps, 4, 3).is_err());
        assert!(skill_partition(&ps, 0, 3).is_err());
    }

    #[test]
    fn disjoint_vocabularies_are_separated() {
        let ps = vec![
            profile("a", &[("poetry", 0.6), ("meter", 0.4)]),
            profile("b", &[("poetry", 0.5), ("rhyme", 0.5)]),
            profile("c", &[("plot", 0.7), ("novel", 0.3)]),
            profile("d", &[("novel", 0.6), ("chapter", 0.4)]),
        ];
        for seed in 0..10 {
            let part = skill_partition(&ps, 2, seed).unwrap();
            assert_eq!(part.label("a"), part.label("b"));
            assert_eq!(part.label("c"), part.label("d"));
            assert_ne!(part.label("a"), part.label("c"));
        }
    }
}
