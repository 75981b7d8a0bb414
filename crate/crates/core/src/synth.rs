//! Seeded synthetic forum corpora.
//!
//! Threads grow by preferential attachment (a new post or comment lands in a
//! thread with probability proportional to its current size), author
//! activity is Zipf-like, and each student writes mostly from one planted
//! topic vocabulary so skill extraction has structure to find.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ForumMessage;

const EPOCH_START: u64 = 1_370_044_800; // 2013-06-01T00:00:00Z

pub const TOPICS: [&[&str]; 6] = [
    &[
        "poetry", "sonnet", "meter", "rhyme", "stanza", "verse", "imagery", "metaphor", "lyric",
        "couplet",
    ],
    &[
        "novel",
        "narrator",
        "plot",
        "character",
        "chapter",
        "protagonist",
        "dialogue",
        "setting",
        "realism",
        "fiction",
    ],
    &[
        "drama",
        "tragedy",
        "comedy",
        "stage",
        "act",
        "scene",
        "playwright",
        "soliloquy",
        "chorus",
        "audience",
    ],
    &[
        "criticism",
        "theory",
        "interpretation",
        "structuralism",
        "feminist",
        "marxist",
        "reader",
        "context",
        "ideology",
        "canon",
    ],
    &[
        "essay",
        "thesis",
        "argument",
        "evidence",
        "citation",
        "paragraph",
        "draft",
        "revision",
        "grammar",
        "outline",
    ],
    &[
        "myth", "epic", "hero", "legend", "folklore", "quest", "odyssey", "iliad", "gods", "oral",
    ],
];

const FILLER: &[&str] = &[
    "the", "a", "i", "think", "this", "is", "and", "of", "in", "that", "it", "was", "really",
    "about", "we", "you", "for", "with", "week", "lecture", "question", "anyone", "thanks",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub students: usize,
    pub threads: usize,
    /// Total posts, thread starters included.
    pub posts: usize,
    pub comments: usize,
    pub seed: u64,
    /// Probability that a message (beyond each student's guaranteed first
    /// appearance) is posted anonymously.
    #[serde(default = "default_anonymous_fraction")]
    pub anonymous_fraction: f64,
}

fn default_anonymous_fraction() -> f64 {
    0.05
}

impl SynthParams {
    pub fn new(students: usize, threads: usize, posts: usize, comments: usize, seed: u64) -> Self {
        SynthParams {
            students,
            threads,
            posts,
            comments,
            seed,
            anonymous_fraction: default_anonymous_fraction(),
        }
    }

    /// Counts observed in a seven-week literature course forum: 771 named
    /// students, 665 threads, 1503 posts and 1100 comments.
    pub fn course_scale(seed: u64) -> Self {
        Self::new(771, 665, 1503, 1100, seed)
    }

    fn validate(&self) -> Result<()> {
        if self.comments > 0 && self.posts == 0 {
            return Err(Error::param("comments require at least one post"));
        }
        if self.posts < self.threads {
            return Err(Error::param(
                "every thread needs a starter post (posts >= threads)",
            ));
        }
        if self.posts > 0 && self.threads == 0 {
            return Err(Error::param("posts require at least one thread"));
        }
        if self.posts + self.comments > 0 && self.students == 0 {
            return Err(Error::param("messages require at least one student"));
        }
        if !(0.0..1.0).contains(&self.anonymous_fraction) {
            return Err(Error::param("anonymous_fraction must lie in [0, 1)"));
        }
        Ok(())
    }
}

pub fn student_name(i: usize) -> String {
    format!("s{i:04}")
}

/// A corpus plus the planted topic of every student (indexed like
/// [`student_name`]).
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub messages: Vec<ForumMessage>,
    pub topics: Vec<usize>,
}

pub fn synth_corpus(params: &SynthParams) -> Result<Vec<ForumMessage>> {
    synth_corpus_with_topics(params).map(|c| c.messages)
}

pub fn synth_corpus_with_topics(params: &SynthParams) -> Result<SynthCorpus> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let topics: Vec<usize> = (0..params.students).map(|i| i % TOPICS.len()).collect();

    #[derive(Clone, Copy, PartialEq)]
    enum Kind {
        Starter,
        Post,
        Comment,
    }
    let mut kinds = Vec::with_capacity(params.posts + params.comments);
    kinds.extend(std::iter::repeat_n(Kind::Starter, params.threads));
    kinds.extend(std::iter::repeat_n(
        Kind::Post,
        params.posts - params.threads,
    ));
    kinds.extend(std::iter::repeat_n(Kind::Comment, params.comments));
    kinds.shuffle(&mut rng);
    if let Some(first) = kinds.iter().position(|k| *k == Kind::Starter) {
        kinds.swap(0, first);
    }

    let total = kinds.len();
    // Every student appears at least once under their own name.
    let mut forced: Vec<Option<usize>> = vec![None; total];
    let mut order: Vec<usize> = (0..params.students).collect();
    order.shuffle(&mut rng);
    let slots = index::sample(&mut rng, total, params.students.min(total));
    for (slot, student) in slots.iter().zip(order) {
        forced[slot] = Some(student);
    }
    let activity = if params.students > 0 {
        Some(
            WeightedIndex::new((0..params.students).map(|r| 1.0 / (r as f64 + 1.0).powf(0.8)))
                .expect("weights are positive"),
        )
    } else {
        None
    };

    let mut messages: Vec<ForumMessage> = Vec::with_capacity(total);
    // Thread index of each message, and message indices per thread.
    let mut thread_of: Vec<usize> = Vec::with_capacity(total);
    let mut thread_msgs: Vec<Vec<usize>> = Vec::with_capacity(params.threads);
    let (mut n_posts, mut n_comments) = (0usize, 0usize);
    let mut clock = EPOCH_START;

    for (i, kind) in kinds.into_iter().enumerate() {
        clock += rng.random_range(1..=900);
        let author = match forced[i] {
            Some(s) => Some(s),
            None => {
                let s = activity.as_ref().expect("students > 0").sample(&mut rng);
                (!rng.random_bool(params.anonymous_fraction)).then_some(s)
            }
        };
        let body_topic = author.map_or_else(|| rng.random_range(0..TOPICS.len()), |s| topics[s]);
        let body = make_body(&mut rng, body_topic);

        let (id, thread, parent) = match kind {
            Kind::Starter => {
                let t = thread_msgs.len();
                thread_msgs.push(Vec::new());
                n_posts += 1;
                (format!("p{n_posts}"), t, None)
            }
            Kind::Post => {
                let t = pick_thread(&mut rng, &thread_of, thread_msgs.len());
                n_posts += 1;
                (format!("p{n_posts}"), t, None)
            }
            Kind::Comment => {
                let t = pick_thread(&mut rng, &thread_of, thread_msgs.len());
                let parent = *thread_msgs[t]
                    .choose(&mut rng)
                    .expect("threads are never empty");
                n_comments += 1;
                (
                    format!("c{n_comments}"),
                    t,
                    Some(messages[parent].id.clone()),
                )
            }
        };
        thread_msgs[thread].push(messages.len());
        thread_of.push(thread);
        messages.push(ForumMessage {
            id,
            thread_id: format!("t{}", thread + 1),
            parent_id: parent,
            author: author.map(student_name),
            timestamp: clock,
            body,
        });
    }
    Ok(SynthCorpus { messages, topics })
}

/// Half the time a thread is picked by activity (a random earlier message's
/// thread), otherwise uniformly.
fn pick_thread(rng: &mut ChaCha8Rng, thread_of: &[usize], threads: usize) -> usize {
    if rng.random_bool(0.5) {
        thread_of[rng.random_range(0..thread_of.len())]
    } else {
        rng.random_range(0..threads)
    }
}

fn make_body(rng: &mut ChaCha8Rng, topic: usize) -> String {
    let len = rng.random_range(8..=20);
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        let r: f64 = rng.random();
        let w = if r < 0.45 {
            TOPICS[topic].choose(rng)
        } else if r < 0.5 {
            TOPICS[rng.random_range(0..TOPICS.len())].choose(rng)
        } else {
            FILLER.choose(rng)
        };
        words.push(*w.expect("vocabularies are non-empty"));
    }
    words.join(" ")
}
