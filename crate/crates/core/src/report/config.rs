use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffusion::{FlowOutcome, HopChoice};
use crate::error::{Error, Result};
use crate::graph::ReplyPolicy;
use crate::metrics::MetricsOptions;
use crate::skills::SkillOptions;
use crate::teams::{ObjectiveWeights, SizeBounds};

/// Which rank score refines skill weights.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankSource {
    #[default]
    Pagerank,
    Authority,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkillConfig {
    #[serde(flatten)]
    pub options: SkillOptions,
    pub beta: f64,
    pub rank_source: RankSource,
    /// Upper bound; fewer groups are used when there are fewer students.
    pub n_groups: usize,
    /// Replacement stopword list, one word per line.
    pub stopwords: Option<PathBuf>,
}

impl Default for SkillConfig {
    fn default() -> Self {
        SkillConfig {
            options: SkillOptions::default(),
            beta: 1.0,
            rank_source: RankSource::default(),
            n_groups: 5,
            stopwords: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeamConfig {
    pub bounds: SizeBounds,
    pub weights: ObjectiveWeights,
    pub restarts: usize,
    pub iterations: usize,
}

impl Default for TeamConfig {
    fn default() -> Self {
        TeamConfig {
            bounds: SizeBounds::new(3, 5),
            weights: ObjectiveWeights::default(),
            restarts: 8,
            iterations: 50,
        }
    }
}

/// Typology run over every mechanism and trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiffusionConfig {
    /// Sources of every flow; empty means the student with the highest
    /// PageRank.
    pub sources: Vec<String>,
    pub max_steps: u32,
    pub replications: u32,
    pub copy_cap: Option<usize>,
    pub hop_choice: HopChoice,
    pub outcome: FlowOutcome,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            sources: Vec::new(),
            max_steps: 10,
            replications: 20,
            copy_cap: None,
            hop_choice: HopChoice::default(),
            outcome: FlowOutcome::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub reply_policy: ReplyPolicy,
    pub metrics: MetricsOptions,
    pub skills: SkillConfig,
    pub teams: TeamConfig,
    /// `None` skips the diffusion stage.
    pub diffusion: Option<DiffusionConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: PathBuf::from("forum.jsonl"),
            output_dir: PathBuf::from("out"),
            seed: 0,
            reply_policy: ReplyPolicy::default(),
            metrics: MetricsOptions::default(),
            skills: SkillConfig::default(),
            teams: TeamConfig::default(),
            diffusion: Some(DiffusionConfig::default()),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.teams.bounds.validate()?;
        self.teams.weights.validate()?;
        if self.skills.beta < 0.0 || !self.skills.beta.is_finite() {
            return Err(Error::param("beta must be a non-negative number"));
        }
        if self.skills.options.k == 0 {
            return Err(Error::param("k must be at least 1"));
        }
        if self.skills.n_groups == 0 {
            return Err(Error::param("n_groups must be at least 1"));
        }
        if self.teams.restarts == 0 {
            return Err(Error::param("restarts must be at least 1"));
        }
        if let Some(d) = &self.diffusion {
            if d.replications == 0 {
                return Err(Error::param("replications must be at least 1"));
            }
        }
        Ok(())
    }
}

/// Per-stage seed: the first eight bytes of `sha256(master_le || stage)`.
pub fn stage_seed(master: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stage.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
