//! End-to-end run: ingest, metrics and skills in parallel, partition,
//! brokerage, teams, diffusion typology and exports.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{stage_seed, RankSource, RunConfig};
use super::dot::export_dot;
use crate::diffusion::{
    simulate, typology_report, write_typology_csv, FlowSpec, Mechanism, Trajectory, TypologyReport,
};
use crate::error::{Error, Result};
use crate::graph::{build_reply_graph, csv_err, BuildDiagnostics, SocialGraph};
use crate::ingest::parse_forum_export;
use crate::metrics::{
    attach_brokerage, brokerage_counts, compute_metrics, write_metrics_csv, GroupPartition,
    NodeMetrics,
};
use crate::skills::{
    default_stopwords, parse_stopwords, refine_skills, skill_partition, skill_profiles,
    SkillProfile,
};
use crate::teams::{form_teams, TeamAssignment};

pub const MANIFEST: &str = "manifest.json";
pub const TIMINGS: &str = "timings.json";
pub const EDGES: &str = "edges.csv";
pub const METRICS: &str = "metrics.csv";
pub const SKILLS: &str = "skills.json";
pub const GROUPS: &str = "groups.csv";
pub const TEAMS: &str = "teams.json";
pub const TRACE: &str = "diffusion.csv";
pub const TYPOLOGY: &str = "typology.csv";
pub const DOT: &str = "graph.dot";

const ARTIFACTS: [&str; 8] = [EDGES, METRICS, SKILLS, GROUPS, TEAMS, TRACE, TYPOLOGY, DOT];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ingest,
    Metrics,
    Skills,
    Partition,
    Brokerage,
    Teams,
    Diffusion,
    Export,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Metrics => "metrics",
            Stage::Skills => "skills",
            Stage::Partition => "partition",
            Stage::Brokerage => "brokerage",
            Stage::Teams => "teams",
            Stage::Diffusion => "diffusion",
            Stage::Export => "export",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage `{stage}` failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Complete,
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseSummary {
    pub parsed: usize,
    pub anonymous: usize,
    pub skipped: usize,
}

/// Everything needed to reproduce a run. Wall-clock timings are kept in a
/// separate file so that reruns give byte-identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub status: RunStatus,
    pub failed_stage: Option<Stage>,
    pub error: Option<String>,
    pub seed: u64,
    pub stage_seeds: BTreeMap<String, u64>,
    pub config: RunConfig,
    pub input_sha256: Option<String>,
    pub parse: Option<ParseSummary>,
    pub build: Option<BuildDiagnostics>,
    pub nodes: usize,
    pub edges: usize,
    pub total_weight: u64,
    pub skipped_stages: BTreeMap<String, String>,
    /// Artifact file name to sha256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub manifest: Manifest,
    pub graph: SocialGraph,
    pub metrics: Vec<NodeMetrics>,
    pub profiles: Vec<SkillProfile>,
    pub partition: Option<GroupPartition>,
    pub teams: Option<TeamAssignment>,
    pub typology: Option<TypologyReport>,
    /// Seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Run<'a> {
    cfg: &'a RunConfig,
    dir: PathBuf,
    manifest: Manifest,
    timings: BTreeMap<String, f64>,
}

impl Run<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.manifest
            .artifacts
            .insert(name.to_owned(), sha256_hex(bytes));
        Ok(())
    }

    fn seed(&mut self, stage: Stage) -> u64 {
        let s = stage_seed(self.cfg.seed, stage.name());
        self.manifest.stage_seeds.insert(stage.name().to_owned(), s);
        s
    }

    fn skip(&mut self, stage: Stage, reason: &str) {
        self.manifest
            .skipped_stages
            .insert(stage.name().to_owned(), reason.to_owned());
    }

    fn timed<T>(
        &mut self,
        stage: Stage,
        f: impl FnOnce(&mut Self) -> Result<T>,
    ) -> std::result::Result<T, PipelineError> {
        let start = Instant::now();
        let out = f(self);
        *self.timings.entry(stage.name().to_owned()).or_insert(0.0) +=
            start.elapsed().as_secs_f64();
        out.map_err(|source| self.fail(stage, source))
    }

    fn fail(&mut self, stage: Stage, source: Error) -> PipelineError {
        self.manifest.status = RunStatus::Incomplete;
        self.manifest.failed_stage = Some(stage);
        self.manifest.error = Some(source.to_string());
        // Best effort: the original failure matters more than this one.
        let _ = self.finish_files();
        PipelineError { stage, source }
    }

    fn finish_files(&self) -> Result<()> {
        let manifest = serde_json::to_vec_pretty(&self.manifest)?;
        fs::write(self.dir.join(MANIFEST), manifest)?;
        fs::write(
            self.dir.join(TIMINGS),
            serde_json::to_vec_pretty(&self.timings)?,
        )?;
        Ok(())
    }
}

/// `student,group` rows in student order.
pub fn write_groups_csv<W: std::io::Write>(writer: W, partition: &GroupPartition) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["student", "group"]).map_err(csv_err)?;
    for (s, g) in partition.labels() {
        w.write_record([s, g]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn normalized(scores: impl Iterator<Item = f64>) -> Vec<f64> {
    let v: Vec<f64> = scores.collect();
    let max = v.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        v.iter().map(|x| x / max).collect()
    } else {
        vec![0.0; v.len()]
    }
}

fn clear_artifacts(dir: &Path) -> Result<()> {
    for name in ARTIFACTS.iter().chain([&MANIFEST, &TIMINGS]) {
        let p = dir.join(name);
        if p.exists() {
            fs::remove_file(p)?;
        }
    }
    Ok(())
}

/// Run every stage and write artifacts to `cfg.output_dir`. On failure the
/// manifest is still written, marked incomplete and naming the stage.
pub fn run_pipeline(cfg: &RunConfig) -> std::result::Result<PipelineOutcome, PipelineError> {
    let manifest = Manifest {
        tool: "teamform".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        status: RunStatus::Complete,
        failed_stage: None,
        error: None,
        seed: cfg.seed,
        stage_seeds: BTreeMap::new(),
        config: cfg.clone(),
        input_sha256: None,
        parse: None,
        build: None,
        nodes: 0,
        edges: 0,
        total_weight: 0,
        skipped_stages: BTreeMap::new(),
        artifacts: BTreeMap::new(),
    };
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)
        .and_then(|_| clear_artifacts(&dir).map_err(|e| std::io::Error::other(e.to_string())))
        .map_err(|e| PipelineError {
            stage: Stage::Ingest,
            source: e.into(),
        })?;
    let mut run = Run {
        cfg,
        dir,
        manifest,
        timings: BTreeMap::new(),
    };
    if let Err(e) = cfg.validate() {
        return Err(run.fail(Stage::Ingest, e));
    }

    let (messages, graph) = run.timed(Stage::Ingest, |run| {
        let bytes = fs::read(&cfg.input)?;
        run.manifest.input_sha256 = Some(sha256_hex(&bytes));
        let (messages, report) = parse_forum_export(&bytes[..])?;
        run.manifest.parse = Some(ParseSummary {
            parsed: report.parsed,
            anonymous: report.anonymous,
            skipped: report.skipped_count(),
        });
        let (graph, diag) = build_reply_graph(&messages, cfg.reply_policy);
        run.manifest.build = Some(diag);
        run.manifest.nodes = graph.node_count();
        run.manifest.edges = graph.edge_count();
        run.manifest.total_weight = graph.total_weight();
        let mut buf = Vec::new();
        graph.write_edge_csv(&mut buf)?;
        run.write(EDGES, &buf)?;
        Ok((messages, graph))
    })?;

    // Metrics and skill extraction are independent of each other.
    let start = Instant::now();
    let stopwords = match &cfg.skills.stopwords {
        Some(p) => fs::read_to_string(p)
            .map(|t| parse_stopwords(&t))
            .map_err(Error::from),
        None => Ok(default_stopwords()),
    };
    let (metrics, profiles) = std::thread::scope(|s| {
        let handle = s.spawn(|| compute_metrics(&graph, &cfg.metrics));
        let profiles = stopwords.and_then(|sw| skill_profiles(&messages, &sw, &cfg.skills.options));
        let metrics = handle.join().expect("metrics thread panicked");
        (metrics, profiles)
    });
    let elapsed = start.elapsed().as_secs_f64();
    run.timings.insert("metrics+skills".into(), elapsed);
    let mut metrics = metrics.map_err(|e| run.fail(Stage::Metrics, e))?;
    let raw_profiles = profiles.map_err(|e| run.fail(Stage::Skills, e))?;

    let profiles = run.timed(Stage::Skills, |_| {
        let rank = match cfg.skills.rank_source {
            RankSource::Pagerank => normalized(metrics.iter().map(|m| m.pagerank)),
            RankSource::Authority => normalized(metrics.iter().map(|m| m.authority)),
        };
        raw_profiles
            .iter()
            .map(|p| {
                let node = graph.require(&p.student)?;
                refine_skills(p, rank[node], cfg.skills.beta)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let partition_seed = run.seed(Stage::Partition);
    let partition = if profiles.is_empty() {
        run.skip(Stage::Partition, "no students");
        None
    } else {
        Some(run.timed(Stage::Partition, |_| {
            skill_partition(
                &profiles,
                cfg.skills.n_groups.min(profiles.len()),
                partition_seed,
            )
        })?)
    };
    run.timed(Stage::Skills, |run| {
        run.write(SKILLS, &serde_json::to_vec_pretty(&profiles)?)?;
        if let Some(p) = &partition {
            let mut buf = Vec::new();
            write_groups_csv(&mut buf, p)?;
            run.write(GROUPS, &buf)?;
        }
        Ok(())
    })?;

    run.timed(Stage::Brokerage, |run| {
        if let Some(p) = &partition {
            let counts = brokerage_counts(&graph, p)?;
            attach_brokerage(&mut metrics, &counts);
        }
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &metrics)?;
        run.write(METRICS, &buf)
    })?;

    let team_seed = run.seed(Stage::Teams);
    let teams = if graph.node_count() < cfg.teams.bounds.s_min {
        run.skip(Stage::Teams, "fewer students than the minimum team size");
        None
    } else {
        let t = &cfg.teams;
        Some(run.timed(Stage::Teams, |run| {
            let a = form_teams(
                &graph,
                &metrics,
                t.bounds,
                t.weights,
                t.restarts,
                t.iterations,
                team_seed,
            )?;
            let bytes = serde_json::to_vec_pretty(&a)?;
            run.write(TEAMS, &bytes)?;
            Ok(a)
        })?)
    };

    let diffusion_seed = run.seed(Stage::Diffusion);
    let typology = match &cfg.diffusion {
        None => {
            run.skip(Stage::Diffusion, "disabled");
            None
        }
        Some(_) if graph.edge_count() == 0 => {
            run.skip(Stage::Diffusion, "graph has no edges");
            None
        }
        Some(d) => Some(run.timed(Stage::Diffusion, |run| {
            let sources = if d.sources.is_empty() {
                let best = (0..metrics.len())
                    .max_by(|&a, &b| {
                        metrics[a]
                            .pagerank
                            .total_cmp(&metrics[b].pagerank)
                            .then(b.cmp(&a))
                    })
                    .expect("graph has nodes");
                vec![graph.id(best).to_owned()]
            } else {
                d.sources.clone()
            };
            let mut specs = Vec::new();
            for m in Mechanism::ALL {
                for t in Trajectory::ALL {
                    let mut spec = FlowSpec::new(m, t, sources.clone());
                    spec.max_steps = d.max_steps;
                    spec.replications = d.replications;
                    spec.copy_cap = d.copy_cap;
                    spec.hop_choice = d.hop_choice;
                    spec.seed = diffusion_seed;
                    specs.push(spec);
                }
            }
            let report = typology_report(&graph, &specs, &metrics, d.outcome)?;
            let mut buf = Vec::new();
            write_typology_csv(&mut buf, &report)?;
            run.write(TYPOLOGY, &buf)?;
            let trace_spec = specs
                .iter()
                .find(|s| s.mechanism == Mechanism::ParallelDup && s.trajectory == Trajectory::Walk)
                .expect("all combinations are present");
            let trace = simulate(&graph, trace_spec)?;
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            run.write(TRACE, &buf)?;
            Ok(report)
        })?),
    };

    run.timed(Stage::Export, |run| {
        let dot = export_dot(&graph, teams.as_ref());
        run.write(DOT, dot.as_bytes())?;
        run.finish_files()
    })?;

    Ok(PipelineOutcome {
        manifest: run.manifest,
        graph,
        metrics,
        profiles,
        partition,
        teams,
        typology,
        timings: run.timings,
    })
}
