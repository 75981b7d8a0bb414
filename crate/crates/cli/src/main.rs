use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use teamform::diffusion::{simulate, FlowSpec, HopChoice, Mechanism, Trajectory};
use teamform::graph::{build_reply_graph, BuildDiagnostics, ReplyPolicy, SocialGraph};
use teamform::ingest::{parse_forum_export, write_forum_export, ForumMessage, ParseReport};
use teamform::metrics::{
    attach_brokerage, brokerage_counts, compute_metrics, write_metrics_csv, GroupPartition,
    MetricsOptions, NodeMetrics, PageRankParams,
};
use teamform::report::{
    aggregate_opinions, experiment_split, export_dot, parse_opinions, run_pipeline, stage_seed,
    RankSource, RunConfig,
};
use teamform::skills::{
    default_stopwords, parse_stopwords, refine_skills, skill_partition, skill_profiles,
    SkillOptions, SkillProfile,
};
use teamform::synth::{synth_corpus, SynthParams};
use teamform::teams::{form_teams, ObjectiveWeights, RemainderPolicy, SizeBounds, TeamAssignment};
use teamform::Error;

/// Team formation and network analysis for course discussion forums.
#[derive(Parser)]
#[command(name = "teamform", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the reply graph and write its edge list.
    Ingest {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-student network metrics as CSV.
    Metrics {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        rank: RankArgs,
        /// CSV of `student,group` for brokerage roles; one group if omitted.
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Top-k skill profiles, refined by rank.
    Skills {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        skills: SkillArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Form teams by local search.
    Teams {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        skills: SkillArgs,
        #[command(flatten)]
        teams: TeamArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one flow and write per-student arrivals.
    Diffuse {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_parser = kebab::<Mechanism>, default_value = "transfer")]
        mechanism: Mechanism,
        #[arg(long, value_parser = kebab::<Trajectory>, default_value = "walk")]
        trajectory: Trajectory,
        /// Starting student; repeat for several.
        #[arg(long = "from", required = true)]
        sources: Vec<String>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 10)]
        max_steps: u32,
        #[arg(long, default_value_t = 100)]
        replications: u32,
        #[arg(long)]
        copy_cap: Option<usize>,
        #[arg(long, value_parser = kebab::<HopChoice>, default_value = "weight-proportional")]
        hop_choice: HopChoice,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Opinion summaries, cohort splits and graph exports.
    Report {
        #[command(subcommand)]
        report: Report,
    },
    /// Write a synthetic forum export.
    Synth {
        #[arg(long, default_value_t = 771)]
        students: usize,
        #[arg(long, default_value_t = 665)]
        threads: usize,
        /// Posts including thread starters.
        #[arg(long, default_value_t = 1503)]
        posts: usize,
        #[arg(long, default_value_t = 1100)]
        comments: usize,
        #[arg(long, default_value_t = 0.05)]
        anonymous_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage and write artifacts plus a manifest.
    Pipeline(PipelineArgs),
}

#[derive(Subcommand)]
enum Report {
    /// Per-team opinion summary from pre-scored JSON-Lines records.
    Opinions {
        #[arg(long)]
        opinions: PathBuf,
        /// A teams.json written by `teams` or `pipeline`.
        #[arg(long)]
        teams: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded experimental/control split of the forum's students.
    Split {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Graphviz export, optionally tagged with teams.
    Dot {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        teams: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Source {
    /// Forum export, one JSON message per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = kebab::<ReplyPolicy>, default_value = "thread-starter")]
    policy: ReplyPolicy,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

impl RankArgs {
    fn options(&self) -> MetricsOptions {
        MetricsOptions {
            pagerank: PageRankParams {
                damping: self.damping,
                tol: self.tol,
                ..PageRankParams::default()
            },
            ..MetricsOptions::default()
        }
    }
}

#[derive(Args)]
struct SkillArgs {
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    min_len: usize,
    #[arg(long)]
    idf: bool,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, value_parser = kebab::<RankSource>, default_value = "pagerank")]
    rank_source: RankSource,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    n_groups: usize,
    #[command(flatten)]
    rank: RankArgs,
}

#[derive(Args)]
struct TeamArgs {
    #[arg(long, default_value_t = 3)]
    s_min: usize,
    #[arg(long, default_value_t = 5)]
    s_max: usize,
    #[arg(long, value_parser = kebab::<RemainderPolicy>, default_value = "smaller-team")]
    remainder: RemainderPolicy,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    w_cost: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    w_hole: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    w_balance: f64,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Maximum improvement passes per restart.
    #[arg(long, default_value_t = 50)]
    iterations: usize,
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = kebab::<ReplyPolicy>)]
    policy: Option<ReplyPolicy>,
    #[arg(long)]
    no_diffusion: bool,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

enum Failure {
    Usage(String),
    Data(String),
    Stage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Stage(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Stage(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Parameter(_) => Failure::Usage(msg),
            Error::Io(_)
            | Error::Json(_)
            | Error::MissingNode(_)
            | Error::MostlyMalformed { .. }
            | Error::Data(_) => Failure::Data(msg),
            Error::Undefined(_) | Error::InsufficientData(_) | Error::TooLarge(_) => {
                Failure::Stage(msg)
            }
        }
    }
}

fn data_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

type Outcome<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn output(path: Option<&Path>, bytes: &[u8]) -> Outcome {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| data_err(p, e)),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Data(e.to_string())),
    }
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serialisable");
    v.push(b'\n');
    v
}

fn read_messages(path: &Path) -> Outcome<(Vec<ForumMessage>, ParseReport)> {
    let f = File::open(path).map_err(|e| data_err(path, e))?;
    parse_forum_export(BufReader::new(f)).map_err(|e| data_err(path, e))
}

struct Loaded {
    messages: Vec<ForumMessage>,
    report: ParseReport,
    graph: SocialGraph,
    diag: BuildDiagnostics,
}

fn load(source: &Source) -> Outcome<Loaded> {
    let (messages, report) = read_messages(&source.input)?;
    for s in &report.skipped {
        eprintln!("skipped line {}: {}", s.line, s.reason);
    }
    let (graph, diag) = build_reply_graph(&messages, source.policy);
    Ok(Loaded {
        messages,
        report,
        graph,
        diag,
    })
}

fn read_groups(path: &Path) -> Outcome<GroupPartition> {
    let text = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    let mut labels = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line == "student,group") {
            continue;
        }
        let (s, g) = line
            .split_once(',')
            .ok_or_else(|| data_err(path, format!("line {}: expected `student,group`", n + 1)))?;
        labels.insert(s.trim().to_owned(), g.trim().to_owned());
    }
    Ok(GroupPartition::new(labels))
}

fn read_teams(path: &Path) -> Outcome<TeamAssignment> {
    let text = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| data_err(path, e))
}

/// Metrics with brokerage roles over the skill partition, as the pipeline
/// computes them.
fn analyse(
    loaded: &Loaded,
    args: &SkillArgs,
    seed: u64,
) -> Outcome<(Vec<NodeMetrics>, Vec<SkillProfile>)> {
    let mut metrics = compute_metrics(&loaded.graph, &args.rank.options())?;
    let stopwords: HashSet<String> = match &args.stopwords {
        Some(p) => parse_stopwords(&fs::read_to_string(p).map_err(|e| data_err(p, e))?),
        None => default_stopwords(),
    };
    let opts = SkillOptions {
        k: args.k,
        min_len: args.min_len,
        idf: args.idf,
    };
    let raw = skill_profiles(&loaded.messages, &stopwords, &opts)?;
    let scores: Vec<f64> = metrics
        .iter()
        .map(|m| match args.rank_source {
            RankSource::Pagerank => m.pagerank,
            RankSource::Authority => m.authority,
        })
        .collect();
    let max = scores.iter().cloned().fold(0.0, f64::max);
    let profiles = raw
        .iter()
        .map(|p| {
            let node = loaded.graph.require(&p.student)?;
            refine_skills(
                p,
                if max > 0.0 { scores[node] / max } else { 0.0 },
                args.beta,
            )
        })
        .collect::<Result<Vec<_>, Error>>()?;
    if !profiles.is_empty() {
        let groups_n = args.n_groups.min(profiles.len());
        let partition = skill_partition(&profiles, groups_n, stage_seed(seed, "partition"))?;
        let counts = brokerage_counts(&loaded.graph, &partition)?;
        attach_brokerage(&mut metrics, &counts);
    }
    Ok((metrics, profiles))
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Ingest { source, out } => {
            let l = load(&source)?;
            let mut buf = Vec::new();
            l.graph.write_edge_csv(&mut buf)?;
            output(out.as_deref(), &buf)?;
            eprintln!(
                "parsed {} messages ({} anonymous, {} skipped); {} students, {} edges; {} self-replies, {} missing parents",
                l.report.parsed,
                l.report.anonymous,
                l.report.skipped_count(),
                l.graph.node_count(),
                l.graph.edge_count(),
                l.diag.self_replies,
                l.diag.missing_parent
            );
            Ok(())
        }
        Command::Metrics {
            source,
            rank,
            groups,
            out,
        } => {
            let l = load(&source)?;
            let mut metrics = compute_metrics(&l.graph, &rank.options())?;
            let partition = match &groups {
                Some(p) => read_groups(p)?,
                None => GroupPartition::single(&l.graph, "all"),
            };
            let counts = brokerage_counts(&l.graph, &partition)?;
            attach_brokerage(&mut metrics, &counts);
            let mut buf = Vec::new();
            write_metrics_csv(&mut buf, &metrics)?;
            output(out.as_deref(), &buf)
        }
        Command::Skills {
            source,
            skills,
            out,
        } => {
            let l = load(&source)?;
            let (_, profiles) = analyse(&l, &skills, 0)?;
            output(out.as_deref(), &json(&profiles))
        }
        Command::Teams {
            source,
            skills,
            teams,
            seed,
            out,
        } => {
            let l = load(&source)?;
            let (metrics, _) = analyse(&l, &skills, seed)?;
            let bounds = SizeBounds {
                s_min: teams.s_min,
                s_max: teams.s_max,
                remainder: teams.remainder,
            };
            let weights = ObjectiveWeights::new(teams.w_cost, teams.w_hole, teams.w_balance)?;
            let assignment = form_teams(
                &l.graph,
                &metrics,
                bounds,
                weights,
                teams.restarts,
                teams.iterations,
                stage_seed(seed, "teams"),
            )?;
            output(out.as_deref(), &json(&assignment))
        }
        Command::Diffuse {
            source,
            mechanism,
            trajectory,
            sources,
            target,
            max_steps,
            replications,
            copy_cap,
            hop_choice,
            seed,
            out,
        } => {
            let l = load(&source)?;
            let spec = FlowSpec {
                target,
                max_steps,
                replications,
                copy_cap,
                hop_choice,
                seed: stage_seed(seed, "diffusion"),
                ..FlowSpec::new(mechanism, trajectory, sources)
            };
            let trace = simulate(&l.graph, &spec)?;
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            output(out.as_deref(), &buf)?;
            eprintln!(
                "{} of {} students reached in {} steps{}",
                trace.reached_count(),
                l.graph.node_count(),
                trace.steps_run,
                if trace.truncated { " (truncated)" } else { "" }
            );
            Ok(())
        }
        Command::Report { report } => run_report(report),
        Command::Synth {
            students,
            threads,
            posts,
            comments,
            anonymous_fraction,
            seed,
            out,
        } => {
            let params = SynthParams {
                anonymous_fraction,
                ..SynthParams::new(students, threads, posts, comments, seed)
            };
            let messages = synth_corpus(&params)?;
            match out {
                Some(p) => {
                    let f = File::create(&p).map_err(|e| data_err(&p, e))?;
                    write_forum_export(BufWriter::new(f), &messages)?;
                }
                None => write_forum_export(io::stdout().lock(), &messages)?,
            }
            Ok(())
        }
        Command::Pipeline(args) => run_pipeline_cmd(args),
    }
}

fn run_report(report: Report) -> Outcome {
    match report {
        Report::Opinions {
            opinions,
            teams,
            out,
        } => {
            let f = File::open(&opinions).map_err(|e| data_err(&opinions, e))?;
            let records = parse_opinions(BufReader::new(f)).map_err(|e| data_err(&opinions, e))?;
            let assignment = read_teams(&teams)?;
            output(
                out.as_deref(),
                &json(&aggregate_opinions(&records, &assignment)),
            )
        }
        Report::Split {
            source,
            fraction,
            seed,
            out,
        } => {
            let l = load(&source)?;
            let (experimental, control) = experiment_split(l.graph.ids(), fraction, seed)?;
            let body = serde_json::json!({ "experimental": experimental, "control": control });
            output(out.as_deref(), &json(&body))
        }
        Report::Dot { source, teams, out } => {
            let l = load(&source)?;
            let assignment = teams.as_deref().map(read_teams).transpose()?;
            output(
                out.as_deref(),
                export_dot(&l.graph, assignment.as_ref()).as_bytes(),
            )
        }
    }
}

fn run_pipeline_cmd(args: PipelineArgs) -> Outcome {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(i) = args.input {
        cfg.input = i;
    }
    if let Some(o) = args.out_dir {
        cfg.output_dir = o;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(p) = args.policy {
        cfg.reply_policy = p;
    }
    if args.no_diffusion {
        cfg.diffusion = None;
    }
    cfg.validate()?;
    if args.print_config {
        return output(None, format!("{}\n", cfg.to_json()).as_bytes());
    }
    let outcome = run_pipeline(&cfg).map_err(|e| Failure::Stage(e.to_string()))?;
    let m = &outcome.manifest;
    println!(
        "{} students, {} edges, {} teams; artifacts in {}",
        m.nodes,
        m.edges,
        outcome.teams.as_ref().map_or(0, |t| t.teams.len()),
        cfg.output_dir.display()
    );
    for (stage, reason) in &m.skipped_stages {
        println!("skipped {stage}: {reason}");
    }
    Ok(())
}
