//! Opinion aggregation, experiment splits, exports and the end-to-end
//! pipeline.

pub mod config;
pub mod dot;
pub mod opinions;
pub mod pipeline;
pub mod split;

pub use config::{stage_seed, DiffusionConfig, RankSource, RunConfig, SkillConfig, TeamConfig};
pub use dot::export_dot;
pub use opinions::{
    aggregate_opinions, parse_opinions, OpinionRecord, OpinionSummary, TeamOpinion,
};
pub use pipeline::{
    run_pipeline, sha256_hex, write_groups_csv, Manifest, PipelineError, PipelineOutcome,
    RunStatus, Stage,
};
pub use split::experiment_split;
