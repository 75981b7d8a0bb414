//! Team formation for online-course discussion forums.
//!
//! The crate turns a forum export into a directed reply graph, computes
//! per-student network metrics, derives skill profiles from post text,
//! partitions students into teams with a seeded local search, and
//! simulates information flow under different mechanisms and trajectories.

pub mod diffusion;
pub mod error;
pub mod format;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod skills;
pub mod synth;
pub mod teams;

pub use error::{Error, Result};
pub use graph::{
    build_reply_graph, geodesic_distances, DistanceRow, ReplyPolicy, SocialGraph, StudentId,
};
pub use ingest::{parse_forum_export, ForumMessage, ParseReport};
