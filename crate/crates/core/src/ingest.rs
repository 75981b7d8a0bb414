//! Forum export parsing.
//!
//! The export is JSON-Lines: one message object per line with the keys
//! `id`, `thread_id`, `parent_id`, `author`, `timestamp` and `body`.
//! Unknown keys (`forum`, `subforum`, ...) are ignored.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One post or comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForumMessage {
    pub id: String,
    pub thread_id: String,
    #[serde(default)]
    pub parent_id: Option<String>,
    /// `None` for anonymous messages.
    #[serde(default)]
    pub author: Option<String>,
    pub timestamp: u64,
    #[serde(default)]
    pub body: String,
}

impl ForumMessage {
    pub fn is_comment(&self) -> bool {
        self.parent_id.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    /// 1-based line number in the input.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub parsed: usize,
    pub anonymous: usize,
    pub skipped: Vec<SkippedLine>,
}

impl ParseReport {
    pub fn skipped_count(&self) -> usize {
        self.skipped.len()
    }
}

/// Parse a JSON-Lines forum export. Blank lines are ignored. Malformed lines
/// are skipped and reported, unless more than half of the lines are
/// malformed, in which case the whole input is rejected.
pub fn parse_forum_export<R: BufRead>(reader: R) -> Result<(Vec<ForumMessage>, ParseReport)> {
    let mut messages = Vec::new();
    let mut report = ParseReport::default();
    let mut seen = HashSet::new();
    let mut total = 0usize;

    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match serde_json::from_str::<ForumMessage>(&line) {
            Ok(msg) => {
                if !seen.insert(msg.id.clone()) {
                    report.skipped.push(SkippedLine {
                        line: n + 1,
                        reason: format!("duplicate id `{}`", msg.id),
                    });
                    continue;
                }
                if msg.author.is_none() {
                    report.anonymous += 1;
                }
                messages.push(msg);
            }
            Err(e) => report.skipped.push(SkippedLine {
                line: n + 1,
                reason: e.to_string(),
            }),
        }
    }

    report.parsed = messages.len();
    if report.skipped.len() * 2 > total {
        return Err(Error::MostlyMalformed {
            malformed: report.skipped.len(),
            total,
        });
    }
    Ok((messages, report))
}

pub fn write_forum_export<W: Write>(mut writer: W, messages: &[ForumMessage]) -> Result<()> {
    for msg in messages {
        serde_json::to_writer(&mut writer, msg)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}
