use std::fmt::Write;

use crate::graph::SocialGraph;
use crate::teams::TeamAssignment;

fn quote(id: &str) -> String {
    format!("\"{}\"", id.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz description of the graph, edges labelled with weights and, when
/// an assignment is given, nodes tagged with their team.
pub fn export_dot(g: &SocialGraph, assignment: Option<&TeamAssignment>) -> String {
    let mut out = String::from("digraph social {\n");
    for id in g.ids() {
        let team = assignment.and_then(|a| a.team_of(id));
        match team {
            Some(t) => writeln!(out, "  {} [team=\"{t}\", group=\"team{t}\"];", quote(id)),
            None => writeln!(out, "  {};", quote(id)),
        }
        .expect("writing to a String");
    }
    for (u, v, w) in g.edges() {
        writeln!(
            out,
            "  {} -> {} [label=\"{w}\"];",
            quote(g.id(u)),
            quote(g.id(v))
        )
        .expect("writing to a String");
    }
    out.push_str("}\n");
    out
}
