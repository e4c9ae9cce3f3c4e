//! Canonical JSON graph files.
//!
//! ```text
//! {
//!   "version": 1,
//!   "L": 64,
//!   "W": 2,
//!   "provenance": {"p": 0.1, "c": 2, "seed": 7},
//!   "edges": [
//!     [0, 0, 1],
//!     ...
//!   ],
//!   "training": [0, 1, 2]
//! }
//! ```
//!
//! `provenance` is `null` for graphs that were not rewired. Edges are
//! `[factor, variable, multiplicity]` sorted by `(factor, variable)` and the
//! training list is sorted, so equal graphs serialize to identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{CouplingGraph, Provenance, TrainingAssignment};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    version: u32,
    #[serde(rename = "L")]
    len: usize,
    #[serde(rename = "W")]
    width: usize,
    provenance: Option<Provenance>,
    edges: Vec<(usize, usize, u32)>,
    training: Vec<usize>,
}

fn json_number<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("numbers always serialize")
}

pub fn serialize_graph(g: &CouplingGraph, training: &TrainingAssignment) -> String {
    let mut s = String::new();
    s.push_str("{\n");
    let _ = writeln!(s, "  \"version\": {FORMAT_VERSION},");
    let _ = writeln!(s, "  \"L\": {},", g.len());
    let _ = writeln!(s, "  \"W\": {},", g.width());
    match g.provenance() {
        Some(pv) => {
            let _ = writeln!(
                s,
                "  \"provenance\": {{\"p\": {}, \"c\": {}, \"seed\": {}}},",
                json_number(&pv.p),
                pv.c,
                pv.seed
            );
        }
        None => s.push_str("  \"provenance\": null,\n"),
    }
    let edges: Vec<String> = g
        .edges()
        .map(|(l, m, k)| format!("    [{l}, {m}, {k}]"))
        .collect();
    if edges.is_empty() {
        s.push_str("  \"edges\": [],\n");
    } else {
        s.push_str("  \"edges\": [\n");
        s.push_str(&edges.join(",\n"));
        s.push_str("\n  ],\n");
    }
    let training: Vec<String> = training.indices().iter().map(|l| l.to_string()).collect();
    let _ = writeln!(s, "  \"training\": [{}]", training.join(", "));
    s.push_str("}\n");
    s
}

fn parse_err(context: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.into(),
        message: message.into(),
    }
}

/// Parses a graph file, validating every structural invariant. Nothing is
/// returned unless the whole document is valid.
pub fn parse_graph(text: &str) -> Result<(CouplingGraph, TrainingAssignment)> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| {
        parse_err(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    if file.version != FORMAT_VERSION {
        return Err(parse_err(
            "version",
            format!(
                "unsupported version {} (expected {FORMAT_VERSION})",
                file.version
            ),
        ));
    }
    if file.len == 0 {
        return Err(parse_err("L", "must be positive"));
    }
    if file.width == 0 {
        return Err(parse_err("W", "must be positive"));
    }
    if let Some(pv) = &file.provenance {
        if !(0.0..=1.0).contains(&pv.p) {
            return Err(parse_err(
                "provenance.p",
                format!("{} outside [0, 1]", pv.p),
            ));
        }
        if pv.c == 0 {
            return Err(parse_err("provenance.c", "must be positive"));
        }
    }
    let len = file.len;
    for (i, &(l, m, k)) in file.edges.iter().enumerate() {
        if l >= len || m >= len {
            return Err(parse_err(
                format!("edges[{i}]"),
                format!("node index out of range for L={len}: [{l}, {m}, {k}]"),
            ));
        }
        if k == 0 {
            return Err(parse_err(
                format!("edges[{i}]"),
                "multiplicity must be positive",
            ));
        }
        if i > 0 {
            let (pl, pm, _) = file.edges[i - 1];
            if (pl, pm) >= (l, m) {
                return Err(parse_err(
                    format!("edges[{i}]"),
                    "edges must be strictly sorted by (factor, variable)",
                ));
            }
        }
    }
    for (i, w) in file.training.windows(2).enumerate() {
        if w[0] >= w[1] {
            return Err(parse_err(
                format!("training[{}]", i + 1),
                "indices must be strictly ascending",
            ));
        }
    }
    let training = TrainingAssignment::new(file.training, len)
        .map_err(|e| parse_err("training", e.to_string()))?;
    let graph = CouplingGraph::from_edges(len, file.width, file.edges, file.provenance)
        .map_err(|e| parse_err("edges", e.to_string()))?;
    Ok((graph, training))
}

pub fn write_graph_file(
    path: impl AsRef<Path>,
    g: &CouplingGraph,
    training: &TrainingAssignment,
) -> Result<()> {
    std::fs::write(path, serialize_graph(g, training))?;
    Ok(())
}

pub fn read_graph_file(path: impl AsRef<Path>) -> Result<(CouplingGraph, TrainingAssignment)> {
    let text = std::fs::read_to_string(path)?;
    parse_graph(&text)
}
