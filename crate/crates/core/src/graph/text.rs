//! Line-oriented graph text format.
//!
//! ```text
//! # comment
//! X -> Y          directed edge
//! X <-> Y         bidirected edge
//! node X          isolated node
//! node Y[X=x0] = y0 [observed]   annotated node (counterfactual graphs)
//! ```
//!
//! Variables are declared by first mention.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{spouse_pair, CausalDiagram, Variable};
use crate::error::{Error, Result};

/// Value label attached to a node of a counterfactual graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeAnnotation {
    pub value: String,
    pub fixed: bool,
}

fn valid_name(name: &str) -> bool {
    let (head, bracket) = match name.find('[') {
        Some(i) => (&name[..i], Some(&name[i..])),
        None => (name, None),
    };
    let mut chars = head.chars();
    let first_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    let head_ok = first_ok && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'');
    let bracket_ok = bracket.is_none_or(|b| {
        b.ends_with(']') && b.len() > 2 && !b[1..b.len() - 1].contains(['[', ']', '#']) && !b.contains(char::is_whitespace)
    });
    head_ok && bracket_ok
}

/// Byte index of the first `=` outside square brackets.
fn top_level_eq(s: &str) -> Option<usize> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            '=' if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

pub fn parse_graph(text: &str) -> Result<CausalDiagram> {
    parse_graph_annotated(text).map(|(g, _)| g)
}

/// Parses the graph format, also returning `node X = v [observed|fixed]`
/// annotations.
pub fn parse_graph_annotated(text: &str) -> Result<(CausalDiagram, BTreeMap<Variable, NodeAnnotation>)> {
    let mut nodes: Vec<Variable> = Vec::new();
    let mut known: BTreeSet<Variable> = BTreeSet::new();
    let mut directed: BTreeSet<(Variable, Variable)> = BTreeSet::new();
    let mut bidirected: BTreeSet<(Variable, Variable)> = BTreeSet::new();
    let mut annotations = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::GraphSyntax { line: line_no, message };
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let mut name = |s: &str| -> Result<Variable> {
            let s = s.trim();
            if !valid_name(s) {
                return Err(err(format!("invalid variable name `{s}`")));
            }
            let v = Variable::new(s)?;
            if known.insert(v.clone()) {
                nodes.push(v.clone());
            }
            Ok(v)
        };

        if let Some(rest) = line.strip_prefix("node").filter(|r| r.starts_with(char::is_whitespace)) {
            let (lhs, annotation) = match top_level_eq(rest) {
                Some(i) => (&rest[..i], Some(&rest[i + 1..])),
                None => (rest, None),
            };
            let v = name(lhs)?;
            if let Some(ann) = annotation {
                let mut parts = ann.split_whitespace();
                let value = parts.next().ok_or_else(|| err("missing value after `=`".into()))?;
                let fixed = match parts.next() {
                    None | Some("[observed]") => false,
                    Some("[fixed]") => true,
                    Some(other) => return Err(err(format!("unknown annotation `{other}`"))),
                };
                if let Some(extra) = parts.next() {
                    return Err(err(format!("unexpected `{extra}`")));
                }
                annotations.insert(v, NodeAnnotation { value: value.to_string(), fixed });
            }
            continue;
        }

        if let Some((a, b)) = line.split_once("<->") {
            let (a, b) = (name(a)?, name(b)?);
            if a == b {
                return Err(err(format!("self-loop on `{a}`")));
            }
            if !bidirected.insert(spouse_pair(&a, &b)) {
                return Err(err(format!("duplicate edge {a} <-> {b}")));
            }
        } else if let Some((a, b)) = line.split_once("->") {
            let (a, b) = (name(a)?, name(b)?);
            if a == b {
                return Err(err(format!("self-loop on `{a}`")));
            }
            if !directed.insert((a.clone(), b.clone())) {
                return Err(err(format!("duplicate edge {a} -> {b}")));
            }
        } else {
            return Err(err(format!("expected `A -> B`, `A <-> B` or `node A`, found `{line}`")));
        }
    }

    let g = CausalDiagram::new(nodes, directed, bidirected)?;
    Ok((g, annotations))
}

/// Renders a diagram in the text format: isolated nodes first, then directed
/// and bidirected edges in sorted order.
pub fn render_graph(g: &CausalDiagram) -> String {
    render_graph_with(g, &BTreeMap::new())
}

pub fn render_graph_with(g: &CausalDiagram, annotations: &BTreeMap<Variable, NodeAnnotation>) -> String {
    let mut out = String::new();
    for v in g.nodes() {
        match annotations.get(v) {
            Some(a) => {
                let kind = if a.fixed { "fixed" } else { "observed" };
                writeln!(out, "node {v} = {} [{kind}]", a.value).unwrap();
            }
            None => {
                let isolated = g.parents(v).next().is_none() && g.children(v).next().is_none() && g.spouses(v).next().is_none();
                if isolated {
                    writeln!(out, "node {v}").unwrap();
                }
            }
        }
    }
    for (a, b) in g.directed_edges() {
        writeln!(out, "{a} -> {b}").unwrap();
    }
    for (a, b) in g.bidirected_edges() {
        writeln!(out, "{a} <-> {b}").unwrap();
    }
    out
}
