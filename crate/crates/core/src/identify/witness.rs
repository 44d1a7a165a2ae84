//! Graphical certificates of non-identifiability.
//!
//! A c-component `S` of a counterfactual graph is a witness when some
//! variable `X` among the parents of `S` (outside `S`) is set to a value `x`
//! while another parent copy of `X`, or a node of `S` derived from `X`,
//! carries a different value `x'`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::Result;
use crate::events::{CfConjunction, Value, FREE_SIGIL};
use crate::graph::{CausalDiagram, Variable};
use crate::worlds::{make_cg, CounterfactualGraph, MakeCg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictKind {
    /// Two parents of the component with the same base carry different values.
    ParentSetTwice,
    /// A component node of the same base carries a different value.
    ObservedInside,
}

impl fmt::Display for ConflictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConflictKind::ParentSetTwice => "parent_set_twice",
            ConflictKind::ObservedInside => "observed_inside",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonIdWitness {
    /// Nodes of the c-component.
    pub component: BTreeSet<Variable>,
    pub conflict_var: Variable,
    pub value_in_sub: Value,
    pub conflicting_value: Value,
    pub kind: ConflictKind,
    /// Conjunction whose counterfactual graph contains the component.
    pub query: CfConjunction,
}

impl fmt::Display for NonIdWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nodes: Vec<&str> = self.component.iter().map(|v| v.as_str()).collect();
        let show = |v: &Value| if v.as_str().starts_with(FREE_SIGIL) { "an unobserved value".to_string() } else { v.to_string() };
        let (set, other) = (show(&self.value_in_sub), show(&self.conflicting_value));
        match self.kind {
            ConflictKind::ParentSetTwice => write!(
                f,
                "c-component {{{}}} has parent {} set to {} and to {}",
                nodes.join(", "),
                self.conflict_var,
                set,
                other
            ),
            ConflictKind::ObservedInside => write!(
                f,
                "c-component {{{}}} has parent {} set to {} while a copy of {} inside it takes {}",
                nodes.join(", "),
                self.conflict_var,
                set,
                self.conflict_var,
                other
            ),
        }
    }
}

/// Value of each non-fixed node, with a distinct placeholder for nodes the
/// query leaves unobserved.
pub(crate) fn node_values(cg: &CounterfactualGraph) -> BTreeMap<Variable, Value> {
    cg.nodes()
        .map(|(name, n)| {
            let v = match n.status.value() {
                Some(v) => v.clone(),
                None => Value::symbol(format!("{FREE_SIGIL}{name}")),
            };
            (name.clone(), v)
        })
        .collect()
}

/// Nodes outside `s` with a child in `s`.
pub(crate) fn outside_parents(cg: &CounterfactualGraph, s: &BTreeSet<Variable>) -> BTreeSet<Variable> {
    s.iter().flat_map(|n| cg.admg().parents(n)).filter(|p| !s.contains(*p)).cloned().collect()
}

/// Every conflict of component `s`, in a fixed order.
pub(crate) fn conflicts(
    cg: &CounterfactualGraph,
    s: &BTreeSet<Variable>,
    values: &BTreeMap<Variable, Value>,
) -> Vec<(Variable, Value, Value, ConflictKind)> {
    let mut sub: BTreeMap<Variable, BTreeSet<Value>> = BTreeMap::new();
    for p in outside_parents(cg, s) {
        sub.entry(cg.node(&p).base.clone()).or_default().insert(values[&p].clone());
    }
    let mut inside: BTreeMap<Variable, BTreeSet<Value>> = BTreeMap::new();
    for n in s {
        inside.entry(cg.node(n).base.clone()).or_default().insert(values[n].clone());
    }
    let mut out = Vec::new();
    for (x, vals) in &sub {
        for a in vals {
            for b in vals {
                if a != b {
                    out.push((x.clone(), a.clone(), b.clone(), ConflictKind::ParentSetTwice));
                }
            }
        }
    }
    for (x, vals) in &sub {
        for a in vals {
            for b in inside.get(x).into_iter().flatten() {
                if a != b {
                    out.push((x.clone(), a.clone(), b.clone(), ConflictKind::ObservedInside));
                }
            }
        }
    }
    out
}

/// Scans the c-components of `cg` for a conflict. `query` is recorded in
/// the witness.
pub fn find_witness(cg: &CounterfactualGraph, query: &CfConjunction) -> Option<NonIdWitness> {
    let values = node_values(cg);
    for s in cg.c_components() {
        if let Some((x, a, b, kind)) = conflicts(cg, &s, &values).into_iter().next() {
            return Some(NonIdWitness { component: s, conflict_var: x, value_in_sub: a, conflicting_value: b, kind, query: query.clone() });
        }
    }
    None
}

/// Rebuilds the counterfactual graph of the witness's query and checks that
/// the component is one of its c-components and exhibits the stated
/// conflict.
pub fn validate_witness(g: &CausalDiagram, w: &NonIdWitness) -> Result<bool> {
    let build = match make_cg(g, &w.query)? {
        MakeCg::Graph(b) => b,
        MakeCg::Inconsistent { .. } => return Ok(false),
    };
    let cg = &build.graph;
    if !cg.c_components().contains(&w.component) {
        return Ok(false);
    }
    let values = node_values(cg);
    Ok(conflicts(cg, &w.component, &values)
        .iter()
        .any(|(x, a, b, k)| *x == w.conflict_var && *a == w.value_in_sub && *b == w.conflicting_value && *k == w.kind))
}
