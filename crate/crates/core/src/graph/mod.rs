//! Acyclic directed mixed graphs (ADMGs) and the graph primitives used by the
//! counterfactual-graph construction and the identification recursion.
//!
//! Directed edges encode functional dependence; a bidirected edge `A <-> B`
//! stands for an exogenous variable shared by `A` and `B`. Diagrams are
//! immutable: every surgery returns a new value.

mod dsep;
mod text;

pub use text::{parse_graph, parse_graph_annotated, render_graph, render_graph_with, NodeAnnotation};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An observable variable, compared by exact (case-sensitive) name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::EmptyName);
        }
        Ok(Variable(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Variable {
    /// Panics on an empty name; use [`Variable::new`] for untrusted input.
    fn from(s: &str) -> Self {
        Variable::new(s).expect("variable names are nonempty")
    }
}

/// Unordered pair stored with the smaller name first.
fn spouse_pair(a: &Variable, b: &Variable) -> (Variable, Variable) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CausalDiagram {
    nodes: BTreeSet<Variable>,
    parents: BTreeMap<Variable, BTreeSet<Variable>>,
    children: BTreeMap<Variable, BTreeSet<Variable>>,
    spouses: BTreeMap<Variable, BTreeSet<Variable>>,
}

impl CausalDiagram {
    /// Builds a diagram, rejecting self-loops, duplicate edges, unknown
    /// endpoints and directed cycles.
    pub fn new<N, D, B>(nodes: N, directed: D, bidirected: B) -> Result<Self>
    where
        N: IntoIterator<Item = Variable>,
        D: IntoIterator<Item = (Variable, Variable)>,
        B: IntoIterator<Item = (Variable, Variable)>,
    {
        let mut g = CausalDiagram::default();
        for v in nodes {
            g.insert_node(v);
        }
        for (a, b) in directed {
            g.check_endpoints(&a, &b)?;
            if !g.parents.get_mut(&b).unwrap().insert(a.clone()) {
                return Err(Error::DuplicateEdge {
                    kind: "directed",
                    from: a.0,
                    to: b.0,
                });
            }
            g.children.get_mut(&a).unwrap().insert(b);
        }
        for (a, b) in bidirected {
            g.check_endpoints(&a, &b)?;
            if !g.spouses.get_mut(&a).unwrap().insert(b.clone()) {
                let (x, y) = spouse_pair(&a, &b);
                return Err(Error::DuplicateEdge {
                    kind: "bidirected",
                    from: x.0,
                    to: y.0,
                });
            }
            g.spouses.get_mut(&b).unwrap().insert(a);
        }
        if let Some(cycle) = g.find_cycle() {
            return Err(Error::Cycle(cycle.into_iter().map(|v| v.0).collect()));
        }
        Ok(g)
    }

    fn insert_node(&mut self, v: Variable) {
        if self.nodes.insert(v.clone()) {
            self.parents.insert(v.clone(), BTreeSet::new());
            self.children.insert(v.clone(), BTreeSet::new());
            self.spouses.insert(v, BTreeSet::new());
        }
    }

    fn check_endpoints(&mut self, a: &Variable, b: &Variable) -> Result<()> {
        if a == b {
            return Err(Error::SelfLoop(a.0.clone()));
        }
        for v in [a, b] {
            if !self.nodes.contains(v) {
                return Err(Error::UnknownVariable(v.0.clone()));
            }
        }
        Ok(())
    }

    /// Returns a directed cycle (first node repeated at the end) if one exists.
    fn find_cycle(&self) -> Option<Vec<Variable>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Fresh,
            Open,
            Done,
        }
        let mut mark: BTreeMap<&Variable, Mark> = self.nodes.iter().map(|v| (v, Mark::Fresh)).collect();
        for root in &self.nodes {
            if mark[root] != Mark::Fresh {
                continue;
            }
            // iterative DFS keeping the open path
            let mut path: Vec<&Variable> = vec![root];
            let mut iters = vec![self.children[root].iter()];
            mark.insert(root, Mark::Open);
            while let Some(it) = iters.last_mut() {
                match it.next() {
                    Some(c) => match mark[c] {
                        Mark::Fresh => {
                            mark.insert(c, Mark::Open);
                            path.push(c);
                            iters.push(self.children[c].iter());
                        }
                        Mark::Open => {
                            let start = path.iter().position(|v| *v == c).unwrap();
                            let mut cycle: Vec<Variable> = path[start..].iter().map(|v| (*v).clone()).collect();
                            cycle.push(c.clone());
                            return Some(cycle);
                        }
                        Mark::Done => {}
                    },
                    None => {
                        iters.pop();
                        let v = path.pop().unwrap();
                        mark.insert(v, Mark::Done);
                    }
                }
            }
        }
        None
    }

    pub fn nodes(&self) -> &BTreeSet<Variable> {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: &Variable) -> bool {
        self.nodes.contains(v)
    }

    fn require(&self, v: &Variable) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownVariable(v.0.clone()))
        }
    }

    /// Parents of `v`; empty for unknown variables.
    pub fn parents(&self, v: &Variable) -> impl Iterator<Item = &Variable> {
        self.parents.get(v).into_iter().flatten()
    }

    pub fn children(&self, v: &Variable) -> impl Iterator<Item = &Variable> {
        self.children.get(v).into_iter().flatten()
    }

    /// Nodes joined to `v` by a bidirected edge.
    pub fn spouses(&self, v: &Variable) -> impl Iterator<Item = &Variable> {
        self.spouses.get(v).into_iter().flatten()
    }

    pub fn has_directed(&self, from: &Variable, to: &Variable) -> bool {
        self.parents.get(to).is_some_and(|p| p.contains(from))
    }

    pub fn has_bidirected(&self, a: &Variable, b: &Variable) -> bool {
        self.spouses.get(a).is_some_and(|s| s.contains(b))
    }

    /// Directed edges as `(parent, child)`, sorted.
    pub fn directed_edges(&self) -> Vec<(Variable, Variable)> {
        self.children
            .iter()
            .flat_map(|(p, cs)| cs.iter().map(move |c| (p.clone(), c.clone())))
            .collect()
    }

    /// Bidirected edges with the smaller endpoint first, sorted.
    pub fn bidirected_edges(&self) -> Vec<(Variable, Variable)> {
        self.spouses
            .iter()
            .flat_map(|(a, bs)| bs.iter().filter(move |b| a < *b).map(move |b| (a.clone(), b.clone())))
            .collect()
    }

    fn closure<'a, I, F, N>(&'a self, start: I, next: F) -> Result<BTreeSet<Variable>>
    where
        I: IntoIterator<Item = &'a Variable>,
        F: Fn(&'a Variable) -> N,
        N: Iterator<Item = &'a Variable>,
    {
        let mut seen = BTreeSet::new();
        let mut stack = Vec::new();
        for v in start {
            self.require(v)?;
            if seen.insert(v.clone()) {
                stack.push(v);
            }
        }
        while let Some(v) = stack.pop() {
            for w in next(v) {
                if seen.insert(w.clone()) {
                    stack.push(w);
                }
            }
        }
        Ok(seen)
    }

    /// Reflexive ancestors of `set` along directed edges.
    pub fn ancestors<'a, I>(&'a self, set: I) -> Result<BTreeSet<Variable>>
    where
        I: IntoIterator<Item = &'a Variable>,
    {
        self.closure(set, |v| self.parents[v].iter())
    }

    /// Reflexive descendants of `set` along directed edges.
    pub fn descendants<'a, I>(&'a self, set: I) -> Result<BTreeSet<Variable>>
    where
        I: IntoIterator<Item = &'a Variable>,
    {
        self.closure(set, |v| self.children[v].iter())
    }

    /// Connected components of the bidirected skeleton, each sorted, ordered
    /// by their smallest member.
    pub fn c_components(&self) -> Vec<BTreeSet<Variable>> {
        let mut seen: BTreeSet<&Variable> = BTreeSet::new();
        let mut out = Vec::new();
        for v in &self.nodes {
            if seen.contains(v) {
                continue;
            }
            let block = self.closure([v], |x| self.spouses[x].iter()).expect("node is known");
            for b in &block {
                seen.insert(self.nodes.get(b).unwrap());
            }
            out.push(block);
        }
        out
    }

    /// The c-component containing `v`.
    pub fn c_component_of(&self, v: &Variable) -> Result<BTreeSet<Variable>> {
        self.closure([v], |x| self.spouses[x].iter())
    }

    /// Is `a` d-separated from `b` given `z`? Bidirected edges are read as
    /// forks through a fresh latent node.
    pub fn d_separated(&self, a: &BTreeSet<Variable>, b: &BTreeSet<Variable>, z: &BTreeSet<Variable>) -> Result<bool> {
        for v in a.iter().chain(b).chain(z) {
            self.require(v)?;
        }
        Ok(dsep::separated(self, a, b, z))
    }

    /// Removes every directed edge leaving a member of `set`.
    pub fn cut_outgoing(&self, set: &BTreeSet<Variable>) -> CausalDiagram {
        let mut g = self.clone();
        for v in set {
            if let Some(cs) = g.children.get_mut(v) {
                for c in std::mem::take(cs) {
                    g.parents.get_mut(&c).unwrap().remove(v);
                }
            }
        }
        g
    }

    /// The graph of the submodel `do(set)`: members of `set` lose their
    /// incoming directed edges and their bidirected edges.
    pub fn cut_incoming(&self, set: &BTreeSet<Variable>) -> CausalDiagram {
        let mut g = self.clone();
        for v in set {
            if let Some(ps) = g.parents.get_mut(v) {
                for p in std::mem::take(ps) {
                    g.children.get_mut(&p).unwrap().remove(v);
                }
            }
            if let Some(ss) = g.spouses.get_mut(v) {
                for s in std::mem::take(ss) {
                    g.spouses.get_mut(&s).unwrap().remove(v);
                }
            }
        }
        g
    }

    /// Subgraph induced by `keep` (unknown names are ignored).
    pub fn induced(&self, keep: &BTreeSet<Variable>) -> CausalDiagram {
        let mut g = CausalDiagram::default();
        for v in self.nodes.intersection(keep) {
            g.insert_node(v.clone());
        }
        for v in &g.nodes.clone() {
            let ps: BTreeSet<Variable> = self.parents[v].intersection(keep).cloned().collect();
            for p in &ps {
                g.children.get_mut(p).unwrap().insert(v.clone());
            }
            *g.parents.get_mut(v).unwrap() = ps;
            let ss: BTreeSet<Variable> = self.spouses[v].intersection(keep).cloned().collect();
            *g.spouses.get_mut(v).unwrap() = ss;
        }
        g
    }

    /// Kahn's algorithm, always releasing the lexicographically smallest
    /// ready node.
    pub fn topological_order(&self) -> Vec<Variable> {
        let mut indeg: BTreeMap<&Variable, usize> = self.nodes.iter().map(|v| (v, self.parents[v].len())).collect();
        let mut ready: BTreeSet<&Variable> = indeg.iter().filter(|(_, d)| **d == 0).map(|(v, _)| *v).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(v) = ready.pop_first() {
            order.push(v.clone());
            for c in &self.children[v] {
                let d = indeg.get_mut(c).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }
}
