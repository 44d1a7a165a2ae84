//! Parallel-worlds graphs and counterfactual graphs.
//!
//! Every world named in a conjunction gets its own copy of the diagram. The
//! copies share exogenous variables, so a copy of `V` in one world is
//! bidirected to every non-fixed copy of `V` (and of `V`'s spouses) in the
//! others. Copies that provably take the same value are merged, base
//! variables in topological order, and the result is cut down to the
//! ancestors of the query.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::events::{CfConjunction, CfEvent, CfVariable, Intervention, Value};
use crate::graph::{render_graph_with, CausalDiagram, NodeAnnotation, Variable};

type EdgeList = Vec<(usize, usize)>;

/// A world is named by the intervention that defines it; the empty
/// intervention is the actual world.
pub type WorldId = Intervention;

/// One copy of a base variable in one world.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PwNode {
    pub base: Variable,
    pub world: WorldId,
}

impl PwNode {
    pub fn new(base: Variable, world: WorldId) -> Self {
        PwNode { base, world }
    }

    fn name(&self) -> Variable {
        Variable::new(self.to_string()).expect("nonempty")
    }
}

impl fmt::Display for PwNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.world.is_empty() {
            write!(f, "{}", self.base)
        } else {
            write!(f, "{}[{}]", self.base, self.world)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum NodeStatus {
    Free,
    /// Set by the world's intervention.
    Fixed(Value),
    /// Carries a value from the conjunction.
    Observed(Value),
}

impl NodeStatus {
    pub fn value(&self) -> Option<&Value> {
        match self {
            NodeStatus::Free => None,
            NodeStatus::Fixed(v) | NodeStatus::Observed(v) => Some(v),
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, NodeStatus::Fixed(_))
    }

    fn annotation(&self) -> Option<NodeAnnotation> {
        match self {
            NodeStatus::Free => None,
            NodeStatus::Fixed(v) => Some(NodeAnnotation { value: v.to_string(), fixed: true }),
            NodeStatus::Observed(v) => Some(NodeAnnotation { value: v.to_string(), fixed: false }),
        }
    }
}

/// A node required to take two different values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Inconsistency {
    pub node: String,
    pub first: Value,
    pub second: Value,
}

impl fmt::Display for Inconsistency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} would be both {} and {}", self.node, self.first, self.second)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeOutcome {
    Merged,
    /// The copies agree structurally but one carries a summation symbol
    /// that may or may not equal the other's value, so they stay apart.
    Blocked { first: Value, second: Value },
    Inconsistent(Inconsistency),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergeRecord {
    pub kept: PwNode,
    pub absorbed: PwNode,
    pub reason: String,
    pub outcome: MergeOutcome,
}

impl fmt::Display for MergeRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.outcome {
            MergeOutcome::Merged => write!(f, "merge {} into {}: {}", self.absorbed, self.kept, self.reason),
            MergeOutcome::Blocked { first, second } => {
                write!(f, "keep {} and {} apart: {}; values {first} and {second} may differ", self.absorbed, self.kept, self.reason)
            }
            MergeOutcome::Inconsistent(i) => write!(f, "merge {} into {}: {}; {}", self.absorbed, self.kept, self.reason, i),
        }
    }
}

/// The parallel-worlds graph of a conjunction, with merge state.
///
/// Nodes are addressed by [`PwNode`]; after merges each node resolves to the
/// copy in the lexicographically smallest world of its class.
#[derive(Debug, Clone)]
pub struct ParallelWorlds {
    base: CausalDiagram,
    vars: Vec<Variable>,
    index: BTreeMap<Variable, usize>,
    worlds: Vec<WorldId>,
    uf: Vec<usize>,
    status: Vec<NodeStatus>,
    conflict: Option<Inconsistency>,
}

/// Builds the parallel-worlds graph for the worlds of `q` plus `extra_worlds`
/// and applies the values of `q`'s events.
pub fn parallel_worlds(g: &CausalDiagram, q: &CfConjunction, extra_worlds: &[WorldId]) -> Result<ParallelWorlds> {
    for v in q.base_variables().iter().chain(extra_worlds.iter().flat_map(|w| w.vars())) {
        if !g.contains(v) {
            return Err(Error::UnknownVariable(v.to_string()));
        }
    }
    let vars: Vec<Variable> = g.nodes().iter().cloned().collect();
    let index = vars.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    let worlds: Vec<WorldId> = q.worlds().into_iter().chain(extra_worlds.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut status = Vec::with_capacity(worlds.len() * vars.len());
    for w in &worlds {
        for v in &vars {
            status.push(match w.get(v) {
                Some(x) => NodeStatus::Fixed(x.clone()),
                None => NodeStatus::Free,
            });
        }
    }
    let mut pw = ParallelWorlds {
        base: g.clone(),
        uf: (0..status.len()).collect(),
        status,
        vars,
        index,
        worlds,
        conflict: None,
    };
    for e in q {
        let id = pw.id_of(e.base(), e.subscript()).expect("world and variable are known");
        let slot = &mut pw.status[id];
        match slot.value() {
            None => *slot = NodeStatus::Observed(e.value.clone()),
            Some(v) if *v == e.value => {}
            Some(v) => {
                if v.is_symbolic() || e.value.is_symbolic() {
                    return Err(Error::SymbolicConflict(PwNode::new(e.base().clone(), e.subscript().clone()).to_string()));
                }
                if pw.conflict.is_none() {
                    pw.conflict = Some(Inconsistency {
                        node: PwNode::new(e.base().clone(), e.subscript().clone()).to_string(),
                        first: v.clone(),
                        second: e.value.clone(),
                    });
                }
            }
        }
    }
    Ok(pw)
}

impl ParallelWorlds {
    fn nv(&self) -> usize {
        self.vars.len()
    }

    fn id_of(&self, base: &Variable, world: &WorldId) -> Option<usize> {
        let w = self.worlds.binary_search(world).ok()?;
        Some(w * self.nv() + self.index.get(base)?)
    }

    fn pw_node(&self, id: usize) -> PwNode {
        PwNode::new(self.vars[id % self.nv()].clone(), self.worlds[id / self.nv()].clone())
    }

    fn find(&self, mut id: usize) -> usize {
        while self.uf[id] != id {
            id = self.uf[id];
        }
        id
    }

    fn resolve(&self, n: &PwNode) -> usize {
        self.find(self.id_of(&n.base, &n.world).expect("node of this parallel-worlds graph"))
    }

    pub fn worlds(&self) -> &[WorldId] {
        &self.worlds
    }

    /// The first value conflict found while applying the conjunction.
    pub fn conflict(&self) -> Option<&Inconsistency> {
        self.conflict.as_ref()
    }

    pub fn representative(&self, n: &PwNode) -> PwNode {
        self.pw_node(self.resolve(n))
    }

    pub fn status(&self, n: &PwNode) -> &NodeStatus {
        &self.status[self.resolve(n)]
    }

    /// Parents of a class: the parents of its representative copy.
    fn class_parents(&self, root: usize) -> Vec<(Variable, usize)> {
        if self.status[root].is_fixed() {
            return Vec::new();
        }
        let w = root / self.nv();
        let v = &self.vars[root % self.nv()];
        self.base.parents(v).map(|p| (p.clone(), self.find(w * self.nv() + self.index[p]))).collect()
    }

    /// Justification for treating two classes of one base as the same
    /// variable, or `None`.
    fn same_inputs(&self, a: usize, b: usize) -> Option<String> {
        let (sa, sb) = (&self.status[a], &self.status[b]);
        if sa.is_fixed() || sb.is_fixed() {
            return match (sa, sb) {
                (NodeStatus::Fixed(x), NodeStatus::Fixed(y)) if x == y => Some(format!("both set to {x}")),
                _ => None,
            };
        }
        let pa = self.class_parents(a);
        let pb = self.class_parents(b);
        if pa.is_empty() {
            return Some("no parents, shared exogenous inputs".into());
        }
        let mut why = Vec::new();
        for ((p, ra), (_, rb)) in pa.iter().zip(&pb) {
            if ra == rb {
                why.push(format!("{p} shared"));
                continue;
            }
            match (self.status[*ra].value(), self.status[*rb].value()) {
                (Some(x), Some(y)) if x == y => why.push(format!("{p}={x} in both")),
                _ => return None,
            }
        }
        Some(why.join(", "))
    }

    /// True when the two copies have equal parents (same node or same value)
    /// and share their exogenous inputs, so they always agree.
    pub fn same_mechanism(&self, a: &PwNode, b: &PwNode) -> bool {
        a.base == b.base && self.same_inputs(self.resolve(a), self.resolve(b)).is_some()
    }

    fn merge_roots(&mut self, a: usize, b: usize) -> MergeOutcome {
        if a == b {
            return MergeOutcome::Merged;
        }
        let (keep, gone) = if a < b { (a, b) } else { (b, a) };
        let merged = match (&self.status[keep], &self.status[gone]) {
            (NodeStatus::Free, s) | (s, NodeStatus::Free) => s.clone(),
            (x, y) => {
                let (vx, vy) = (x.value().unwrap(), y.value().unwrap());
                if vx != vy {
                    if vx.is_symbolic() || vy.is_symbolic() {
                        return MergeOutcome::Blocked { first: vx.clone(), second: vy.clone() };
                    }
                    return MergeOutcome::Inconsistent(Inconsistency {
                        node: self.pw_node(keep).to_string(),
                        first: vx.clone(),
                        second: vy.clone(),
                    });
                }
                if y.is_fixed() {
                    y.clone()
                } else {
                    x.clone()
                }
            }
        };
        self.uf[gone] = keep;
        self.status[keep] = merged;
        MergeOutcome::Merged
    }

    /// Merges the classes of `a` and `b` into one node. The copy in the
    /// smaller world is kept along with its parents.
    pub fn merge(&mut self, a: &PwNode, b: &PwNode) -> MergeOutcome {
        let (ra, rb) = (self.resolve(a), self.resolve(b));
        self.merge_roots(ra, rb)
    }

    /// One merge pass: base variables in topological order, world pairs in
    /// lexicographic order. Stops at the first inconsistency.
    pub fn merge_all(&mut self) -> Vec<MergeRecord> {
        let mut log = Vec::new();
        let nw = self.worlds.len();
        for v in self.base.topological_order() {
            let vi = self.index[&v];
            for i in 0..nw {
                for j in i + 1..nw {
                    let (ra, rb) = (self.find(i * self.nv() + vi), self.find(j * self.nv() + vi));
                    if ra == rb {
                        continue;
                    }
                    let Some(reason) = self.same_inputs(ra, rb) else { continue };
                    let (kept, absorbed) = (self.pw_node(ra.min(rb)), self.pw_node(ra.max(rb)));
                    let outcome = self.merge_roots(ra, rb);
                    let stop = matches!(outcome, MergeOutcome::Inconsistent(_));
                    log.push(MergeRecord { kept, absorbed, reason, outcome });
                    if stop {
                        return log;
                    }
                }
            }
        }
        log
    }

    fn roots(&self) -> Vec<usize> {
        (0..self.uf.len()).filter(|&i| self.uf[i] == i).collect()
    }

    /// Directed and bidirected edges between classes.
    fn class_edges(&self, roots: &[usize]) -> (EdgeList, EdgeList) {
        let mut directed = Vec::new();
        for &r in roots {
            for (_, p) in self.class_parents(r) {
                directed.push((p, r));
            }
        }
        let mut bidirected = Vec::new();
        for (i, &a) in roots.iter().enumerate() {
            if self.status[a].is_fixed() {
                continue;
            }
            for &b in &roots[i + 1..] {
                if self.status[b].is_fixed() {
                    continue;
                }
                let (va, vb) = (&self.vars[a % self.nv()], &self.vars[b % self.nv()]);
                if va == vb || self.base.has_bidirected(va, vb) {
                    bidirected.push((a, b));
                }
            }
        }
        (directed, bidirected)
    }

    /// The current (possibly partly merged) graph, one node per class named
    /// by its representative copy.
    pub fn diagram(&self) -> (CausalDiagram, BTreeMap<Variable, NodeAnnotation>) {
        let roots = self.roots();
        let (directed, bidirected) = self.class_edges(&roots);
        let name = |i: usize| self.pw_node(i).name();
        let g = CausalDiagram::new(
            roots.iter().map(|&r| name(r)),
            directed.into_iter().map(|(a, b)| (name(a), name(b))),
            bidirected.into_iter().map(|(a, b)| (name(a), name(b))),
        )
        .expect("parallel-worlds graph inherits acyclicity");
        let ann = roots.iter().filter_map(|&r| self.status[r].annotation().map(|a| (name(r), a))).collect();
        (g, ann)
    }

    pub fn render(&self) -> String {
        let (g, ann) = self.diagram();
        render_graph_with(&g, &ann)
    }
}

/// A node of a counterfactual graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CgNode {
    pub base: Variable,
    /// Minimal subscript: the fixed nodes among the node's ancestors.
    pub subscript: Intervention,
    #[serde(flatten)]
    pub status: NodeStatus,
    /// World of the representative copy.
    pub world: WorldId,
}

impl CgNode {
    pub fn cf_variable(&self) -> CfVariable {
        CfVariable::new(self.base.clone(), self.subscript.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterfactualGraph {
    admg: CausalDiagram,
    info: BTreeMap<Variable, CgNode>,
    merge_map: BTreeMap<PwNode, Variable>,
}

impl CounterfactualGraph {
    pub fn admg(&self) -> &CausalDiagram {
        &self.admg
    }

    pub fn node(&self, v: &Variable) -> &CgNode {
        &self.info[v]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&Variable, &CgNode)> {
        self.info.iter()
    }

    pub fn len(&self) -> usize {
        self.info.len()
    }

    pub fn is_empty(&self) -> bool {
        self.info.is_empty()
    }

    pub fn labels(&self) -> BTreeMap<Variable, NodeStatus> {
        self.info.iter().map(|(k, n)| (k.clone(), n.status.clone())).collect()
    }

    /// Parallel-worlds copies that survived the ancestral restriction, mapped
    /// to their node.
    pub fn merge_map(&self) -> &BTreeMap<PwNode, Variable> {
        &self.merge_map
    }

    pub fn subscript_map(&self) -> BTreeMap<Variable, Intervention> {
        self.info.iter().map(|(k, n)| (k.clone(), n.subscript.clone())).collect()
    }

    pub fn is_fixed(&self, v: &Variable) -> bool {
        self.info[v].status.is_fixed()
    }

    pub fn value(&self, v: &Variable) -> Option<&Value> {
        self.info[v].status.value()
    }

    pub fn fixed_nodes(&self) -> BTreeSet<Variable> {
        self.info.iter().filter(|(_, n)| n.status.is_fixed()).map(|(k, _)| k.clone()).collect()
    }

    pub fn unfixed_nodes(&self) -> BTreeSet<Variable> {
        self.info.iter().filter(|(_, n)| !n.status.is_fixed()).map(|(k, _)| k.clone()).collect()
    }

    /// C-components over the non-fixed nodes (fixed nodes carry no
    /// distribution).
    pub fn c_components(&self) -> Vec<BTreeSet<Variable>> {
        self.admg.induced(&self.unfixed_nodes()).c_components()
    }

    pub fn annotations(&self) -> BTreeMap<Variable, NodeAnnotation> {
        self.info.iter().filter_map(|(k, n)| n.status.annotation().map(|a| (k.clone(), a))).collect()
    }

    /// Graph text format with value annotations.
    pub fn render(&self) -> String {
        render_graph_with(&self.admg, &self.annotations())
    }
}

#[derive(Debug, Clone)]
pub struct CgBuild {
    pub graph: CounterfactualGraph,
    /// The conjunction rewritten onto the graph's nodes.
    pub gamma: CfConjunction,
    /// Node of each input event.
    pub event_nodes: BTreeMap<CfEvent, Variable>,
    pub merges: Vec<MergeRecord>,
    /// The parallel-worlds graph before merging, in text format.
    pub parallel_worlds: String,
}

#[derive(Debug, Clone)]
pub enum MakeCg {
    Graph(Box<CgBuild>),
    Inconsistent { reason: Inconsistency, merges: Vec<MergeRecord> },
}

/// Builds the counterfactual graph of `q`: parallel worlds, merging, subscript
/// minimization and restriction to the ancestors of the query.
pub fn make_cg(g: &CausalDiagram, q: &CfConjunction) -> Result<MakeCg> {
    let mut pw = parallel_worlds(g, q, &[])?;
    if let Some(c) = pw.conflict() {
        return Ok(MakeCg::Inconsistent { reason: c.clone(), merges: Vec::new() });
    }
    let before = pw.render();
    let merges = pw.merge_all();
    if let Some(MergeOutcome::Inconsistent(reason)) = merges.last().map(|m| &m.outcome) {
        return Ok(MakeCg::Inconsistent { reason: reason.clone(), merges });
    }

    let roots = pw.roots();
    let (directed, bidirected) = pw.class_edges(&roots);
    let mut parents: BTreeMap<usize, Vec<usize>> = roots.iter().map(|&r| (r, Vec::new())).collect();
    for &(p, c) in &directed {
        parents.get_mut(&c).unwrap().push(p);
    }
    let ancestors_of = |start: usize| {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &p in &parents[&x] {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    };

    let targets: BTreeSet<usize> = q.iter().map(|e| pw.resolve(&PwNode::new(e.base().clone(), e.subscript().clone()))).collect();
    let mut keep = BTreeSet::new();
    for &t in &targets {
        keep.extend(ancestors_of(t));
    }

    // minimal subscripts
    let mut subscript: BTreeMap<usize, Intervention> = BTreeMap::new();
    for &r in &keep {
        let node = pw.pw_node(r);
        let mut sub = Intervention::new();
        let mut clash = false;
        let anc = ancestors_of(r);
        for &a in &anc {
            if let NodeStatus::Fixed(x) = &pw.status[a] {
                let b = &pw.vars[a % pw.nv()];
                if sub.insert(b.clone(), x.clone()).is_some_and(|old| old != *x) {
                    clash = true;
                }
            }
        }
        // a free ancestor of a set variable would be overridden by the
        // shortened subscript
        if anc.iter().any(|&a| !pw.status[a].is_fixed() && sub.contains(&pw.vars[a % pw.nv()])) {
            clash = true;
        }
        if clash {
            let an = g.ancestors([&node.base]).expect("known");
            sub = node.world.restricted_to(&an);
        }
        subscript.insert(r, sub);
    }

    // names; colliding minimal names fall back to the full world
    let mut full: BTreeSet<usize> = BTreeSet::new();
    let names = loop {
        let mut names: BTreeMap<usize, Variable> = BTreeMap::new();
        let mut seen: BTreeMap<Variable, Vec<usize>> = BTreeMap::new();
        for &r in &keep {
            let node = pw.pw_node(r);
            let sub = if full.contains(&r) { node.world.clone() } else { subscript[&r].clone() };
            let name = PwNode::new(node.base, sub).name();
            seen.entry(name.clone()).or_default().push(r);
            names.insert(r, name);
        }
        let clashing: Vec<usize> = seen.values().filter(|rs| rs.len() > 1).flatten().copied().filter(|r| !full.contains(r)).collect();
        if clashing.is_empty() {
            break names;
        }
        for r in clashing {
            full.insert(r);
            subscript.insert(r, pw.pw_node(r).world);
        }
    };

    let admg = CausalDiagram::new(
        keep.iter().map(|r| names[r].clone()),
        directed.iter().filter(|(p, c)| keep.contains(p) && keep.contains(c)).map(|(p, c)| (names[p].clone(), names[c].clone())),
        bidirected.iter().filter(|(a, b)| keep.contains(a) && keep.contains(b)).map(|(a, b)| (names[a].clone(), names[b].clone())),
    )
    .expect("counterfactual graph inherits acyclicity");

    let info = keep
        .iter()
        .map(|&r| {
            let node = pw.pw_node(r);
            let cg = CgNode { base: node.base, subscript: subscript[&r].clone(), status: pw.status[r].clone(), world: node.world };
            (names[&r].clone(), cg)
        })
        .collect();
    let merge_map = (0..pw.uf.len())
        .filter_map(|id| {
            let r = pw.find(id);
            keep.contains(&r).then(|| (pw.pw_node(id), names[&r].clone()))
        })
        .collect();
    let graph = CounterfactualGraph { admg, info, merge_map };

    let mut event_nodes = BTreeMap::new();
    let mut rewritten = Vec::new();
    for e in q {
        let r = pw.resolve(&PwNode::new(e.base().clone(), e.subscript().clone()));
        let name = names[&r].clone();
        rewritten.push(CfEvent::new(graph.node(&name).cf_variable(), e.value.clone()));
        event_nodes.insert(e.clone(), name);
    }

    Ok(MakeCg::Graph(Box::new(CgBuild {
        graph,
        gamma: CfConjunction::new(rewritten),
        event_nodes,
        merges,
        parallel_worlds: before,
    })))
}

/// Pairs of same-base nodes in `cg` that a further merge pass would still
/// merge: equal parents by node or by value, compatible values.
pub fn pending_merges(g: &CausalDiagram, cg: &CounterfactualGraph) -> Vec<(Variable, Variable)> {
    let parent_by_base = |v: &Variable| -> BTreeMap<Variable, Variable> {
        cg.admg().parents(v).map(|p| (cg.node(p).base.clone(), p.clone())).collect()
    };
    let nodes: Vec<(&Variable, &CgNode)> = cg.nodes().collect();
    let mut out = Vec::new();
    for (i, (a, na)) in nodes.iter().enumerate() {
        for (b, nb) in &nodes[i + 1..] {
            if na.base != nb.base {
                continue;
            }
            let compatible = match (na.status.value(), nb.status.value()) {
                (Some(x), Some(y)) => x == y,
                _ => true,
            };
            let same = match (&na.status, &nb.status) {
                (NodeStatus::Fixed(x), NodeStatus::Fixed(y)) => x == y,
                (NodeStatus::Fixed(_), _) | (_, NodeStatus::Fixed(_)) => false,
                _ => {
                    let (pa, pb) = (parent_by_base(a), parent_by_base(b));
                    g.parents(&na.base).all(|p| match (pa.get(p), pb.get(p)) {
                        (Some(x), Some(y)) if x == y => true,
                        (Some(x), Some(y)) => cg.value(x).is_some() && cg.value(x) == cg.value(y),
                        _ => false,
                    })
                }
            };
            if compatible && same {
                out.push(((*a).clone(), (*b).clone()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::parse_conjunction;
    use crate::graph::parse_graph;

    fn mediated_graph() -> CausalDiagram {
        parse_graph("X -> W\nW -> Y\nD -> Z\nZ -> Y\nX <-> Y\n").unwrap()
    }

    fn build(g: &CausalDiagram, q: &str) -> CgBuild {
        match make_cg(g, &parse_conjunction(q).unwrap()).unwrap() {
            MakeCg::Graph(b) => *b,
            MakeCg::Inconsistent { reason, .. } => panic!("unexpected inconsistency: {reason}"),
        }
    }

    fn names(set: impl IntoIterator<Item = Variable>) -> Vec<String> {
        set.into_iter().map(|v| v.to_string()).collect()
    }

    #[test]
    fn single_world_has_no_cross_edges() {
        let g = mediated_graph();
        let pw = parallel_worlds(&g, &parse_conjunction("Y=y, X=x").unwrap(), &[]).unwrap();
        let (d, ann) = pw.diagram();
        assert_eq!(d, g);
        assert_eq!(ann.len(), 2);
    }

    #[test]
    fn twin_network_for_two_interventions() {
        let g = parse_graph("X -> Y").unwrap();
        let pw = parallel_worlds(&g, &parse_conjunction("Y[X=x]=y, Y[X=x']=y'").unwrap(), &[]).unwrap();
        let (d, ann) = pw.diagram();
        assert_eq!(names(d.nodes().iter().cloned()), ["X[X=x']", "X[X=x]", "Y[X=x']", "Y[X=x]"]);
        assert_eq!(d.bidirected_edges(), vec![("Y[X=x']".into(), "Y[X=x]".into())]);
        assert!(ann[&Variable::from("X[X=x]")].fixed);
        assert_eq!(d.directed_edges().len(), 2);
    }

    #[test]
    fn parallel_worlds_has_one_copy_per_world() {
        let g = mediated_graph();
        let pw = parallel_worlds(&g, &parse_conjunction("Y[X=x]=y, X=x', Z[D=d]=z, D=d").unwrap(), &[]).unwrap();
        assert_eq!(pw.worlds().len(), 3);
        let (d, _) = pw.diagram();
        assert_eq!(d.len(), 15);
        // Y copies pairwise bidirected, X copies (two unfixed) bidirected,
        // and X <-> Y across every unfixed combination
        assert!(d.has_bidirected(&"Y".into(), &"Y[X=x]".into()));
        assert!(d.has_bidirected(&"X".into(), &"X[D=d]".into()));
        assert!(d.has_bidirected(&"X[D=d]".into(), &"Y[X=x]".into()));
        assert!(!d.has_bidirected(&"X[X=x]".into(), &"Y".into()));
    }

    #[test]
    fn unaffected_copies_merge_and_subscripts_shrink() {
        let b = build(&mediated_graph(), "Y[X=x]=y, X=x', Z[D=d]=z, D=d");
        assert_eq!(b.gamma.to_string(), "D=d, X=x', Y[X=x]=y, Z=z");
        assert_eq!(names(b.graph.admg().nodes().iter().cloned()), ["D", "W[X=x]", "X", "X[X=x]", "Y[X=x]", "Z"]);
        assert_eq!(
            b.graph.admg().directed_edges(),
            vec![
                ("D".into(), "Z".into()),
                ("W[X=x]".into(), "Y[X=x]".into()),
                ("X[X=x]".into(), "W[X=x]".into()),
                ("Z".into(), "Y[X=x]".into())
            ]
        );
        assert_eq!(b.graph.admg().bidirected_edges(), vec![(Variable::from("X"), Variable::from("Y[X=x]"))]);
        assert_eq!(b.graph.fixed_nodes(), BTreeSet::from([Variable::from("X[X=x]")]));
    }

    #[test]
    fn same_mechanism_requires_matching_parents() {
        let g = mediated_graph();
        let mut pw = parallel_worlds(&g, &parse_conjunction("Y[X=x]=y, X=x', Z[D=d]=z, D=d").unwrap(), &[]).unwrap();
        let node = |b: &str, w: &[(&str, &str)]| {
            PwNode::new(b.into(), w.iter().map(|(k, v)| (Variable::from(*k), Value::from(*v))).collect())
        };
        // the D copies are distinct until merged
        assert!(!pw.same_mechanism(&node("Z", &[]), &node("Z", &[("X", "x")])));
        assert_eq!(pw.merge(&node("D", &[]), &node("D", &[("X", "x")])), MergeOutcome::Merged);
        assert!(pw.same_mechanism(&node("Z", &[]), &node("Z", &[("X", "x")])));
        // D observed at d in the actual world, fixed to d in do(D=d)
        assert!(pw.same_mechanism(&node("Z", &[]), &node("Z", &[("D", "d")])));
        assert!(!pw.same_mechanism(&node("Y", &[]), &node("Y", &[("X", "x")])));
        assert!(!pw.same_mechanism(&node("D", &[]), &node("D", &[("D", "d")])));
    }

    #[test]
    fn merge_is_symmetric() {
        let g = mediated_graph();
        let q = parse_conjunction("Y[X=x]=y, X=x', Z[D=d]=z, D=d").unwrap();
        let z = PwNode::new("Z".into(), Intervention::new());
        let zx = PwNode::new("Z".into(), Intervention::from_pairs([("X".into(), "x".into())]).unwrap());
        let mut a = parallel_worlds(&g, &q, &[]).unwrap();
        let mut b = a.clone();
        for m in ["D", "X"] {
            let n = PwNode::new(m.into(), Intervention::new());
            let nx = PwNode::new(m.into(), zx.world.clone());
            if m == "D" {
                assert_eq!(a.merge(&n, &nx), MergeOutcome::Merged);
                assert_eq!(b.merge(&nx, &n), MergeOutcome::Merged);
            }
        }
        assert_eq!(a.merge(&z, &zx), MergeOutcome::Merged);
        assert_eq!(b.merge(&zx, &z), MergeOutcome::Merged);
        assert_eq!(a.render(), b.render());
        assert_eq!(a.representative(&zx), z);
    }

    #[test]
    fn same_world_conflict_is_inconsistent() {
        let g = parse_graph("X -> Y").unwrap();
        let out = make_cg(&g, &parse_conjunction("Y[X=x]=y, Y[X=x]=y'").unwrap()).unwrap();
        assert!(matches!(out, MakeCg::Inconsistent { .. }));
    }

    #[test]
    fn merged_conflict_is_inconsistent() {
        // Z is not a descendant of X, so Z[X=x] is Z
        let g = parse_graph("X -> Y\nZ -> Y").unwrap();
        let out = make_cg(&g, &parse_conjunction("Z[X=x]=z, Z=z'").unwrap()).unwrap();
        match out {
            MakeCg::Inconsistent { reason, merges } => {
                assert_eq!(reason.node, "Z");
                assert_eq!(merges.len(), 1);
            }
            _ => panic!("expected inconsistency"),
        }
    }

    #[test]
    fn no_interventions_gives_ancestral_graph() {
        let g = mediated_graph();
        let b = build(&g, "W=w, X=x");
        assert_eq!(names(b.graph.admg().nodes().iter().cloned()), ["W", "X"]);
        assert_eq!(b.gamma.to_string(), "W=w, X=x");
        assert!(b.merges.is_empty());
    }

    #[test]
    fn w_graph_keeps_both_worlds() {
        let g = parse_graph("X -> Y").unwrap();
        let b = build(&g, "Y[X=x]=y, Y[X=x']=y'");
        assert_eq!(b.graph.len(), 4);
        assert_eq!(b.graph.c_components().len(), 1);
    }

    #[test]
    fn observation_enables_merge() {
        // X observed at x in the actual world makes Y and Y[X=x] identical
        let g = parse_graph("X -> Y").unwrap();
        let b = build(&g, "Y[X=x]=y, X=x");
        assert_eq!(b.gamma.to_string(), "X=x, Y=y");
        assert_eq!(b.graph.len(), 2);
    }

    #[test]
    fn second_merge_pass_finds_nothing() {
        let g = mediated_graph();
        let b = build(&g, "Y[X=x]=y, X=x', Z[D=d]=z, D=d");
        assert!(pending_merges(&g, &b.graph).is_empty());
        let again = build(&g, &b.gamma.to_string());
        assert_eq!(again.gamma, b.gamma);
        assert_eq!(again.graph.admg(), b.graph.admg());
    }

    #[test]
    fn symbolic_conflict_blocks_merge() {
        let g = parse_graph("X -> Y\nZ -> Y").unwrap();
        let mut q = parse_conjunction("Z=z").unwrap().events().to_vec();
        q.push(CfEvent::new(
            CfVariable::new("Z".into(), Intervention::from_pairs([("X".into(), "x".into())]).unwrap()),
            Value::symbol("$w1".into()),
        ));
        match make_cg(&g, &CfConjunction::new(q)).unwrap() {
            MakeCg::Graph(b) => {
                assert_eq!(b.graph.len(), 2);
                assert!(matches!(b.merges[0].outcome, MergeOutcome::Blocked { .. }));
                assert_eq!(names(b.graph.admg().nodes().iter().cloned()), ["Z", "Z[X=x]"]);
            }
            _ => panic!(),
        }
    }
}
