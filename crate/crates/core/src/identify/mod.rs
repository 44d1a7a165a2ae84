//! Identification of counterfactual queries from the experimental family.
//!
//! [`id_star`] handles joint queries `P(γ)`, [`idc_star`] conditional ones
//! `P(γ | δ)`. Both return a symbolic expression over `P*`, zero, or a
//! failure carrying a [`NonIdWitness`].

mod witness;

pub use witness::{find_witness, validate_witness, ConflictKind, NonIdWitness};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::events::{classify_self_events, CfConjunction, CfEvent, CfVariable, Intervention, Query, Value, BOUND_SIGIL};
use crate::expr::{canonicalize, Binder, ProbExpression, ValueSymbol};
use crate::graph::{CausalDiagram, Variable};
use crate::worlds::{make_cg, CounterfactualGraph, MakeCg, MergeOutcome, NodeStatus};
use witness::{conflicts, node_values, outside_parents};

/// Nesting limit for the recursion.
pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "detail", rename_all = "snake_case")]
pub enum IdResult {
    Expression(ProbExpression),
    Zero,
    Fail(NonIdWitness),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "detail", rename_all = "snake_case")]
pub enum CondIdResult {
    Expression(ProbExpression),
    Zero,
    Fail(NonIdWitness),
    /// The conditioning event has probability zero in every model.
    Undefined,
}

impl From<IdResult> for CondIdResult {
    fn from(r: IdResult) -> Self {
        match r {
            IdResult::Expression(e) => CondIdResult::Expression(e),
            IdResult::Zero => CondIdResult::Zero,
            IdResult::Fail(w) => CondIdResult::Fail(w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Procedure {
    #[serde(rename = "ID*")]
    IdStar,
    #[serde(rename = "IDC*")]
    IdcStar,
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Procedure::IdStar => "ID*",
            Procedure::IdcStar => "IDC*",
        })
    }
}

/// One step of the recursion, for `--explain` output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub depth: usize,
    pub procedure: Procedure,
    pub step: u8,
    pub detail: String,
    /// Counterfactual graph built at this step, in graph text format.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub merges: Vec<String>,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pad = "  ".repeat(self.depth);
        write!(f, "{pad}{} step {}: {}", self.procedure, self.step, self.detail)?;
        for m in &self.merges {
            write!(f, "\n{pad}    {m}")?;
        }
        if let Some(g) = &self.graph {
            for line in g.lines() {
                write!(f, "\n{pad}    | {line}")?;
            }
        }
        Ok(())
    }
}

/// Why a query was found to have probability zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroCause {
    /// An event contradicts its own intervention.
    Contradiction,
    /// Two copies of one variable are forced to different values.
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Identification {
    pub result: CondIdResult,
    /// Set when `result` is zero.
    pub zero_cause: Option<ZeroCause>,
    pub trace: Vec<TraceStep>,
}

/// `P(γ)` in terms of `P*`, zero, or a failure.
pub fn id_star(g: &CausalDiagram, gamma: &CfConjunction) -> Result<IdResult> {
    let mut ctx = Ctx::new(g, false);
    Ok(finish(ctx.id(gamma)?))
}

/// `P(γ | δ)` in terms of `P*`, zero, undefined, or a failure.
pub fn idc_star(g: &CausalDiagram, gamma: &CfConjunction, delta: &CfConjunction) -> Result<CondIdResult> {
    let mut ctx = Ctx::new(g, false);
    Ok(finish_cond(ctx.idc(gamma, delta)?))
}

/// Runs the query through `id_star` or `idc_star`, optionally recording a
/// trace of the recursion.
pub fn identify(g: &CausalDiagram, q: &Query, trace: bool) -> Result<Identification> {
    let mut ctx = Ctx::new(g, trace);
    let result = finish_cond(ctx.idc(&q.gamma, &q.delta)?);
    let zero_cause = if result == CondIdResult::Zero { ctx.zero } else { None };
    Ok(Identification { result, zero_cause, trace: ctx.trace.unwrap_or_default() })
}

fn finish(o: Out) -> IdResult {
    match o {
        Out::Expr(e) => IdResult::Expression(canonicalize(&e)),
        Out::Zero => IdResult::Zero,
        Out::Fail(w) => IdResult::Fail(w),
    }
}

fn finish_cond(o: CondOut) -> CondIdResult {
    match o {
        CondOut::Plain(o) => finish(o).into(),
        CondOut::Undefined => CondIdResult::Undefined,
    }
}

enum Out {
    Expr(ProbExpression),
    Zero,
    Fail(NonIdWitness),
}

enum CondOut {
    Plain(Out),
    Undefined,
}

fn to_symbol(var: &Variable, v: &Value) -> ValueSymbol {
    match v.as_str().strip_prefix(BOUND_SIGIL) {
        Some(name) => ValueSymbol::Bound { name: name.to_string(), var: var.clone() },
        None => ValueSymbol::Literal(v.clone()),
    }
}

fn node_event(cg: &CounterfactualGraph, n: &Variable, v: &Value) -> CfEvent {
    CfEvent::new(cg.node(n).cf_variable(), v.clone())
}

struct Ctx<'g> {
    g: &'g CausalDiagram,
    next: usize,
    depth: usize,
    trace: Option<Vec<TraceStep>>,
    /// Cause of the most recent zero; zeros propagate straight up.
    zero: Option<ZeroCause>,
}

impl<'g> Ctx<'g> {
    fn new(g: &'g CausalDiagram, trace: bool) -> Self {
        Ctx { g, next: 0, depth: 0, trace: trace.then(Vec::new), zero: None }
    }

    fn note(&mut self, procedure: Procedure, step: u8, detail: impl FnOnce() -> String) {
        let depth = self.depth.saturating_sub(1);
        if let Some(t) = &mut self.trace {
            t.push(TraceStep { depth, procedure, step, detail: detail(), graph: None, merges: Vec::new() });
        }
    }

    fn note_graph(&mut self, procedure: Procedure, step: u8, detail: String, cg: &CounterfactualGraph, merges: Vec<String>) {
        let depth = self.depth.saturating_sub(1);
        if let Some(t) = &mut self.trace {
            t.push(TraceStep { depth, procedure, step, detail, graph: Some(cg.render()), merges });
        }
    }

    /// A fresh summation symbol for values of `var`.
    fn fresh(&mut self, var: &Variable) -> (Binder, Value) {
        self.next += 1;
        let name = format!("s{}", self.next);
        let value = Value::symbol(format!("{BOUND_SIGIL}{name}"));
        (Binder { name, var: var.clone() }, value)
    }

    fn enter(&mut self) -> Result<()> {
        if self.depth >= MAX_DEPTH {
            return Err(Error::RecursionLimit(MAX_DEPTH));
        }
        self.depth += 1;
        Ok(())
    }

    fn id(&mut self, gamma: &CfConjunction) -> Result<Out> {
        self.enter()?;
        let r = self.id_inner(gamma);
        self.depth -= 1;
        r
    }

    fn idc(&mut self, gamma: &CfConjunction, delta: &CfConjunction) -> Result<CondOut> {
        self.enter()?;
        let r = self.idc_inner(gamma, delta);
        self.depth -= 1;
        r
    }

    fn id_inner(&mut self, gamma: &CfConjunction) -> Result<Out> {
        use Procedure::IdStar as P;
        if gamma.is_empty() {
            self.note(P, 1, || "empty conjunction, probability 1".into());
            return Ok(Out::Expr(ProbExpression::one()));
        }
        let selfs = classify_self_events(gamma);
        if let Some(c) = selfs.contradictions.first() {
            if c.value.is_symbolic() || c.subscript().get(c.base()).is_some_and(Value::is_symbolic) {
                return Err(Error::SymbolicConflict(c.var.to_string()));
            }
            self.note(P, 2, || format!("{c} contradicts its own intervention, probability 0"));
            self.zero = Some(ZeroCause::Contradiction);
            return Ok(Out::Zero);
        }
        if !selfs.tautologies.is_empty() {
            let rest: CfConjunction = gamma.iter().filter(|e| !selfs.tautologies.contains(e)).cloned().collect();
            self.note(P, 3, || format!("drop tautological events, continue with P({rest})"));
            return self.id(&rest);
        }

        let build = match make_cg(self.g, gamma)? {
            MakeCg::Inconsistent { reason, .. } => {
                self.note(P, 5, || format!("P({gamma}) is inconsistent: {reason}, probability 0"));
                self.zero = Some(ZeroCause::Inconsistent);
                return Ok(Out::Zero);
            }
            MakeCg::Graph(b) => b,
        };
        let cg = &build.graph;
        if self.trace.is_some() {
            let merges = build.merges.iter().map(|m| m.to_string()).collect();
            self.note_graph(P, 4, format!("counterfactual graph of P({gamma}) rewrites the query to P({})", build.gamma), cg, merges);
        }

        let comps = cg.c_components();
        if comps.len() > 1 {
            return self.split(gamma, cg, comps);
        }
        let s = &comps[0];
        self.note(P, 7, || format!("single c-component {{{}}}", join(s)));
        let values = node_values(cg);
        if let Some((x, a, b, kind)) = conflicts(cg, s, &values).into_iter().next() {
            let w = NonIdWitness { component: s.clone(), conflict_var: x, value_in_sub: a, conflicting_value: b, kind, query: gamma.clone() };
            self.note(P, 8, || format!("FAIL: {w}"));
            return Ok(Out::Fail(w));
        }

        let mut intervention: BTreeMap<Variable, Value> = BTreeMap::new();
        for p in outside_parents(cg, s) {
            intervention.insert(cg.node(&p).base.clone(), values[&p].clone());
        }
        let mut joint: BTreeMap<Variable, Value> = BTreeMap::new();
        for n in s {
            let node = cg.node(n);
            if let NodeStatus::Observed(v) = &node.status {
                if let Some(old) = joint.insert(node.base.clone(), v.clone()) {
                    if old != *v {
                        return Err(Error::SymbolicConflict(node.base.to_string()));
                    }
                }
            }
        }
        intervention.retain(|k, v| joint.get(k) != Some(v));
        let term = ProbExpression::pstar(
            intervention.iter().map(|(k, v)| (k.clone(), to_symbol(k, v))).collect(),
            joint.iter().map(|(k, v)| (k.clone(), to_symbol(k, v))).collect(),
        );
        self.note(P, 9, || format!("return {}", crate::expr::render_text(&term)));
        Ok(Out::Expr(term))
    }

    /// Factorization over the c-components of the counterfactual graph.
    fn split(&mut self, gamma: &CfConjunction, cg: &CounterfactualGraph, comps: Vec<BTreeSet<Variable>>) -> Result<Out> {
        use Procedure::IdStar as P;
        let mut val: BTreeMap<Variable, Value> = BTreeMap::new();
        let mut binders = Vec::new();
        for (k, n) in cg.nodes() {
            let v = match n.status.value() {
                Some(v) => v.clone(),
                None => {
                    let (b, v) = self.fresh(&n.base);
                    binders.push(b);
                    v
                }
            };
            val.insert(k.clone(), v);
        }
        self.note(P, 6, || {
            let parts: Vec<String> = comps.iter().map(|s| format!("{{{}}}", join(s))).collect();
            let bound: Vec<String> = binders.iter().map(|b| format!("{}:{}", b.name, b.var)).collect();
            format!("{} c-components {}; summing over [{}]", comps.len(), parts.join(" "), bound.join(", "))
        });
        let mut factors = Vec::new();
        for s in &comps {
            let sub = match push_subscripts(cg, s, &val) {
                Ok(c) => c,
                Err((x, a, b)) => {
                    let w = find_witness(cg, gamma).unwrap_or(NonIdWitness {
                        component: s.clone(),
                        conflict_var: x,
                        value_in_sub: a,
                        conflicting_value: b,
                        kind: ConflictKind::ParentSetTwice,
                        query: gamma.clone(),
                    });
                    self.note(P, 8, || format!("FAIL: {w}"));
                    return Ok(Out::Fail(w));
                }
            };
            match self.id(&sub)? {
                Out::Zero => return Ok(Out::Zero),
                Out::Fail(inner) => return Ok(Out::Fail(find_witness(cg, gamma).unwrap_or(inner))),
                Out::Expr(e) => factors.push(e),
            }
        }
        Ok(Out::Expr(ProbExpression::sum_over(binders, ProbExpression::product(factors))))
    }

    fn idc_inner(&mut self, gamma: &CfConjunction, delta: &CfConjunction) -> Result<CondOut> {
        use Procedure::IdcStar as P;
        if delta.is_empty() {
            return Ok(CondOut::Plain(self.id(gamma)?));
        }
        self.note(P, 1, || format!("check whether P({delta}) is identically zero"));
        if let Out::Zero = self.id(delta)? {
            self.note(P, 1, || format!("P({delta}) = 0, query undefined"));
            return Ok(CondOut::Undefined);
        }

        let gs = classify_self_events(gamma);
        if let Some(c) = gs.contradictions.first() {
            self.note(P, 3, || format!("{c} contradicts its own intervention, probability 0"));
            self.zero = Some(ZeroCause::Contradiction);
            return Ok(CondOut::Plain(Out::Zero));
        }
        let ds = classify_self_events(delta);
        let gamma: CfConjunction = gamma.iter().filter(|e| !gs.tautologies.contains(e)).cloned().collect();
        let delta: CfConjunction = delta.iter().filter(|e| !ds.tautologies.contains(e)).cloned().collect();
        if gamma.is_empty() {
            self.note(P, 5, || "every event of the query is certain, probability 1".into());
            return Ok(CondOut::Plain(Out::Expr(ProbExpression::one())));
        }
        if delta.is_empty() {
            return Ok(CondOut::Plain(self.id(&gamma)?));
        }

        let both = gamma.and(&delta);
        if let MakeCg::Inconsistent { reason, .. } = make_cg(self.g, &both)? {
            self.note(P, 3, || format!("P({gamma}, {delta}) is inconsistent: {reason}, probability 0"));
            self.zero = Some(ZeroCause::Inconsistent);
            return Ok(CondOut::Plain(Out::Zero));
        }

        // The graph is built with symbolic query values, so every merge it
        // performs holds whatever values the query takes and the rewritten
        // conditioning events keep the probability of the original ones.
        let mut entries: Vec<(CfVariable, usize)> = Vec::new();
        let mut symbols: Vec<(Binder, Value, Value)> = Vec::new();
        for e in gamma.iter().filter(|e| !delta.contains(e)) {
            let (b, s) = self.fresh(e.base());
            entries.push((e.var.clone(), symbols.len()));
            symbols.push((b, s, e.value.clone()));
        }
        if entries.is_empty() {
            self.note(P, 5, || "every query event is among the conditioning events, probability 1".into());
            return Ok(CondOut::Plain(Out::Expr(ProbExpression::one())));
        }
        let literal_of = |symbols: &[(Binder, Value, Value)], v: &Value| -> (Option<usize>, Value) {
            match symbols.iter().position(|(_, s, _)| s == v) {
                Some(i) => (Some(i), symbols[i].2.clone()),
                None => (None, v.clone()),
            }
        };
        let (build, sym_gamma) = loop {
            let sym_gamma: CfConjunction = entries.iter().map(|(v, i)| CfEvent::new(v.clone(), symbols[*i].1.clone())).collect();
            let build = match make_cg(self.g, &sym_gamma.and(&delta))? {
                MakeCg::Graph(b) => b,
                MakeCg::Inconsistent { reason, .. } => {
                    self.note(P, 3, || format!("P({gamma}, {delta}) is inconsistent: {reason}, probability 0"));
                    self.zero = Some(ZeroCause::Inconsistent);
                    return Ok(CondOut::Plain(Out::Zero));
                }
            };
            let blocked = build.merges.iter().find_map(|m| match &m.outcome {
                MergeOutcome::Blocked { first, second } => Some((m, first.clone(), second.clone())),
                _ => None,
            });
            let Some((record, a, b)) = blocked else { break (build, sym_gamma) };
            // two copies that are one variable whenever δ holds
            let ((ia, la), (ib, lb)) = (literal_of(&symbols, &a), literal_of(&symbols, &b));
            if la != lb {
                self.note(P, 3, || format!("{record}, but the query gives them {la} and {lb}, probability 0"));
                self.zero = Some(ZeroCause::Inconsistent);
                return Ok(CondOut::Plain(Out::Zero));
            }
            match (ia, ib) {
                (Some(i), Some(j)) => {
                    let (keep, gone) = (i.min(j), i.max(j));
                    for e in &mut entries {
                        if e.1 == gone {
                            e.1 = keep;
                        }
                    }
                }
                (Some(i), None) | (None, Some(i)) => entries.retain(|e| e.1 != i),
                (None, None) => return Err(Error::SymbolicConflict(record.to_string())),
            }
            if entries.is_empty() {
                self.note(P, 5, || "every query event is implied by the conditioning events, probability 1".into());
                return Ok(CondOut::Plain(Out::Expr(ProbExpression::one())));
            }
        };
        let cg = &build.graph;
        let delta_nodes: BTreeMap<Variable, Value> = delta.iter().map(|e| (build.event_nodes[e].clone(), e.value.clone())).collect();
        let sym_nodes: BTreeMap<Variable, Value> = sym_gamma.iter().map(|e| (build.event_nodes[e].clone(), e.value.clone())).collect();
        let gamma_nodes: BTreeMap<Variable, Value> = sym_nodes.iter().map(|(n, v)| (n.clone(), literal_of(&symbols, v).1)).collect();
        if let Some(n) = gamma_nodes.keys().find(|n| delta_nodes.contains_key(*n)) {
            return Err(Error::SymbolicConflict(n.to_string()));
        }
        let events = |m: &BTreeMap<Variable, Value>| -> CfConjunction { m.iter().map(|(n, v)| node_event(cg, n, v)).collect() };
        if self.trace.is_some() {
            let merges = build.merges.iter().map(|m| m.to_string()).collect();
            let detail = format!("counterfactual graph of P({both}) rewrites the query to P({} | {})", events(&gamma_nodes), events(&delta_nodes));
            self.note_graph(P, 2, detail, cg, merges);
        }

        // descendants first, so conditioning events further down are moved
        // into subscripts before the ones above them
        let order = cg.admg().topological_order();
        let mut candidates: Vec<&Variable> = delta_nodes.keys().collect();
        candidates.sort_by_key(|n| std::cmp::Reverse(order.iter().position(|o| o == *n)));
        let fixed = cg.fixed_nodes();
        let targets: BTreeSet<Variable> = gamma_nodes.keys().cloned().collect();
        for y in candidates {
            let a = BTreeSet::from([y.clone()]);
            let mut z: BTreeSet<Variable> = delta_nodes.keys().filter(|n| *n != y).cloned().collect();
            z.extend(fixed.iter().cloned());
            if !cg.admg().cut_outgoing(&a).d_separated(&a, &targets, &z)? {
                continue;
            }
            let ybase = &cg.node(y).base;
            let yval = &delta_nodes[y];
            let desc = cg.admg().descendants([y])?;
            // acting on y changes every descendant, conditioning events included
            let push = |m: &BTreeMap<Variable, Value>| -> Option<CfConjunction> {
                m.iter()
                    .filter(|(n, _)| *n != y)
                    .map(|(n, v)| {
                        let node = cg.node(n);
                        let mut sub = node.subscript.clone();
                        if desc.contains(n) {
                            match sub.get(ybase) {
                                Some(old) if old != yval => return None,
                                _ => {
                                    sub.insert(ybase.clone(), yval.clone());
                                }
                            }
                        }
                        Some(CfEvent::new(CfVariable::new(node.base.clone(), sub), v.clone()))
                    })
                    .collect()
            };
            let (Some(new_gamma), Some(new_delta)) = (push(&gamma_nodes), push(&delta_nodes)) else { continue };
            self.note(P, 4, || format!("{} is separated from the query; continue with P({new_gamma} | {new_delta})", node_event(cg, y, yval)));
            match self.idc(&new_gamma, &new_delta)? {
                CondOut::Plain(Out::Fail(_)) => {
                    self.note(P, 4, || "that branch failed; trying the next conditioning event".into());
                    continue;
                }
                other => return Ok(other),
            }
        }

        // the symbolic values let numerator and denominator share one
        // identification run
        let used: BTreeSet<usize> = entries.iter().map(|e| e.1).collect();
        let binders: Vec<Binder> = used.iter().map(|&i| symbols[i].0.clone()).collect();
        let literal: BTreeMap<String, ValueSymbol> =
            used.iter().map(|&i| (symbols[i].0.name.clone(), ValueSymbol::Literal(symbols[i].2.clone()))).collect();
        let joint = events(&sym_nodes).and(&events(&delta_nodes));
        self.note(P, 5, || format!("ratio of P({joint}) over its sum across the query values"));
        match self.id(&joint)? {
            Out::Expr(r) => {
                let numerator = r.substitute(&literal);
                let denominator = ProbExpression::sum_over(binders, self.refresh_binders(&r));
                Ok(CondOut::Plain(Out::Expr(ProbExpression::ratio(numerator, denominator))))
            }
            other => Ok(CondOut::Plain(other)),
        }
    }

    /// Alpha-renames every binder so a copy can sit beside the original.
    fn refresh_binders(&mut self, e: &ProbExpression) -> ProbExpression {
        let binders: Vec<Binder> = e.binders().into_iter().cloned().collect();
        let map = binders
            .into_iter()
            .map(|b| {
                let (nb, _) = self.fresh(&b.var);
                (b.name, ValueSymbol::Bound { name: nb.name, var: b.var })
            })
            .collect();
        e.substitute(&map)
    }
}

fn join(s: &BTreeSet<Variable>) -> String {
    s.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(", ")
}

/// Events of component `s` with every outside variable that reaches a node
/// through `s` moved into that node's subscript. A variable that would be
/// set to two values in one subscript is returned as the error.
fn push_subscripts(
    cg: &CounterfactualGraph,
    s: &BTreeSet<Variable>,
    val: &BTreeMap<Variable, Value>,
) -> std::result::Result<CfConjunction, (Variable, Value, Value)> {
    let g = cg.admg();
    let mut events = Vec::new();
    for w in s {
        let mut reach = BTreeSet::from([w]);
        let mut stack = vec![w];
        while let Some(x) = stack.pop() {
            for p in g.parents(x) {
                if s.contains(p) && reach.insert(p) {
                    stack.push(p);
                }
            }
        }
        let mut sub = Intervention::new();
        for x in &reach {
            for p in g.parents(x).filter(|p| !s.contains(*p)) {
                let base = cg.node(p).base.clone();
                let v = val[p].clone();
                if let Some(old) = sub.insert(base.clone(), v.clone()) {
                    if old != v {
                        return Err((base, old, v));
                    }
                }
            }
        }
        events.push(CfEvent::new(CfVariable::new(cg.node(w).base.clone(), sub), val[w].clone()));
    }
    Ok(CfConjunction::new(events))
}
