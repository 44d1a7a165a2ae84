//! Enumeration of small queries for the verification harness.

use std::collections::{BTreeMap, BTreeSet};

use cfid_core::events::{CfConjunction, CfEvent, CfVariable, Intervention, Query, Value};
use cfid_core::graph::{CausalDiagram, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniverseSpec {
    pub max_events: usize,
    pub max_worlds: usize,
    /// Largest intervention defining a world.
    pub max_sub: usize,
}

impl Default for UniverseSpec {
    fn default() -> Self {
        UniverseSpec { max_events: 3, max_worlds: 2, max_sub: 1 }
    }
}

/// Every intervention on at most `max_sub` variables, the empty one first.
pub fn worlds(g: &CausalDiagram, domains: &BTreeMap<Variable, Vec<Value>>, max_sub: usize) -> Vec<Intervention> {
    let vars: Vec<&Variable> = g.nodes().iter().collect();
    let mut out = vec![Intervention::new()];
    let mut frontier = vec![(0usize, Intervention::new())];
    for _ in 0..max_sub {
        let mut next = Vec::new();
        for (start, w) in &frontier {
            for (i, v) in vars.iter().enumerate().skip(*start) {
                for x in &domains[*v] {
                    let mut w = w.clone();
                    w.insert((*v).clone(), x.clone());
                    out.push(w.clone());
                    next.push((i + 1, w));
                }
            }
        }
        frontier = next;
    }
    out
}

/// Whether values appear in domain order: the first value of each variable
/// met in reading order is its first domain value, the next new one its
/// second, and so on. Queries that differ only by renaming values are
/// identified alike, so one representative per renaming class suffices.
fn first_appearance_canonical(c: &CfConjunction, domains: &BTreeMap<Variable, Vec<Value>>) -> bool {
    let mut seen: BTreeMap<&Variable, Vec<&Value>> = BTreeMap::new();
    for e in c.iter() {
        let pairs = e.subscript().iter().chain(std::iter::once((e.base(), &e.value)));
        for (v, x) in pairs {
            let dom = &domains[v];
            let list = seen.entry(v).or_default();
            if !list.contains(&x) {
                if dom.get(list.len()) != Some(x) {
                    return false;
                }
                list.push(x);
            }
        }
    }
    true
}

/// All conjunctions of 1 to `max_events` distinct events over at most
/// `max_worlds` worlds, one per class of value renamings.
pub fn conjunctions(g: &CausalDiagram, domains: &BTreeMap<Variable, Vec<Value>>, spec: UniverseSpec) -> Vec<CfConjunction> {
    let mut events = Vec::new();
    for w in worlds(g, domains, spec.max_sub) {
        for v in g.nodes() {
            for x in &domains[v] {
                events.push(CfEvent::new(CfVariable::new(v.clone(), w.clone()), x.clone()));
            }
        }
    }
    let mut out = BTreeSet::new();
    let mut stack: Vec<usize> = Vec::new();
    extend(&events, spec, &mut stack, 0, domains, &mut out);
    out.into_iter().collect()
}

fn extend(
    events: &[CfEvent],
    spec: UniverseSpec,
    stack: &mut Vec<usize>,
    start: usize,
    domains: &BTreeMap<Variable, Vec<Value>>,
    out: &mut BTreeSet<CfConjunction>,
) {
    for i in start..events.len() {
        stack.push(i);
        let worlds: BTreeSet<&Intervention> = stack.iter().map(|&j| events[j].subscript()).collect();
        if worlds.len() <= spec.max_worlds {
            let c = CfConjunction::new(stack.iter().map(|&j| events[j].clone()));
            if first_appearance_canonical(&c, domains) {
                out.insert(c);
            }
            if stack.len() < spec.max_events {
                extend(events, spec, stack, i + 1, domains, out);
            }
        }
        stack.pop();
    }
}

/// Every split of every conjunction into a nonempty query part and a
/// (possibly empty) conditioning part.
pub fn queries(g: &CausalDiagram, domains: &BTreeMap<Variable, Vec<Value>>, spec: UniverseSpec) -> Vec<Query> {
    let mut out = Vec::new();
    for c in conjunctions(g, domains, spec) {
        let n = c.len();
        for mask in 0..(1u32 << n) - 1 {
            let (gamma, delta): (Vec<_>, Vec<_>) = c.iter().enumerate().partition(|(i, _)| mask >> i & 1 == 0);
            out.push(Query::new(
                gamma.into_iter().map(|(_, e)| e.clone()).collect(),
                delta.into_iter().map(|(_, e)| e.clone()).collect(),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use cfid_core::graph::parse_graph;
    use cfid_core::oracle::domain_values;

    fn domains(g: &CausalDiagram, k: usize) -> BTreeMap<Variable, Vec<Value>> {
        g.nodes().iter().map(|v| (v.clone(), domain_values(v, k))).collect()
    }

    #[test]
    fn worlds_of_single_variable_interventions() {
        let g = parse_graph("X -> Y").unwrap();
        let w = worlds(&g, &domains(&g, 2), 1);
        assert_eq!(w.len(), 5);
        assert!(w[0].is_empty());
        assert_eq!(worlds(&g, &domains(&g, 2), 2).len(), 9);
    }

    #[test]
    fn single_events_are_canonical_in_first_value() {
        let g = parse_graph("X -> Y").unwrap();
        let spec = UniverseSpec { max_events: 1, max_worlds: 1, max_sub: 1 };
        let c: Vec<String> = conjunctions(&g, &domains(&g, 2), spec).iter().map(|c| c.to_string()).collect();
        // per variable: the actual world, the other variable's world, and the
        // self-intervened world with an equal and an unequal value
        assert_eq!(c.len(), 8, "{c:?}");
        assert!(c.contains(&"X[X=x0]=x1".to_string()));
        assert!(c.contains(&"Y[Y=y0]=y1".to_string()));
        assert!(!c.iter().any(|s| s.contains("x1]") || s.contains("y1]")));
    }

    #[test]
    fn queries_keep_a_nonempty_query_part() {
        let g = parse_graph("X -> Y").unwrap();
        let qs = queries(&g, &domains(&g, 2), UniverseSpec::default());
        assert!(qs.iter().all(|q| !q.gamma.is_empty()));
        assert!(qs.iter().any(|q| q.is_conditional()));
        // no duplicates
        let set: BTreeSet<String> = qs.iter().map(|q| q.to_string()).collect();
        assert_eq!(set.len(), qs.len());
    }

    #[test]
    fn renamed_values_are_skipped() {
        let g = parse_graph("X -> Y").unwrap();
        let d = domains(&g, 2);
        let c = cfid_core::events::parse_conjunction("Y[X=x1]=y0").unwrap();
        assert!(!first_appearance_canonical(&c, &d));
        let c = cfid_core::events::parse_conjunction("Y[X=x0]=y0, Y[X=x1]=y1").unwrap();
        assert!(first_appearance_canonical(&c, &d));
    }
}
