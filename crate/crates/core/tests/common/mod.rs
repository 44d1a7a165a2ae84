#![allow(dead_code)]

use std::collections::BTreeSet;

use cfid_core::events::{CfConjunction, CfEvent, CfVariable, Intervention, Value};
use cfid_core::graph::{CausalDiagram, Variable};
use proptest::prelude::*;

pub const NAMES: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];

pub fn var(i: usize) -> Variable {
    Variable::from(NAMES[i])
}

/// Random ADMG over the first `n` names; directed edges point from lower to
/// higher index so the graph is acyclic.
pub fn admg(max_nodes: usize) -> impl Strategy<Value = CausalDiagram> {
    (2..=max_nodes).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (Just(n), proptest::collection::vec(0u8..3, pairs), proptest::collection::vec(0u8..4, pairs)).prop_map(|(n, d, b)| {
            let mut directed = Vec::new();
            let mut bidirected = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if d[k] > 0 {
                        directed.push((var(i), var(j)));
                    }
                    if b[k] == 0 {
                        bidirected.push((var(i), var(j)));
                    }
                    k += 1;
                }
            }
            CausalDiagram::new((0..n).map(var), directed, bidirected).unwrap()
        })
    })
}

/// Value token `k` of variable `v`, as generated by the random model.
pub fn val(v: &Variable, k: usize) -> Value {
    Value::new(format!("{}{k}", v.as_str().to_lowercase())).unwrap()
}

/// A conjunction of 1 to `max_events` events over at most two worlds with
/// interventions of at most `max_sub` variables; values index domains of
/// size `dom`.
pub fn conjunction(n: usize, max_events: usize, max_sub: usize, dom: usize) -> impl Strategy<Value = CfConjunction> {
    let world = proptest::collection::btree_map(0..n, 0..dom, 0..=max_sub);
    let event = (0..n, 0..2usize, 0..dom);
    (world.clone(), world, proptest::collection::vec(event, 1..=max_events)).prop_map(|(w0, w1, events)| {
        let worlds: [Intervention; 2] = [w0, w1].map(|w| w.into_iter().map(|(i, k)| (var(i), val(&var(i), k))).collect());
        events
            .into_iter()
            .map(|(i, w, k)| CfEvent::new(CfVariable::new(var(i), worlds[w].clone()), val(&var(i), k)))
            .collect()
    })
}

/// Splits a conjunction into a query part and a conditioning part by mask.
pub fn split(c: &CfConjunction, mask: u8) -> (CfConjunction, CfConjunction) {
    let (g, d): (Vec<_>, Vec<_>) = c.iter().enumerate().partition(|(i, _)| mask >> i & 1 == 0);
    (g.into_iter().map(|(_, e)| e.clone()).collect(), d.into_iter().map(|(_, e)| e.clone()).collect())
}

pub fn set(vs: &[usize]) -> BTreeSet<Variable> {
    vs.iter().map(|&i| var(i)).collect()
}
