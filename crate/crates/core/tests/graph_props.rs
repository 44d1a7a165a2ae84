mod common;

use std::collections::{BTreeMap, BTreeSet};

use cfid_core::graph::{CausalDiagram, Variable};
use cfid_core::oracle::{ci_gap, random_scm, RandomScmConfig};
use common::admg;
use proptest::prelude::*;

/// Reachability over reversed directed edges, written without the library.
fn dfs_ancestors(g: &CausalDiagram, s: &BTreeSet<Variable>) -> BTreeSet<Variable> {
    let edges = g.directed_edges();
    let mut seen = s.clone();
    let mut stack: Vec<Variable> = s.iter().cloned().collect();
    while let Some(v) = stack.pop() {
        for (p, c) in &edges {
            if *c == v && seen.insert(p.clone()) {
                stack.push(p.clone());
            }
        }
    }
    seen
}

/// Union-find over the bidirected edges.
fn union_find_components(g: &CausalDiagram) -> BTreeSet<BTreeSet<Variable>> {
    let nodes: Vec<Variable> = g.nodes().iter().cloned().collect();
    let ix = |v: &Variable| nodes.iter().position(|n| n == v).unwrap();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (a, b) in g.bidirected_edges() {
        let (ra, rb) = (find(&mut parent, ix(&a)), find(&mut parent, ix(&b)));
        parent[ra] = rb;
    }
    let mut blocks: BTreeMap<usize, BTreeSet<Variable>> = BTreeMap::new();
    for (i, v) in nodes.iter().enumerate() {
        let r = find(&mut parent, i);
        blocks.entry(r).or_default().insert(v.clone());
    }
    blocks.into_values().collect()
}

fn subset(g: &CausalDiagram, mask: u32) -> BTreeSet<Variable> {
    g.nodes().iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| v.clone()).collect()
}

/// Three disjoint sets from per-node labels 0..4 (label 3 leaves the node out).
fn triple(g: &CausalDiagram, labels: &[u8]) -> [BTreeSet<Variable>; 3] {
    let mut out: [BTreeSet<Variable>; 3] = Default::default();
    for (v, &l) in g.nodes().iter().zip(labels) {
        if l < 3 {
            out[l as usize].insert(v.clone());
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, ..ProptestConfig::default() })]

    #[test]
    fn ancestors_match_reachability(g in admg(8), mask in any::<u32>()) {
        let s = subset(&g, mask);
        prop_assert_eq!(g.ancestors(&s).unwrap(), dfs_ancestors(&g, &s));
    }

    #[test]
    fn ancestors_are_monotone_and_idempotent(g in admg(8), m1 in any::<u32>(), m2 in any::<u32>()) {
        let (s, t) = (subset(&g, m1 & m2), subset(&g, m1));
        let an_s = g.ancestors(&s).unwrap();
        prop_assert!(an_s.is_subset(&g.ancestors(&t).unwrap()));
        prop_assert_eq!(g.ancestors(&an_s).unwrap(), an_s);
    }

    #[test]
    fn c_components_partition_like_union_find(g in admg(8)) {
        let blocks = g.c_components();
        let total: usize = blocks.iter().map(|b| b.len()).sum();
        prop_assert_eq!(total, g.len());
        prop_assert!(blocks.iter().all(|b| !b.is_empty()));
        let as_set: BTreeSet<BTreeSet<Variable>> = blocks.into_iter().collect();
        prop_assert_eq!(as_set, union_find_components(&g));
    }

    #[test]
    fn topological_order_is_lexicographic_kahn(g in admg(8)) {
        let order = g.topological_order();
        // parents first, and at each step the smallest available name
        let mut placed = BTreeSet::new();
        for v in &order {
            let ready: BTreeSet<&Variable> = g.nodes().iter().filter(|n| !placed.contains(*n) && g.parents(n).all(|p| placed.contains(p))).collect();
            prop_assert_eq!(ready.first().copied(), Some(v));
            placed.insert(v.clone());
        }
        prop_assert_eq!(placed.len(), g.len());
        for (p, c) in g.directed_edges() {
            prop_assert!(order.iter().position(|v| *v == p) < order.iter().position(|v| *v == c));
        }
    }

    #[test]
    fn d_separation_is_symmetric(g in admg(6), labels in proptest::collection::vec(0u8..4, 6)) {
        let [a, b, z] = triple(&g, &labels);
        prop_assert_eq!(g.d_separated(&a, &b, &z).unwrap(), g.d_separated(&b, &a, &z).unwrap());
    }

    #[test]
    fn surgeries_are_idempotent(g in admg(6), mask in any::<u32>()) {
        let s = subset(&g, mask);
        let cut = g.cut_incoming(&s);
        prop_assert_eq!(cut.cut_incoming(&s), cut.clone());
        for v in &s {
            prop_assert_eq!(cut.parents(v).count(), 0);
            prop_assert_eq!(cut.spouses(v).count(), 0);
        }
        let out = g.cut_outgoing(&s);
        prop_assert_eq!(out.cut_outgoing(&s), out.clone());
        prop_assert_eq!(out.bidirected_edges(), g.bidirected_edges());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    /// Every d-separated triple is conditionally independent in the
    /// enumerated joint of a random model.
    #[test]
    fn d_separation_implies_independence(g in admg(5), labels in proptest::collection::vec(0u8..4, 5), seed in 0u64..10_000) {
        let [a, b, z] = triple(&g, &labels);
        prop_assume!(!a.is_empty() && !b.is_empty());
        if g.d_separated(&a, &b, &z).unwrap() {
            let m = random_scm(&g, seed, &RandomScmConfig::default()).unwrap();
            let gap = ci_gap(&m, &a, &b, &z).unwrap();
            prop_assert!(gap <= 1e-9, "{a:?} {b:?} {z:?}: {gap}");
        }
    }
}
