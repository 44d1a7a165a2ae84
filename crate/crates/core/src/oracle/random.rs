use std::collections::BTreeMap;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DiscreteScm, Exogenous, Mechanism, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::events::Value;
use crate::graph::{CausalDiagram, Variable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomScmConfig {
    /// Per-variable domain sizes; others use `default_domain`.
    pub domain_sizes: BTreeMap<Variable, usize>,
    pub default_domain: usize,
    /// States of each node's own exogenous variable.
    pub node_exo: usize,
    /// States of the exogenous variable behind each bidirected edge.
    pub edge_exo: usize,
    pub budget: u128,
}

impl Default for RandomScmConfig {
    fn default() -> Self {
        RandomScmConfig { domain_sizes: BTreeMap::new(), default_domain: 2, node_exo: 3, edge_exo: 2, budget: DEFAULT_BUDGET }
    }
}

/// Value names for `v`: `x0, x1, ...`; a digit separator is inserted for
/// names ending in a digit (`w1_0`).
pub fn domain_values(v: &Variable, size: usize) -> Vec<Value> {
    let mut stem = v.as_str().to_lowercase();
    if stem.ends_with(|c: char| c.is_ascii_digit()) {
        stem.push('_');
    }
    (0..size).map(|i| Value::new(format!("{stem}{i}")).expect("generated token")).collect()
}

/// Seeded random model over `g`: one exogenous variable per node and one per
/// bidirected edge, random positive weights and uniformly random function
/// tables.
pub fn random_scm(g: &CausalDiagram, seed: u64, cfg: &RandomScmConfig) -> Result<DiscreteScm> {
    let sizes: BTreeMap<Variable, usize> =
        g.nodes().iter().map(|v| (v.clone(), cfg.domain_sizes.get(v).copied().unwrap_or(cfg.default_domain))).collect();
    if let Some((v, s)) = sizes.iter().find(|(_, s)| **s < 2 || **s > 255) {
        return Err(Error::InvalidModel(format!("domain size {s} for `{v}` must be between 2 and 255")));
    }
    if cfg.node_exo == 0 || cfg.edge_exo == 0 || cfg.node_exo > 255 || cfg.edge_exo > 255 {
        return Err(Error::InvalidModel("exogenous sizes must be between 1 and 255".into()));
    }
    let edges = g.bidirected_edges();
    let states = (cfg.node_exo as u128).checked_pow(g.len() as u32).zip((cfg.edge_exo as u128).checked_pow(edges.len() as u32));
    let states = states.and_then(|(a, b)| a.checked_mul(b)).unwrap_or(u128::MAX);
    if states > cfg.budget {
        return Err(Error::BudgetExceeded { states, budget: cfg.budget });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = |n: usize, rng: &mut ChaCha8Rng| -> Vec<BigRational> {
        let w: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=16)).collect();
        let total: u32 = w.iter().sum();
        w.into_iter().map(|x| BigRational::new(x.into(), total.into())).collect()
    };
    let mut exogenous = Vec::new();
    for v in g.nodes() {
        exogenous.push(Exogenous { name: format!("U_{v}"), attached: vec![v.clone()], probs: weights(cfg.node_exo, &mut rng) });
    }
    for (a, b) in edges {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        exogenous.push(Exogenous { name: format!("U_{a}_{b}"), attached: vec![a, b], probs: weights(cfg.edge_exo, &mut rng) });
    }
    let domains: BTreeMap<Variable, Vec<Value>> = sizes.iter().map(|(v, &s)| (v.clone(), domain_values(v, s))).collect();
    let mut functions = BTreeMap::new();
    for v in g.nodes() {
        let parents: Vec<Variable> = g.parents(v).cloned().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let attached: Vec<&Exogenous> = exogenous.iter().filter(|u| u.attached.contains(v)).collect();
        let rows: usize = parents.iter().map(|p| sizes[p]).chain(attached.iter().map(|u| u.probs.len())).product();
        let table = (0..rows).map(|_| domains[v][rng.gen_range(0..sizes[v])].clone()).collect();
        functions.insert(v.clone(), Mechanism { parents, exogenous: attached.iter().map(|u| u.name.clone()).collect(), table });
    }
    Ok(DiscreteScm::new(g.clone(), domains, exogenous, functions)?.with_budget(cfg.budget))
}
