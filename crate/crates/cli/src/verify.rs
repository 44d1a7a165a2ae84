//! Cross-checks identification against brute-force enumeration on seeded
//! random models.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use cfid_core::events::{Intervention, Query, Value};
use cfid_core::expr::{evaluate, render_text, to_json_string};
use cfid_core::graph::{render_graph, CausalDiagram, Variable};
use cfid_core::identify::{idc_star, validate_witness, CondIdResult};
use cfid_core::oracle::{domain_values, random_scm, scm_to_json, DiscreteScm, LazyFamily, RandomScmConfig};
use serde::Serialize;

use crate::universe::{queries, worlds, UniverseSpec};

pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum QuerySet {
    Universe(UniverseSpec),
    List(Vec<Query>),
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub models: usize,
    pub seed: u64,
    pub queries: QuerySet,
    pub scm: RandomScmConfig,
    pub dump_failures: Option<PathBuf>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            models: 25,
            seed: 0,
            queries: QuerySet::Universe(UniverseSpec::default()),
            scm: RandomScmConfig::default(),
            dump_failures: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub identified: usize,
    pub zero: usize,
    pub fail: usize,
    pub undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    /// `None` for failures that do not depend on a model.
    pub seed: Option<u64>,
    pub query: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub graph: String,
    pub queries: usize,
    pub verdicts: Counts,
    pub models: usize,
    /// Seeds skipped with the reason, typically an exceeded budget.
    pub skipped: Vec<(u64, String)>,
    /// Model-query pairs compared against enumeration.
    pub comparisons: usize,
    /// Pairs not compared because the conditioning event has probability 0
    /// in that model.
    pub null_conditioning: usize,
    pub mismatches: Vec<Mismatch>,
    /// Canonical JSON of every identified expression, one per line, in query
    /// order.
    #[serde(skip)]
    pub expressions: String,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let v = &self.verdicts;
        writeln!(out, "queries: {} (identified {}, zero {}, fail {}, undefined {})", self.queries, v.identified, v.zero, v.fail, v.undefined).unwrap();
        writeln!(out, "models: {} run, {} skipped", self.models - self.skipped.len(), self.skipped.len()).unwrap();
        for (seed, why) in &self.skipped {
            writeln!(out, "  skipped seed {seed}: {why}").unwrap();
        }
        writeln!(out, "comparisons: {} ({} with a null conditioning event)", self.comparisons, self.null_conditioning).unwrap();
        writeln!(out, "mismatches: {}", self.mismatches.len()).unwrap();
        for m in &self.mismatches {
            match m.seed {
                Some(s) => writeln!(out, "  seed {s}: {}: {}", m.query, m.detail).unwrap(),
                None => writeln!(out, "  {}: {}", m.query, m.detail).unwrap(),
            }
        }
        out
    }
}

fn domains_for(g: &CausalDiagram, cfg: &RandomScmConfig) -> BTreeMap<Variable, Vec<Value>> {
    g.nodes()
        .iter()
        .map(|v| (v.clone(), domain_values(v, cfg.domain_sizes.get(v).copied().unwrap_or(cfg.default_domain))))
        .collect()
}

/// Runs the harness; mismatches are reported in the summary, not as errors.
pub fn verify(g: &CausalDiagram, cfg: &VerifyConfig) -> Result<VerifySummary> {
    let domains = domains_for(g, &cfg.scm);
    let qs = match &cfg.queries {
        QuerySet::Universe(spec) => queries(g, &domains, *spec),
        QuerySet::List(list) => list.clone(),
    };

    // identification depends on the graph only
    let mut verdicts = Counts::default();
    let mut mismatches = Vec::new();
    let mut expressions = String::new();
    let mut results = Vec::with_capacity(qs.len());
    for q in &qs {
        let r = idc_star(g, &q.gamma, &q.delta).with_context(|| format!("identifying {q}"))?;
        match &r {
            CondIdResult::Expression(e) => {
                verdicts.identified += 1;
                expressions.push_str(&to_json_string(e));
                expressions.push('\n');
            }
            CondIdResult::Zero => verdicts.zero += 1,
            CondIdResult::Undefined => verdicts.undefined += 1,
            CondIdResult::Fail(w) => {
                verdicts.fail += 1;
                if !validate_witness(g, w)? {
                    mismatches.push(Mismatch { seed: None, query: q.to_string(), detail: format!("witness does not validate: {w}") });
                }
            }
        }
        results.push(r);
    }

    let mut all_worlds: BTreeSet<Intervention> = qs.iter().flat_map(|q| q.gamma.worlds().into_iter().chain(q.delta.worlds())).collect();
    if let QuerySet::Universe(spec) = &cfg.queries {
        all_worlds.extend(worlds(g, &domains, spec.max_sub));
    }
    let all_worlds: Vec<Intervention> = all_worlds.into_iter().collect();

    let mut summary = VerifySummary {
        graph: render_graph(g),
        queries: qs.len(),
        verdicts,
        models: cfg.models,
        skipped: Vec::new(),
        comparisons: 0,
        null_conditioning: 0,
        mismatches,
        expressions,
    };
    let mut dumped = 0usize;
    for i in 0..cfg.models {
        let seed = cfg.seed.wrapping_add(i as u64);
        let m = match random_scm(g, seed, &cfg.scm) {
            Ok(m) => m,
            Err(e) => {
                summary.skipped.push((seed, e.to_string()));
                continue;
            }
        };
        let en = m.enumerate(&all_worlds)?;
        let fam = LazyFamily::new(&m);
        for (q, r) in qs.iter().zip(&results) {
            if matches!(r, CondIdResult::Fail(_)) {
                continue;
            }
            let joint = en.prob(&q.gamma.and(&q.delta))?;
            let p_delta = if q.delta.is_empty() { 1.0 } else { en.prob(&q.delta)? };
            summary.comparisons += 1;
            let problem = match r {
                CondIdResult::Expression(_) | CondIdResult::Zero if p_delta == 0.0 => {
                    summary.null_conditioning += 1;
                    None
                }
                CondIdResult::Expression(e) => {
                    let truth = joint / p_delta;
                    match evaluate(e, &fam, &BTreeMap::new()) {
                        Ok(got) if (got - truth).abs() <= TOLERANCE => None,
                        Ok(got) => Some(format!("{} evaluates to {got}, enumeration gives {truth}", render_text(e))),
                        Err(err) => Some(format!("{} does not evaluate: {err}", render_text(e))),
                    }
                }
                CondIdResult::Zero => (joint != 0.0).then(|| format!("identified as 0, enumeration gives {}", joint / p_delta)),
                CondIdResult::Undefined => (p_delta != 0.0).then(|| format!("undefined, but the conditioning event has probability {p_delta}")),
                CondIdResult::Fail(_) => None,
            };
            if let Some(detail) = problem {
                if let Some(dir) = &cfg.dump_failures {
                    if dumped < 20 {
                        dump(dir, g, &m, seed, q, &detail)?;
                        dumped += 1;
                    }
                }
                summary.mismatches.push(Mismatch { seed: Some(seed), query: q.to_string(), detail });
            }
        }
    }
    Ok(summary)
}

/// Writes the graph, model and query of one failure as a self-contained
/// fixture.
fn dump(dir: &std::path::Path, g: &CausalDiagram, m: &DiscreteScm, seed: u64, q: &Query, detail: &str) -> Result<()> {
    let n = fs::read_dir(dir).map(|d| d.count()).unwrap_or(0);
    let path = dir.join(format!("failure-{n:03}-seed{seed}"));
    fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
    fs::write(path.join("graph.txt"), render_graph(g))?;
    fs::write(path.join("model.json"), scm_to_json(m))?;
    fs::write(path.join("query.txt"), format!("{q}\n"))?;
    fs::write(path.join("detail.txt"), format!("{detail}\n"))?;
    Ok(())
}
