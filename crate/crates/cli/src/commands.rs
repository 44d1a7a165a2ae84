//! The subcommands, as functions from inputs to printed output and exit
//! code so they can be driven in-process.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use cfid_core::events::{parse_query, Intervention, Query};
use cfid_core::expr::Format;
use cfid_core::graph::{parse_graph, render_graph, CausalDiagram};
use cfid_core::identify::{id_star, IdResult};
use cfid_core::oracle::{interventional_family, parity_pair, random_scm, scm_from_json, scm_to_json, DiscreteScm, RandomScmConfig};
use cfid_core::worlds::{make_cg, MakeCg};
use num_rational::BigRational;
use serde::Serialize;

use crate::report::RunReport;
use crate::verify::{verify, VerifyConfig};

/// Exit code for a verification run that found a disagreement.
pub const EXIT_MISMATCH: i32 = 4;
pub const EXIT_INPUT: i32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, code: 0 }
    }
}

/// Parses a query, accepting a bare conjunction for `P(...)`.
pub fn read_query(text: &str) -> Result<Query> {
    let t = text.trim();
    let q = if t.starts_with("P(") { parse_query(t) } else { parse_query(&format!("P({t})")) };
    q.with_context(|| format!("parsing query `{t}`"))
}

pub fn read_graph(path: &Path) -> Result<CausalDiagram> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_graph(&text).with_context(|| format!("parsing graph {}", path.display()))
}

pub fn read_model(path: &Path) -> Result<DiscreteScm> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    scm_from_json(&text).with_context(|| format!("loading model {}", path.display()))
}

pub fn identify(g: &CausalDiagram, query: &str, format: Format, explain: bool, json: bool) -> Result<Outcome> {
    let q = read_query(query)?;
    let report = RunReport::run(g, &q, explain)?;
    let stdout = if json { report.to_json() + "\n" } else { report.to_text(format) };
    Ok(Outcome { stdout, code: report.verdict.exit_code() })
}

/// The parallel-worlds graph, every merge and the counterfactual graph of
/// the query's events, followed by the traced identification.
pub fn explain(g: &CausalDiagram, query: &str) -> Result<Outcome> {
    let q = read_query(query)?;
    let all = q.gamma.and(&q.delta);
    let mut out = String::new();
    writeln!(out, "query: {q}").unwrap();
    writeln!(out, "events: {all}").unwrap();
    let indent = |s: &str| s.lines().map(|l| format!("  {l}\n")).collect::<String>();
    match make_cg(g, &all)? {
        MakeCg::Inconsistent { reason, merges } => {
            writeln!(out, "merges:").unwrap();
            for m in &merges {
                writeln!(out, "  {m}").unwrap();
            }
            writeln!(out, "inconsistent: {reason}").unwrap();
        }
        MakeCg::Graph(b) => {
            write!(out, "parallel-worlds graph:\n{}", indent(&b.parallel_worlds)).unwrap();
            writeln!(out, "merges:").unwrap();
            if b.merges.is_empty() {
                writeln!(out, "  (none)").unwrap();
            }
            for m in &b.merges {
                writeln!(out, "  {m}").unwrap();
            }
            write!(out, "counterfactual graph:\n{}", indent(&b.graph.render())).unwrap();
            writeln!(out, "rewritten events: {}", b.gamma).unwrap();
        }
    }
    let report = RunReport::run(g, &q, true)?;
    writeln!(out).unwrap();
    out.push_str(&report.to_text(Format::Text));
    Ok(Outcome { stdout: out, code: report.verdict.exit_code() })
}

#[derive(Debug, Serialize)]
struct OracleReport {
    query: String,
    worlds: BTreeMap<String, String>,
    exact: Option<String>,
    probability: Option<f64>,
}

/// `P(γ)` or `P(γ | δ)` by enumerating the model.
pub fn oracle(m: &DiscreteScm, query: &str, json: bool) -> Result<Outcome> {
    let q = read_query(query)?;
    let mut worlds: BTreeMap<Intervention, Vec<String>> = BTreeMap::new();
    for e in q.gamma.iter().chain(q.delta.iter()) {
        worlds.entry(e.subscript().clone()).or_default().push(e.to_string());
    }
    let exact: Option<BigRational> = if q.delta.is_empty() {
        Some(m.counterfactual_prob_exact(&q.gamma)?)
    } else {
        m.conditional_counterfactual_prob_exact(&q.gamma, &q.delta)?
    };
    let probability = exact.as_ref().map(cfid_core::oracle::rational_to_f64);
    let report = OracleReport {
        query: q.to_string(),
        worlds: worlds
            .iter()
            .map(|(w, es)| (if w.is_empty() { "(actual)".to_string() } else { w.to_string() }, es.join(", ")))
            .collect(),
        exact: exact.as_ref().map(|r| r.to_string()),
        probability,
    };
    let code = if exact.is_some() { 0 } else { 3 };
    if json {
        return Ok(Outcome { stdout: serde_json::to_string_pretty(&report)? + "\n", code });
    }
    let mut out = String::new();
    writeln!(out, "query: {}", report.query).unwrap();
    for (w, es) in &report.worlds {
        writeln!(out, "world {w}: {es}").unwrap();
    }
    match (&report.exact, report.probability) {
        (Some(e), Some(p)) => {
            writeln!(out, "exact: {e}").unwrap();
            writeln!(out, "probability: {p}").unwrap();
        }
        _ => writeln!(out, "probability: undefined (the conditioning event has probability 0)").unwrap(),
    }
    Ok(Outcome { stdout: out, code })
}

pub fn verify_cmd(g: &CausalDiagram, cfg: &VerifyConfig, json: bool) -> Result<Outcome> {
    if let Some(dir) = &cfg.dump_failures {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let s = verify(g, cfg)?;
    let stdout = if json { serde_json::to_string_pretty(&s)? + "\n" } else { s.to_text() };
    Ok(Outcome { stdout, code: if s.passed() { 0 } else { EXIT_MISMATCH } })
}

/// A seeded random model of the graph, serialized.
pub fn model(g: &CausalDiagram, seed: u64, domain: usize) -> Result<Outcome> {
    let cfg = RandomScmConfig { default_domain: domain, ..RandomScmConfig::default() };
    Ok(Outcome::ok(scm_to_json(&random_scm(g, seed, &cfg)?) + "\n"))
}

/// Builds the parity pair, checks it, and optionally writes it out.
pub fn parity(k: usize, flip: bool, emit: Option<&Path>) -> Result<Outcome> {
    let eps = flip.then(|| BigRational::new(1.into(), 256.into()));
    let p = parity_pair(k, eps)?;
    let f1 = interventional_family(&p.m1, None)?;
    let f2 = interventional_family(&p.m2, None)?;
    let (a, b) = (p.m1.counterfactual_prob_exact(&p.query)?, p.m2.counterfactual_prob_exact(&p.query)?);
    let mut out = String::new();
    write!(out, "graph:\n{}", render_graph(&p.graph)).unwrap();
    writeln!(out, "query: P({})", p.query).unwrap();
    writeln!(out, "interventional families: {} ({} tables, exact)", if f1 == f2 { "identical" } else { "DIFFERENT" }, f1.len()).unwrap();
    writeln!(out, "P(query) in model 1: {a}").unwrap();
    writeln!(out, "P(query) in model 2: {b}").unwrap();
    match id_star(&p.graph, &p.query)? {
        IdResult::Fail(w) => writeln!(out, "identification: fail\nwitness: {w}").unwrap(),
        IdResult::Zero => writeln!(out, "identification: zero").unwrap(),
        IdResult::Expression(_) => writeln!(out, "identification: identified").unwrap(),
    }
    if let Some(dir) = emit {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("graph.txt"), render_graph(&p.graph))?;
        fs::write(dir.join("model1.json"), scm_to_json(&p.m1))?;
        fs::write(dir.join("model2.json"), scm_to_json(&p.m2))?;
        fs::write(dir.join("query.txt"), format!("P({})\n", p.query))?;
        writeln!(out, "written to {}", dir.display()).unwrap();
    }
    Ok(Outcome::ok(out))
}

/// Reads a query file: one query per line, `#` comments and blank lines
/// ignored.
pub fn read_queries(path: &Path) -> Result<Vec<Query>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| read_query(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}
