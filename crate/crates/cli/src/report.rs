//! The result of one identification run, as printed by `cfid identify`.

use std::fmt::Write;

use anyhow::Result;
use cfid_core::expr::{render, to_json, Format};
use cfid_core::graph::CausalDiagram;
use cfid_core::events::Query;
use cfid_core::identify::{identify, CondIdResult, NonIdWitness, TraceStep, ZeroCause};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Identified,
    Fail,
    Zero,
    Undefined,
    InconsistentZero,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Identified => "identified",
            Verdict::Fail => "fail",
            Verdict::Zero => "zero",
            Verdict::Undefined => "undefined",
            Verdict::InconsistentZero => "inconsistent-zero",
        }
    }

    /// 0 for an answer, 2 for FAIL, 3 for UNDEFINED.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Identified | Verdict::Zero | Verdict::InconsistentZero => 0,
            Verdict::Fail => 2,
            Verdict::Undefined => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpressionPayload {
    pub text: String,
    pub latex: String,
    pub json: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub query: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expression: Option<ExpressionPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<NonIdWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceStep>>,
}

impl RunReport {
    pub fn run(g: &CausalDiagram, q: &Query, explain: bool) -> Result<Self> {
        let id = identify(g, q, explain)?;
        let (verdict, expression, witness) = match id.result {
            CondIdResult::Expression(e) => (
                Verdict::Identified,
                Some(ExpressionPayload { text: render(&e, Format::Text), latex: render(&e, Format::Latex), json: to_json(&e) }),
                None,
            ),
            CondIdResult::Zero if id.zero_cause == Some(ZeroCause::Inconsistent) => (Verdict::InconsistentZero, None, None),
            CondIdResult::Zero => (Verdict::Zero, None, None),
            CondIdResult::Fail(w) => (Verdict::Fail, None, Some(w)),
            CondIdResult::Undefined => (Verdict::Undefined, None, None),
        };
        Ok(RunReport { query: q.to_string(), verdict, expression, witness, trace: explain.then_some(id.trace) })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable report with the expression in `format`.
    pub fn to_text(&self, format: Format) -> String {
        let mut out = String::new();
        writeln!(out, "query: {}", self.query).unwrap();
        writeln!(out, "verdict: {}", self.verdict.as_str()).unwrap();
        if let Some(e) = &self.expression {
            let shown = match format {
                Format::Text => e.text.clone(),
                Format::Latex => e.latex.clone(),
                Format::Json => serde_json::to_string_pretty(&e.json).expect("json value"),
            };
            writeln!(out, "expression: {shown}").unwrap();
        }
        match self.verdict {
            Verdict::Zero => writeln!(out, "expression: 0").unwrap(),
            Verdict::InconsistentZero => writeln!(out, "expression: 0 (the events are inconsistent)").unwrap(),
            Verdict::Undefined => writeln!(out, "the conditioning event has probability 0 in every model").unwrap(),
            _ => {}
        }
        if let Some(w) = &self.witness {
            writeln!(out, "witness: {w}").unwrap();
        }
        if let Some(trace) = &self.trace {
            writeln!(out, "trace:").unwrap();
            for step in trace {
                writeln!(out, "{step}").unwrap();
            }
        }
        out
    }
}
