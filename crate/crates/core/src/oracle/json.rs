use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{DiscreteScm, Exogenous, Mechanism};
use crate::error::{Error, Result};
use crate::events::Value;
use crate::graph::{parse_graph, render_graph, Variable};

pub const SCM_SCHEMA_VERSION: &str = "cfid-scm/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScmDocument {
    schema: String,
    /// Diagram in graph text format.
    graph: String,
    domains: BTreeMap<Variable, Vec<String>>,
    exogenous: Vec<ExoDocument>,
    functions: BTreeMap<Variable, FunctionDocument>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExoDocument {
    name: String,
    attached: Vec<Variable>,
    /// Exact probabilities such as `"1/3"`.
    probs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionDocument {
    parents: Vec<Variable>,
    exogenous: Vec<String>,
    table: Vec<String>,
}

pub fn scm_to_json(m: &DiscreteScm) -> String {
    let doc = ScmDocument {
        schema: SCM_SCHEMA_VERSION.into(),
        graph: render_graph(m.diagram()),
        domains: m.domains().iter().map(|(k, v)| (k.clone(), v.iter().map(|x| x.to_string()).collect())).collect(),
        exogenous: m
            .exogenous()
            .iter()
            .map(|u| ExoDocument { name: u.name.clone(), attached: u.attached.clone(), probs: u.probs.iter().map(|p| p.to_string()).collect() })
            .collect(),
        functions: m
            .functions()
            .iter()
            .map(|(k, f)| {
                (
                    k.clone(),
                    FunctionDocument {
                        parents: f.parents.clone(),
                        exogenous: f.exogenous.clone(),
                        table: f.table.iter().map(|x| x.to_string()).collect(),
                    },
                )
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("models serialize")
}

pub fn scm_from_json(text: &str) -> Result<DiscreteScm> {
    let doc: ScmDocument = serde_json::from_str(text)?;
    if doc.schema != SCM_SCHEMA_VERSION {
        return Err(Error::Json(format!("unsupported schema `{}`, expected `{SCM_SCHEMA_VERSION}`", doc.schema)));
    }
    let values = |xs: Vec<String>| -> Result<Vec<Value>> { xs.into_iter().map(Value::new).collect() };
    let diagram = parse_graph(&doc.graph)?;
    let domains = doc.domains.into_iter().map(|(k, v)| Ok((k, values(v)?))).collect::<Result<_>>()?;
    let exogenous = doc
        .exogenous
        .into_iter()
        .map(|u| {
            let probs = u
                .probs
                .iter()
                .map(|p| p.trim().parse::<BigRational>().map_err(|_| Error::InvalidModel(format!("bad probability `{p}` for `{}`", u.name))))
                .collect::<Result<_>>()?;
            Ok(Exogenous { name: u.name, attached: u.attached, probs })
        })
        .collect::<Result<_>>()?;
    let functions = doc
        .functions
        .into_iter()
        .map(|(k, f)| Ok((k, Mechanism { parents: f.parents, exogenous: f.exogenous, table: values(f.table)? })))
        .collect::<Result<_>>()?;
    DiscreteScm::new(diagram, domains, exogenous, functions)
}
