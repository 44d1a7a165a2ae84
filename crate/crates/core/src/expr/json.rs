use serde::{Deserialize, Serialize};

use super::ProbExpression;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "cfid-expr/1";

#[derive(Serialize, Deserialize)]
struct Document {
    schema: String,
    expr: ProbExpression,
}

pub fn to_json(e: &ProbExpression) -> serde_json::Value {
    serde_json::json!({ "schema": SCHEMA_VERSION, "expr": e })
}

pub fn to_json_string(e: &ProbExpression) -> String {
    serde_json::to_string(&to_json(e)).expect("expressions serialize")
}

/// Parses a document produced by [`to_json`]. Structure is checked by serde;
/// call [`ProbExpression::validate`] for the scoping rules.
pub fn from_json(text: &str) -> Result<ProbExpression> {
    let doc: Document = serde_json::from_str(text)?;
    if doc.schema != SCHEMA_VERSION {
        return Err(Error::Json(format!("unsupported schema `{}`, expected `{SCHEMA_VERSION}`", doc.schema)));
    }
    Ok(doc.expr)
}
