//! Symbolic probability expressions over the experimental family `P*`.
//!
//! Leaves are `P_x(y)` terms; inner nodes are products, sums over bound
//! value symbols, and ratios.

mod canon;
mod eval;
mod json;
mod render;

pub use canon::{canonicalize, structurally_equal};
pub use eval::{evaluate, PStarSource};
pub use json::{from_json, to_json, to_json_string, SCHEMA_VERSION};
pub use render::{render, render_latex, render_text, Format};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::Value;
use crate::graph::Variable;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueSymbol {
    Literal(Value),
    /// A value bound by an enclosing sum.
    Bound { name: String, var: Variable },
}

impl ValueSymbol {
    pub fn bound_name(&self) -> Option<&str> {
        match self {
            ValueSymbol::Bound { name, .. } => Some(name),
            ValueSymbol::Literal(_) => None,
        }
    }
}

/// `P_x(y)`: the joint probability of `joint` under `do(intervention)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PStarTerm {
    #[serde(rename = "do")]
    pub intervention: BTreeMap<Variable, ValueSymbol>,
    pub joint: BTreeMap<Variable, ValueSymbol>,
}

impl PStarTerm {
    fn symbols(&self) -> impl Iterator<Item = &ValueSymbol> {
        self.intervention.values().chain(self.joint.values())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Binder {
    pub name: String,
    pub var: Variable,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbExpression {
    /// 0 or 1.
    #[serde(rename = "const")]
    Constant { value: u8 },
    #[serde(rename = "pstar")]
    PStar(PStarTerm),
    Product { factors: Vec<ProbExpression> },
    /// Sum of `body` over every value of each binder's variable.
    #[serde(rename = "sum")]
    SumOver { over: Vec<Binder>, body: Box<ProbExpression> },
    Ratio { numerator: Box<ProbExpression>, denominator: Box<ProbExpression> },
}

impl ProbExpression {
    pub fn zero() -> Self {
        ProbExpression::Constant { value: 0 }
    }

    pub fn one() -> Self {
        ProbExpression::Constant { value: 1 }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ProbExpression::Constant { value: 0 })
    }

    pub fn is_one(&self) -> bool {
        matches!(self, ProbExpression::Constant { value: 1 })
    }

    pub fn pstar(intervention: BTreeMap<Variable, ValueSymbol>, joint: BTreeMap<Variable, ValueSymbol>) -> Self {
        ProbExpression::PStar(PStarTerm { intervention, joint })
    }

    /// Product of the factors; a single factor is returned as is and an
    /// empty list gives 1.
    pub fn product(mut factors: Vec<ProbExpression>) -> Self {
        match factors.len() {
            0 => Self::one(),
            1 => factors.pop().unwrap(),
            _ => ProbExpression::Product { factors },
        }
    }

    /// Sum over the binders; no binders returns the body.
    pub fn sum_over(over: Vec<Binder>, body: ProbExpression) -> Self {
        if over.is_empty() {
            body
        } else {
            ProbExpression::SumOver { over, body: Box::new(body) }
        }
    }

    pub fn ratio(numerator: ProbExpression, denominator: ProbExpression) -> Self {
        ProbExpression::Ratio { numerator: Box::new(numerator), denominator: Box::new(denominator) }
    }

    /// Bound symbols used but not bound inside the expression.
    pub fn free_symbols(&self) -> BTreeSet<String> {
        fn walk(e: &ProbExpression, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match e {
                ProbExpression::Constant { .. } => {}
                ProbExpression::PStar(t) => {
                    for s in t.symbols() {
                        if let Some(n) = s.bound_name() {
                            if !bound.iter().any(|b| b == n) {
                                out.insert(n.to_string());
                            }
                        }
                    }
                }
                ProbExpression::Product { factors } => factors.iter().for_each(|f| walk(f, bound, out)),
                ProbExpression::SumOver { over, body } => {
                    let depth = bound.len();
                    bound.extend(over.iter().map(|b| b.name.clone()));
                    walk(body, bound, out);
                    bound.truncate(depth);
                }
                ProbExpression::Ratio { numerator, denominator } => {
                    walk(numerator, bound, out);
                    walk(denominator, bound, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    /// Replaces bound symbols by name wherever they occur, including binder
    /// lists when the replacement is itself a bound symbol.
    pub fn substitute(&self, map: &BTreeMap<String, ValueSymbol>) -> ProbExpression {
        let sub = |s: &ValueSymbol| match s.bound_name().and_then(|n| map.get(n)) {
            Some(r) => r.clone(),
            None => s.clone(),
        };
        match self {
            ProbExpression::Constant { .. } => self.clone(),
            ProbExpression::PStar(t) => ProbExpression::PStar(PStarTerm {
                intervention: t.intervention.iter().map(|(k, v)| (k.clone(), sub(v))).collect(),
                joint: t.joint.iter().map(|(k, v)| (k.clone(), sub(v))).collect(),
            }),
            ProbExpression::Product { factors } => ProbExpression::Product { factors: factors.iter().map(|f| f.substitute(map)).collect() },
            ProbExpression::SumOver { over, body } => ProbExpression::SumOver {
                over: over
                    .iter()
                    .map(|b| match map.get(&b.name) {
                        Some(ValueSymbol::Bound { name, .. }) => Binder { name: name.clone(), var: b.var.clone() },
                        _ => b.clone(),
                    })
                    .collect(),
                body: Box::new(body.substitute(map)),
            },
            ProbExpression::Ratio { numerator, denominator } => ProbExpression::ratio(numerator.substitute(map), denominator.substitute(map)),
        }
    }

    /// Every binder, outermost first.
    pub fn binders(&self) -> Vec<&Binder> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let ProbExpression::SumOver { over, .. } = e {
                out.extend(over.iter());
            }
        });
        out
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a ProbExpression)) {
        f(self);
        match self {
            ProbExpression::Constant { .. } | ProbExpression::PStar(_) => {}
            ProbExpression::Product { factors } => factors.iter().for_each(|x| x.visit(f)),
            ProbExpression::SumOver { body, .. } => body.visit(f),
            ProbExpression::Ratio { numerator, denominator } => {
                numerator.visit(f);
                denominator.visit(f);
            }
        }
    }

    /// Checks the structural rules: constants are 0 or 1, products have at
    /// least two factors and no constants, sums bind at least one symbol,
    /// binder names are unique, bound symbols are in scope and refer to
    /// their binder's variable, and each `P*` term has a nonempty joint
    /// disjoint from its intervention.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedExpression(m));
        let mut names = BTreeSet::new();
        for b in self.binders() {
            if !names.insert(&b.name) {
                return bad(format!("binder `{}` introduced twice", b.name));
            }
            if b.name.is_empty() {
                return bad("empty binder name".into());
            }
        }
        fn walk(e: &ProbExpression, scope: &mut Vec<Binder>) -> Result<()> {
            let bad = |m: String| Err(Error::MalformedExpression(m));
            match e {
                ProbExpression::Constant { value } if *value > 1 => bad(format!("constant {value} is not 0 or 1")),
                ProbExpression::Constant { .. } => Ok(()),
                ProbExpression::PStar(t) => {
                    if t.joint.is_empty() {
                        return bad("P* term with empty joint".into());
                    }
                    if let Some(v) = t.joint.keys().find(|v| t.intervention.contains_key(*v)) {
                        return bad(format!("`{v}` is both intervened on and observed"));
                    }
                    for (var, s) in t.intervention.iter().chain(&t.joint) {
                        if var.as_str().is_empty() {
                            return bad("empty variable name".into());
                        }
                        match s {
                            ValueSymbol::Literal(v) => {
                                if Value::new(v.as_str()).is_err() {
                                    return bad(format!("invalid value token `{v}`"));
                                }
                            }
                            ValueSymbol::Bound { name, var: bv } => match scope.iter().rev().find(|b| &b.name == name) {
                                None => return Err(Error::UnboundSymbol(name.clone())),
                                Some(b) if &b.var != bv || bv != var => {
                                    return bad(format!("symbol `{name}` of `{}` used as a value of `{var}`", b.var))
                                }
                                Some(_) => {}
                            },
                        }
                    }
                    Ok(())
                }
                ProbExpression::Product { factors } => {
                    if factors.len() < 2 {
                        return bad("product with fewer than two factors".into());
                    }
                    for f in factors {
                        if matches!(f, ProbExpression::Constant { .. }) {
                            return bad("constant inside a product".into());
                        }
                        walk(f, scope)?;
                    }
                    Ok(())
                }
                ProbExpression::SumOver { over, body } => {
                    if over.is_empty() {
                        return bad("sum without binders".into());
                    }
                    let depth = scope.len();
                    scope.extend(over.iter().cloned());
                    let r = walk(body, scope);
                    scope.truncate(depth);
                    r
                }
                ProbExpression::Ratio { numerator, denominator } => {
                    walk(numerator, scope)?;
                    walk(denominator, scope)
                }
            }
        }
        walk(self, &mut Vec::new())
    }
}
