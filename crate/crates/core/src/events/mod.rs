//! Counterfactual events and conjunctions.
//!
//! A [`CfEvent`] such as `Y[X=x0]=y0` says that `Y`, in the submodel where
//! `X` is forced to `x0`, attains `y0`. Values are opaque tokens; two
//! different tokens always denote different values.

mod parse;

pub use parse::{parse_conjunction, parse_query};

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Variable;

/// Prefix of summation symbols introduced during identification.
pub(crate) const BOUND_SIGIL: char = '$';
/// Prefix of placeholders for unobserved counterfactual-graph nodes.
pub(crate) const FREE_SIGIL: char = '?';

pub(crate) fn is_value_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '.' | '+' | '-')
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Value(String);

impl Value {
    /// A user-facing value token (`y0`, `x'`, `1`, ...).
    pub fn new(token: impl Into<String>) -> Result<Self> {
        let token = token.into();
        if token.is_empty() || !token.chars().all(is_value_char) {
            return Err(Error::QuerySyntax {
                column: 0,
                message: format!("invalid value token `{token}`"),
            });
        }
        Ok(Value(token))
    }

    /// Symbols never collide with parsed tokens.
    pub(crate) fn symbol(token: String) -> Self {
        debug_assert!(token.starts_with([BOUND_SIGIL, FREE_SIGIL]));
        Value(token)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True for summation symbols and unobserved-node placeholders.
    pub fn is_symbolic(&self) -> bool {
        self.0.starts_with([BOUND_SIGIL, FREE_SIGIL])
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::new(s).expect("valid value token")
    }
}

/// A value assignment `do(x)`; also names a world.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Intervention(BTreeMap<Variable, Value>);

impl Intervention {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an assignment, rejecting a variable listed twice.
    pub fn from_pairs<I: IntoIterator<Item = (Variable, Value)>>(pairs: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            if map.insert(k.clone(), v).is_some() {
                return Err(Error::DuplicateSubscript { var: k.to_string() });
            }
        }
        Ok(Intervention(map))
    }

    pub fn get(&self, v: &Variable) -> Option<&Value> {
        self.0.get(v)
    }

    pub fn contains(&self, v: &Variable) -> bool {
        self.0.contains_key(v)
    }

    pub fn insert(&mut self, var: Variable, value: Value) -> Option<Value> {
        self.0.insert(var, value)
    }

    pub fn remove(&mut self, var: &Variable) -> Option<Value> {
        self.0.remove(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Value)> {
        self.0.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Variable> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_map(&self) -> &BTreeMap<Variable, Value> {
        &self.0
    }

    /// Keeps only the listed variables.
    pub fn restricted_to(&self, keep: &BTreeSet<Variable>) -> Intervention {
        Intervention(self.0.iter().filter(|(k, _)| keep.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect())
    }

    /// `X=x0,Z=z0`
    pub fn serialize(&self) -> String {
        self.to_string()
    }

    fn serialized_chars(&self) -> impl Iterator<Item = char> + '_ {
        self.0.iter().enumerate().flat_map(|(i, (k, v))| {
            let sep = if i == 0 { None } else { Some(',') };
            sep.into_iter().chain(k.as_str().chars()).chain(std::iter::once('=')).chain(v.as_str().chars())
        })
    }
}

impl fmt::Display for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Ordered by serialized form.
impl Ord for Intervention {
    fn cmp(&self, other: &Self) -> Ordering {
        self.serialized_chars().cmp(other.serialized_chars())
    }
}

impl PartialOrd for Intervention {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromIterator<(Variable, Value)> for Intervention {
    /// Later duplicates overwrite earlier ones; use [`Intervention::from_pairs`]
    /// to reject them.
    fn from_iter<T: IntoIterator<Item = (Variable, Value)>>(iter: T) -> Self {
        Intervention(iter.into_iter().collect())
    }
}

/// `Y_x`: a variable as it behaves under the subscript intervention.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CfVariable {
    pub base: Variable,
    pub subscript: Intervention,
}

impl CfVariable {
    pub fn new(base: Variable, subscript: Intervention) -> Self {
        CfVariable { base, subscript }
    }

    pub fn actual(base: Variable) -> Self {
        CfVariable { base, subscript: Intervention::new() }
    }
}

impl fmt::Display for CfVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.subscript.is_empty() {
            write!(f, "{}", self.base)
        } else {
            write!(f, "{}[{}]", self.base, self.subscript)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CfEvent {
    pub var: CfVariable,
    pub value: Value,
}

impl CfEvent {
    pub fn new(var: CfVariable, value: Value) -> Self {
        CfEvent { var, value }
    }

    pub fn base(&self) -> &Variable {
        &self.var.base
    }

    pub fn subscript(&self) -> &Intervention {
        &self.var.subscript
    }
}

impl fmt::Display for CfEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.var, self.value)
    }
}

/// A conjunction of events, kept sorted and free of duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CfConjunction {
    events: Vec<CfEvent>,
}

/// Sorts and deduplicates.
pub fn canonicalize<I: IntoIterator<Item = CfEvent>>(events: I) -> CfConjunction {
    let mut events: Vec<CfEvent> = events.into_iter().collect();
    events.sort();
    events.dedup();
    CfConjunction { events }
}

impl CfConjunction {
    pub fn new<I: IntoIterator<Item = CfEvent>>(events: I) -> Self {
        canonicalize(events)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn canonicalize(&self) -> Self {
        canonicalize(self.events.iter().cloned())
    }

    pub fn events(&self) -> &[CfEvent] {
        &self.events
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CfEvent> {
        self.events.iter()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn contains(&self, e: &CfEvent) -> bool {
        self.events.binary_search(e).is_ok()
    }

    /// `γ ∧ δ`
    pub fn and(&self, other: &CfConjunction) -> CfConjunction {
        canonicalize(self.events.iter().chain(other.events.iter()).cloned())
    }

    pub fn without(&self, e: &CfEvent) -> CfConjunction {
        CfConjunction { events: self.events.iter().filter(|x| *x != e).cloned().collect() }
    }

    /// The distinct subscripts (worlds) mentioned.
    pub fn worlds(&self) -> BTreeSet<Intervention> {
        self.events.iter().map(|e| e.var.subscript.clone()).collect()
    }

    /// `sub(γ)`: every value each variable is set to in some subscript.
    pub fn sub(&self) -> BTreeMap<Variable, BTreeSet<Value>> {
        let mut out: BTreeMap<Variable, BTreeSet<Value>> = BTreeMap::new();
        for e in &self.events {
            for (k, v) in e.var.subscript.iter() {
                out.entry(k.clone()).or_default().insert(v.clone());
            }
        }
        out
    }

    /// `var(γ)`
    pub fn vars(&self) -> BTreeSet<CfVariable> {
        self.events.iter().map(|e| e.var.clone()).collect()
    }

    /// `ev(γ)`: values set or observed, per base variable.
    pub fn ev(&self) -> BTreeMap<Variable, BTreeSet<Value>> {
        let mut out = self.sub();
        for e in &self.events {
            out.entry(e.var.base.clone()).or_default().insert(e.value.clone());
        }
        out
    }

    /// `val(v)`: the values assigned to a counterfactual variable.
    pub fn val(&self, var: &CfVariable) -> Vec<&Value> {
        self.events.iter().filter(|e| &e.var == var).map(|e| &e.value).collect()
    }

    /// Base variables mentioned anywhere (events and subscripts).
    pub fn base_variables(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        for e in &self.events {
            out.insert(e.var.base.clone());
            out.extend(e.var.subscript.vars().cloned());
        }
        out
    }
}

impl<'a> IntoIterator for &'a CfConjunction {
    type Item = &'a CfEvent;
    type IntoIter = std::slice::Iter<'a, CfEvent>;

    fn into_iter(self) -> Self::IntoIter {
        self.events.iter()
    }
}

impl FromIterator<CfEvent> for CfConjunction {
    fn from_iter<T: IntoIterator<Item = CfEvent>>(iter: T) -> Self {
        canonicalize(iter)
    }
}

impl fmt::Display for CfConjunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.events.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Events whose own variable appears in their subscript.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SelfEvents {
    /// `x_{x'..}` with `x != x'`: probability zero.
    pub contradictions: Vec<CfEvent>,
    /// `x_{x..}`: always true.
    pub tautologies: Vec<CfEvent>,
}

pub fn classify_self_events(c: &CfConjunction) -> SelfEvents {
    let mut out = SelfEvents::default();
    for e in c {
        if let Some(forced) = e.var.subscript.get(&e.var.base) {
            if *forced == e.value {
                out.tautologies.push(e.clone());
            } else {
                out.contradictions.push(e.clone());
            }
        }
    }
    out
}

/// `P(γ | δ)`; `delta` is empty for unconditional queries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub gamma: CfConjunction,
    pub delta: CfConjunction,
}

impl Query {
    pub fn new(gamma: CfConjunction, delta: CfConjunction) -> Self {
        Query { gamma, delta }
    }

    pub fn is_conditional(&self) -> bool {
        !self.delta.is_empty()
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.delta.is_empty() {
            write!(f, "P({})", self.gamma)
        } else {
            write!(f, "P({} | {})", self.gamma, self.delta)
        }
    }
}
