//! Finite structural causal models evaluated by exhaustive enumeration of
//! exogenous states.

mod family;
mod json;
mod parity;
mod random;

pub use family::{c_component_product, ci_gap, factorization_gap, interventional_family, LazyFamily, PStarFamily};
pub use json::{scm_from_json, scm_to_json, SCM_SCHEMA_VERSION};
pub use parity::{parity_pair, ParityPair};
pub use random::{domain_values, random_scm, RandomScmConfig};

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::events::{CfConjunction, Intervention, Value};
use crate::graph::{CausalDiagram, Variable};

/// Largest joint exogenous state space enumerated by default.
pub const DEFAULT_BUDGET: u128 = 1 << 20;

/// An exogenous variable with its distribution and the observables it feeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exogenous {
    pub name: String,
    pub attached: Vec<Variable>,
    pub probs: Vec<BigRational>,
}

/// Function table of one observable. Rows enumerate the parent values
/// (parents sorted by name) followed by the attached exogenous values, each
/// in domain order, last input varying fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mechanism {
    pub parents: Vec<Variable>,
    pub exogenous: Vec<String>,
    pub table: Vec<Value>,
}

#[derive(Debug, Clone)]
pub struct DiscreteScm {
    diagram: CausalDiagram,
    domains: BTreeMap<Variable, Vec<Value>>,
    exogenous: Vec<Exogenous>,
    functions: BTreeMap<Variable, Mechanism>,
    budget: u128,
    c: Compiled,
}

impl PartialEq for DiscreteScm {
    fn eq(&self, other: &Self) -> bool {
        self.diagram == other.diagram
            && self.domains == other.domains
            && self.exogenous == other.exogenous
            && self.functions == other.functions
    }
}

#[derive(Debug, Clone, Copy)]
enum Input {
    Endo(usize),
    Exo(usize),
}

/// Index-based form of the model used during enumeration.
#[derive(Debug, Clone)]
struct Compiled {
    /// Observables in topological order; everything below indexes this.
    order: Vec<Variable>,
    index: BTreeMap<Variable, usize>,
    dom: Vec<usize>,
    inputs: Vec<Vec<(Input, usize)>>,
    tables: Vec<Vec<u8>>,
    exo_sizes: Vec<usize>,
    exo_f64: Vec<Vec<f64>>,
}

impl DiscreteScm {
    /// Builds a model and checks that it matches `diagram`: functions read
    /// exactly the graph parents plus attached exogenous variables, and two
    /// observables share an exogenous variable iff they are joined by a
    /// bidirected edge.
    pub fn new(
        diagram: CausalDiagram,
        domains: BTreeMap<Variable, Vec<Value>>,
        exogenous: Vec<Exogenous>,
        functions: BTreeMap<Variable, Mechanism>,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidModel(m));
        for v in diagram.nodes() {
            let Some(d) = domains.get(v) else { return bad(format!("no domain for `{v}`")) };
            if d.is_empty() || d.len() > 255 {
                return bad(format!("domain of `{v}` must have 1 to 255 values"));
            }
            if d.iter().collect::<BTreeSet<_>>().len() != d.len() {
                return bad(format!("domain of `{v}` repeats a value"));
            }
            if !functions.contains_key(v) {
                return bad(format!("no function for `{v}`"));
            }
        }
        if let Some(v) = domains.keys().chain(functions.keys()).find(|v| !diagram.contains(v)) {
            return bad(format!("`{v}` is not a node of the diagram"));
        }
        let mut names = BTreeSet::new();
        let mut shared: BTreeSet<(Variable, Variable)> = BTreeSet::new();
        for u in &exogenous {
            if !names.insert(u.name.as_str()) {
                return bad(format!("exogenous name `{}` used twice", u.name));
            }
            if u.probs.is_empty() || u.probs.len() > 255 {
                return bad(format!("exogenous `{}` must have 1 to 255 states", u.name));
            }
            if u.probs.iter().any(|p| *p < BigRational::zero()) {
                return bad(format!("exogenous `{}` has a negative probability", u.name));
            }
            if u.probs.iter().sum::<BigRational>() != BigRational::one() {
                return bad(format!("probabilities of `{}` do not sum to 1", u.name));
            }
            if u.attached.is_empty() {
                return bad(format!("exogenous `{}` feeds no observable", u.name));
            }
            for a in &u.attached {
                if !diagram.contains(a) {
                    return bad(format!("exogenous `{}` feeds unknown `{a}`", u.name));
                }
                for b in &u.attached {
                    if a < b {
                        shared.insert((a.clone(), b.clone()));
                    }
                }
            }
        }
        for (a, b) in &shared {
            if !diagram.has_bidirected(a, b) {
                return bad(format!("`{a}` and `{b}` share an exogenous variable but are not joined by <->"));
            }
        }
        for (a, b) in diagram.bidirected_edges() {
            let key = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            if !shared.contains(&key) {
                return bad(format!("`{a} <-> {b}` has no shared exogenous variable"));
            }
        }
        for (v, f) in &functions {
            let parents: Vec<Variable> = diagram.parents(v).cloned().collect::<BTreeSet<_>>().into_iter().collect();
            if f.parents != parents {
                return bad(format!("function of `{v}` must read parents {parents:?} in that order"));
            }
            let attached: Vec<String> = exogenous.iter().filter(|u| u.attached.contains(v)).map(|u| u.name.clone()).collect();
            if f.exogenous != attached {
                return bad(format!("function of `{v}` must read exogenous {attached:?} in that order"));
            }
            let rows: usize = f.parents.iter().map(|p| domains[p].len()).chain(attached.iter().map(|n| {
                exogenous.iter().find(|u| &u.name == n).map_or(1, |u| u.probs.len())
            })).product();
            if f.table.len() != rows {
                return bad(format!("function of `{v}` has {} rows, expected {rows}", f.table.len()));
            }
            if let Some(x) = f.table.iter().find(|x| !domains[v].contains(x)) {
                return bad(format!("function of `{v}` outputs `{x}` outside its domain"));
            }
        }
        let c = compile(&diagram, &domains, &exogenous, &functions);
        Ok(DiscreteScm { diagram, domains, exogenous, functions, budget: DEFAULT_BUDGET, c })
    }

    /// Sets the enumeration budget checked by every query.
    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    pub fn budget(&self) -> u128 {
        self.budget
    }

    pub fn diagram(&self) -> &CausalDiagram {
        &self.diagram
    }

    pub fn domains(&self) -> &BTreeMap<Variable, Vec<Value>> {
        &self.domains
    }

    pub fn domain(&self, v: &Variable) -> Result<&[Value]> {
        self.domains.get(v).map(Vec::as_slice).ok_or_else(|| Error::UnknownVariable(v.to_string()))
    }

    pub fn exogenous(&self) -> &[Exogenous] {
        &self.exogenous
    }

    pub fn functions(&self) -> &BTreeMap<Variable, Mechanism> {
        &self.functions
    }

    /// Number of joint exogenous states.
    pub fn states(&self) -> u128 {
        self.c.exo_sizes.iter().map(|&s| s as u128).product()
    }

    fn check_budget(&self) -> Result<()> {
        let states = self.states();
        if states > self.budget {
            return Err(Error::BudgetExceeded { states, budget: self.budget });
        }
        Ok(())
    }

    fn var_index(&self, v: &Variable) -> Result<usize> {
        self.c.index.get(v).copied().ok_or_else(|| Error::UnknownVariable(v.to_string()))
    }

    fn value_index(&self, v: &Variable, x: &Value) -> Result<u8> {
        let d = self.domain(v)?;
        d.iter()
            .position(|y| y == x)
            .map(|i| i as u8)
            .ok_or_else(|| Error::ValueOutOfDomain { var: v.to_string(), value: x.to_string() })
    }

    /// Intervention as one optional value index per observable.
    fn setting(&self, x: &Intervention) -> Result<Vec<Option<u8>>> {
        let mut s = vec![None; self.c.order.len()];
        for (v, val) in x.iter() {
            s[self.var_index(v)?] = Some(self.value_index(v, val)?);
        }
        Ok(s)
    }

    fn setting_map(&self, x: &BTreeMap<Variable, Value>) -> Result<Vec<Option<u8>>> {
        let mut s = vec![None; self.c.order.len()];
        for (v, val) in x {
            s[self.var_index(v)?] = Some(self.value_index(v, val)?);
        }
        Ok(s)
    }

    /// Calls `f` with every joint exogenous state, in odometer order with the
    /// last exogenous variable fastest.
    fn for_each_state(&self, mut f: impl FnMut(&[usize])) -> Result<()> {
        self.check_budget()?;
        let sizes = &self.c.exo_sizes;
        let mut u = vec![0usize; sizes.len()];
        loop {
            f(&u);
            let mut i = sizes.len();
            loop {
                if i == 0 {
                    return Ok(());
                }
                i -= 1;
                u[i] += 1;
                if u[i] < sizes[i] {
                    break;
                }
                u[i] = 0;
            }
        }
    }

    fn weight(&self, u: &[usize]) -> f64 {
        u.iter().enumerate().map(|(i, &s)| self.c.exo_f64[i][s]).product()
    }

    fn weight_exact(&self, u: &[usize]) -> BigRational {
        u.iter().enumerate().map(|(i, &s)| self.exogenous[i].probs[s].clone()).product()
    }

    /// Values of every observable (topological index) in the submodel
    /// `setting` at exogenous state `u`.
    fn solve(&self, u: &[usize], setting: &[Option<u8>], out: &mut [u8]) {
        for i in 0..self.c.order.len() {
            out[i] = match setting[i] {
                Some(v) => v,
                None => {
                    let mut row = 0;
                    for &(inp, size) in &self.c.inputs[i] {
                        let x = match inp {
                            Input::Endo(j) => out[j] as usize,
                            Input::Exo(k) => u[k],
                        };
                        row = row * size + x;
                    }
                    self.c.tables[i][row]
                }
            };
        }
    }

    /// Solutions of the listed worlds at every exogenous state.
    pub fn enumerate(&self, worlds: &[Intervention]) -> Result<Enumeration<'_>> {
        let settings: Vec<Vec<Option<u8>>> = worlds.iter().map(|w| self.setting(w)).collect::<Result<_>>()?;
        let n = self.c.order.len();
        let mut weights = Vec::new();
        let mut values = Vec::new();
        let mut buf = vec![0u8; n];
        self.for_each_state(|u| {
            weights.push(self.weight(u));
            for s in &settings {
                self.solve(u, s, &mut buf);
                values.extend_from_slice(&buf);
            }
        })?;
        let index = worlds.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(Enumeration { model: self, worlds: index, width: n * worlds.len(), weights, values })
    }

    /// `P(γ)`: total weight of exogenous states under which every event of
    /// `γ` holds in its world.
    pub fn counterfactual_prob(&self, gamma: &CfConjunction) -> Result<f64> {
        let worlds: Vec<Intervention> = gamma.worlds().into_iter().collect();
        self.enumerate(&worlds)?.prob(gamma)
    }

    /// [`Self::counterfactual_prob`] in exact arithmetic.
    pub fn counterfactual_prob_exact(&self, gamma: &CfConjunction) -> Result<BigRational> {
        let checks = self.compile_events(gamma)?;
        let settings: Vec<Vec<Option<u8>>> = checks.worlds.iter().map(|w| self.setting(w)).collect::<Result<_>>()?;
        let n = self.c.order.len();
        let mut buf = vec![0u8; n * settings.len()];
        let mut total = BigRational::zero();
        self.for_each_state(|u| {
            for (i, s) in settings.iter().enumerate() {
                self.solve(u, s, &mut buf[i * n..(i + 1) * n]);
            }
            if checks.events.iter().all(|&(w, v, x)| buf[w * n + v] == x) {
                total += self.weight_exact(u);
            }
        })?;
        Ok(total)
    }

    /// `P(γ | δ)`, or `None` when `P(δ) = 0`.
    pub fn conditional_counterfactual_prob(&self, gamma: &CfConjunction, delta: &CfConjunction) -> Result<Option<f64>> {
        let both = gamma.and(delta);
        let worlds: Vec<Intervention> = both.worlds().into_iter().collect();
        let e = self.enumerate(&worlds)?;
        let den = e.prob(delta)?;
        if den == 0.0 {
            return Ok(None);
        }
        Ok(Some(e.prob(&both)? / den))
    }

    /// Exact `P(γ | δ)`, or `None` when `P(δ) = 0`.
    pub fn conditional_counterfactual_prob_exact(&self, gamma: &CfConjunction, delta: &CfConjunction) -> Result<Option<BigRational>> {
        let den = self.counterfactual_prob_exact(delta)?;
        if den.is_zero() {
            return Ok(None);
        }
        Ok(Some(self.counterfactual_prob_exact(&gamma.and(delta))? / den))
    }

    /// Distribution of all observables in the submodel `do(x)`, as a dense
    /// table indexed in mixed radix over the domain sizes in topological
    /// order.
    fn joint_f64(&self, setting: &[Option<u8>]) -> Result<Vec<f64>> {
        let size = self.joint_size()?;
        let mut table = vec![0.0; size];
        let mut buf = vec![0u8; self.c.order.len()];
        self.for_each_state(|u| {
            self.solve(u, setting, &mut buf);
            table[self.dense_index(&buf)] += self.weight(u);
        })?;
        Ok(table)
    }

    fn joint_exact(&self, setting: &[Option<u8>]) -> Result<BTreeMap<Vec<u8>, BigRational>> {
        let mut table: BTreeMap<Vec<u8>, BigRational> = BTreeMap::new();
        let mut buf = vec![0u8; self.c.order.len()];
        self.for_each_state(|u| {
            self.solve(u, setting, &mut buf);
            *table.entry(buf.clone()).or_insert_with(BigRational::zero) += self.weight_exact(u);
        })?;
        table.retain(|_, p| !p.is_zero());
        Ok(table)
    }

    fn joint_size(&self) -> Result<usize> {
        let size: u128 = self.c.dom.iter().map(|&d| d as u128).product();
        if size > 1 << 24 {
            return Err(Error::BudgetExceeded { states: size, budget: 1 << 24 });
        }
        Ok(size as usize)
    }

    fn dense_index(&self, vals: &[u8]) -> usize {
        vals.iter().zip(&self.c.dom).fold(0, |acc, (&v, &d)| acc * d + v as usize)
    }

    fn compile_events(&self, gamma: &CfConjunction) -> Result<CompiledEvents> {
        let worlds: Vec<Intervention> = gamma.worlds().into_iter().collect();
        let mut events = Vec::new();
        for e in gamma {
            let w = worlds.iter().position(|w| w == e.subscript()).expect("world of an event");
            events.push((w, self.var_index(e.base())?, self.value_index(e.base(), &e.value)?));
        }
        Ok(CompiledEvents { worlds, events })
    }
}

struct CompiledEvents {
    worlds: Vec<Intervention>,
    events: Vec<(usize, usize, u8)>,
}

fn compile(
    diagram: &CausalDiagram,
    domains: &BTreeMap<Variable, Vec<Value>>,
    exogenous: &[Exogenous],
    functions: &BTreeMap<Variable, Mechanism>,
) -> Compiled {
    let order = diagram.topological_order();
    let index: BTreeMap<Variable, usize> = order.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    let exo_index: BTreeMap<&str, usize> = exogenous.iter().enumerate().map(|(i, u)| (u.name.as_str(), i)).collect();
    let mut inputs = Vec::new();
    let mut tables = Vec::new();
    for v in &order {
        let f = &functions[v];
        let mut inp: Vec<(Input, usize)> = f.parents.iter().map(|p| (Input::Endo(index[p]), domains[p].len())).collect();
        inp.extend(f.exogenous.iter().map(|n| {
            let k = exo_index[n.as_str()];
            (Input::Exo(k), exogenous[k].probs.len())
        }));
        inputs.push(inp);
        tables.push(f.table.iter().map(|x| domains[v].iter().position(|y| y == x).expect("validated") as u8).collect());
    }
    Compiled {
        dom: order.iter().map(|v| domains[v].len()).collect(),
        order,
        index,
        inputs,
        tables,
        exo_sizes: exogenous.iter().map(|u| u.probs.len()).collect(),
        exo_f64: exogenous.iter().map(|u| u.probs.iter().map(rational_to_f64).collect()).collect(),
    }
}

/// Nearest double to `r`, also when numerator or denominator overflow.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // fall back through a scaled integer when numerator or denominator overflow
        let scale = BigInt::from(1u64 << 53);
        (r * &scale).to_integer().to_f64().unwrap_or(f64::NAN) / (1u64 << 53) as f64
    })
}

/// Solutions of a fixed set of worlds at every exogenous state, reused
/// across many conjunctions over those worlds.
pub struct Enumeration<'m> {
    model: &'m DiscreteScm,
    worlds: BTreeMap<Intervention, usize>,
    width: usize,
    weights: Vec<f64>,
    values: Vec<u8>,
}

impl Enumeration<'_> {
    /// `P(γ)`; every world of `γ` must be among the enumerated ones.
    pub fn prob(&self, gamma: &CfConjunction) -> Result<f64> {
        let m = self.model;
        let n = m.c.order.len();
        let mut checks = Vec::with_capacity(gamma.len());
        for e in gamma {
            let w = *self
                .worlds
                .get(e.subscript())
                .ok_or_else(|| Error::MissingTable(format!("world {} was not enumerated", e.subscript())))?;
            checks.push(w * n + m.var_index(e.base())?);
            checks.push(m.value_index(e.base(), &e.value)? as usize);
        }
        let mut total = 0.0;
        for (s, w) in self.weights.iter().enumerate() {
            let row = &self.values[s * self.width..(s + 1) * self.width];
            if checks.chunks(2).all(|c| row[c[0]] as usize == c[1]) {
                total += w;
            }
        }
        Ok(total)
    }
}
