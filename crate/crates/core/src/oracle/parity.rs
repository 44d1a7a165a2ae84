use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::One;

use super::{DiscreteScm, Exogenous, Mechanism};
use crate::error::{Error, Result};
use crate::events::{CfConjunction, CfEvent, CfVariable, Intervention, Value};
use crate::graph::{CausalDiagram, Variable};

/// Two models over the same diagram that agree on every interventional
/// distribution but not on `query`.
#[derive(Debug, Clone)]
pub struct ParityPair {
    pub graph: CausalDiagram,
    /// Every variable is the parity of its inputs.
    pub m1: DiscreteScm,
    /// As `m1`, except `Y` and `Z` ignore `X`.
    pub m2: DiscreteScm,
    /// `Y_{x0} = 1, W1 = 0, ..., Wk = 0, Z_{x1} = 0`, whose total parity is
    /// odd: possible in `m1`, impossible in `m2`.
    pub query: CfConjunction,
}

/// Builds the pair on `X -> Y, X -> Z, Y <-> W1 <-> ... <-> Wk <-> Z` with
/// binary variables and uniform exogenous noise. With `flip`, `Y` is
/// additionally inverted with that probability in both models, which makes
/// every interventional distribution positive.
pub fn parity_pair(k: usize, flip: Option<BigRational>) -> Result<ParityPair> {
    let x = Variable::from("X");
    let y = Variable::from("Y");
    let z = Variable::from("Z");
    let ws: Vec<Variable> = (1..=k).map(|i| Variable::new(format!("W{i}"))).collect::<Result<_>>()?;
    let mut path = vec![y.clone()];
    path.extend(ws.iter().cloned());
    path.push(z.clone());
    let bidirected: Vec<(Variable, Variable)> = path.windows(2).map(|p| (p[0].clone(), p[1].clone())).collect();
    let graph = CausalDiagram::new(
        path.iter().cloned().chain([x.clone()]),
        [(x.clone(), y.clone()), (x.clone(), z.clone())],
        bidirected.iter().cloned(),
    )?;

    let half = BigRational::new(1.into(), 2.into());
    let mut exogenous = vec![Exogenous { name: "U_X".into(), attached: vec![x.clone()], probs: vec![half.clone(), half.clone()] }];
    for (a, b) in &bidirected {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        exogenous.push(Exogenous { name: format!("U_{a}_{b}"), attached: vec![a.clone(), b.clone()], probs: vec![half.clone(), half.clone()] });
    }
    if let Some(eps) = flip {
        if eps <= BigRational::from_integer(0.into()) || eps >= BigRational::one() {
            return Err(Error::InvalidModel(format!("flip probability {eps} must lie strictly between 0 and 1")));
        }
        exogenous.push(Exogenous { name: "U_Y".into(), attached: vec![y.clone()], probs: vec![BigRational::one() - &eps, eps] });
    }

    let bits = || vec![Value::from("0"), Value::from("1")];
    let mut domains: BTreeMap<Variable, Vec<Value>> = path.iter().map(|v| (v.clone(), bits())).collect();
    domains.insert(x.clone(), vec![Value::from("x0"), Value::from("x1")]);

    let model = |ignore_x: bool| -> Result<DiscreteScm> {
        let mut functions = BTreeMap::new();
        for v in graph.nodes() {
            let parents: Vec<Variable> = graph.parents(v).cloned().collect();
            let exo: Vec<&Exogenous> = exogenous.iter().filter(|u| u.attached.contains(v)).collect();
            let sizes: Vec<usize> = parents.iter().map(|_| 2).chain(exo.iter().map(|u| u.probs.len())).collect();
            let rows: usize = sizes.iter().product();
            let mut table = Vec::with_capacity(rows);
            for row in 0..rows {
                // digits of the row, first input most significant
                let mut digits = vec![0usize; sizes.len()];
                let mut r = row;
                for i in (0..sizes.len()).rev() {
                    digits[i] = r % sizes[i];
                    r /= sizes[i];
                }
                let skip = if ignore_x { parents.len() } else { 0 };
                let parity = digits[skip..].iter().sum::<usize>() % 2;
                table.push(domains[v][parity].clone());
            }
            functions.insert(v.clone(), Mechanism { parents, exogenous: exo.iter().map(|u| u.name.clone()).collect(), table });
        }
        DiscreteScm::new(graph.clone(), domains.clone(), exogenous.clone(), functions)
    };

    let at = |v: &Variable, sub: Option<&str>, val: &str| {
        let subscript: Intervention = sub.map(|s| (x.clone(), Value::from(s))).into_iter().collect();
        CfEvent::new(CfVariable::new(v.clone(), subscript), Value::from(val))
    };
    let mut events = vec![at(&y, Some("x0"), "1"), at(&z, Some("x1"), "0")];
    events.extend(ws.iter().map(|w| at(w, None, "0")));
    Ok(ParityPair { m1: model(false)?, m2: model(true)?, graph, query: CfConjunction::new(events) })
}
