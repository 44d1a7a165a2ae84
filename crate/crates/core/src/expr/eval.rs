use std::collections::BTreeMap;

use super::{Binder, PStarTerm, ProbExpression, ValueSymbol};
use crate::error::{Error, Result};
use crate::events::Value;
use crate::graph::Variable;

/// Tabulated experimental distributions.
pub trait PStarSource {
    /// Values of `var`, in a fixed order.
    fn domain(&self, var: &Variable) -> Result<&[Value]>;

    /// `P_x(y)`. Fails with [`Error::MissingTable`] when no table for the
    /// intervention exists.
    fn prob(&self, intervention: &BTreeMap<Variable, Value>, joint: &BTreeMap<Variable, Value>) -> Result<f64>;
}

/// Evaluates `e`, taking the values of free bound symbols from `binding`.
pub fn evaluate<S: PStarSource + ?Sized>(e: &ProbExpression, src: &S, binding: &BTreeMap<String, Value>) -> Result<f64> {
    let mut env: Vec<(&str, Value)> = binding.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    eval(e, src, &mut env)
}

fn lookup(env: &[(&str, Value)], s: &ValueSymbol) -> Result<Value> {
    match s {
        ValueSymbol::Literal(v) => Ok(v.clone()),
        ValueSymbol::Bound { name, .. } => env
            .iter()
            .rev()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::UnboundSymbol(name.clone())),
    }
}

fn eval_term<S: PStarSource + ?Sized>(t: &PStarTerm, src: &S, env: &[(&str, Value)]) -> Result<f64> {
    let resolve = |m: &BTreeMap<Variable, ValueSymbol>| -> Result<BTreeMap<Variable, Value>> {
        m.iter().map(|(k, s)| Ok((k.clone(), lookup(env, s)?))).collect()
    };
    src.prob(&resolve(&t.intervention)?, &resolve(&t.joint)?)
}

fn eval<'a, S: PStarSource + ?Sized>(e: &'a ProbExpression, src: &S, env: &mut Vec<(&'a str, Value)>) -> Result<f64> {
    match e {
        ProbExpression::Constant { value } => Ok(f64::from(*value)),
        ProbExpression::PStar(t) => eval_term(t, src, env),
        ProbExpression::Product { factors } => {
            let mut acc = 1.0;
            for f in factors {
                acc *= eval(f, src, env)?;
            }
            Ok(acc)
        }
        ProbExpression::SumOver { over, body } => sum(over, body, src, env),
        ProbExpression::Ratio { numerator, denominator } => {
            let den = eval(denominator, src, env)?;
            if den == 0.0 {
                return Err(Error::ZeroDenominator);
            }
            Ok(eval(numerator, src, env)? / den)
        }
    }
}

fn sum<'a, S: PStarSource + ?Sized>(over: &'a [Binder], body: &'a ProbExpression, src: &S, env: &mut Vec<(&'a str, Value)>) -> Result<f64> {
    let Some((first, rest)) = over.split_first() else {
        return eval(body, src, env);
    };
    let mut acc = 0.0;
    for v in src.domain(&first.var)? {
        env.push((first.name.as_str(), v.clone()));
        let r = sum(rest, body, src, env);
        env.pop();
        acc += r?;
    }
    Ok(acc)
}
