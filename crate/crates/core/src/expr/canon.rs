//! Canonical forms: flattened products, sums lifted over products, binders
//! renamed `w1, w2, ...` and factors sorted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{Binder, PStarTerm, ProbExpression, ValueSymbol};

/// Up to this many binders in one sum, every naming order is tried.
const EXHAUSTIVE_BINDERS: usize = 6;

pub fn canonicalize(e: &ProbExpression) -> ProbExpression {
    let free = e.free_symbols();
    let fresh = freshen(e, &mut Vec::new(), &mut 0);
    let flat = normalize(&fresh);
    let mut names = NameSupply { next: 1, avoid: &free };
    let named = rename(&flat, &mut names);
    sort_factors(&named)
}

/// Alpha-equivalence and product reordering are ignored.
pub fn structurally_equal(a: &ProbExpression, b: &ProbExpression) -> bool {
    canonicalize(a) == canonicalize(b)
}

const TEMP: char = '#';

/// Gives every binder a unique temporary name so sums can be lifted.
fn freshen(e: &ProbExpression, scope: &mut Vec<(String, String)>, next: &mut usize) -> ProbExpression {
    match e {
        ProbExpression::Constant { .. } => e.clone(),
        ProbExpression::PStar(t) => {
            let map = |m: &BTreeMap<crate::graph::Variable, ValueSymbol>| -> BTreeMap<crate::graph::Variable, ValueSymbol> {
                m.iter()
                    .map(|(k, s)| {
                        let s = match s {
                            ValueSymbol::Bound { name, var } => match scope.iter().rev().find(|(old, _)| old == name) {
                                Some((_, new)) => ValueSymbol::Bound { name: new.clone(), var: var.clone() },
                                None => s.clone(),
                            },
                            lit => lit.clone(),
                        };
                        (k.clone(), s)
                    })
                    .collect()
            };
            ProbExpression::PStar(PStarTerm { intervention: map(&t.intervention), joint: map(&t.joint) })
        }
        ProbExpression::Product { factors } => ProbExpression::Product { factors: factors.iter().map(|f| freshen(f, scope, next)).collect() },
        ProbExpression::SumOver { over, body } => {
            let depth = scope.len();
            let over = over
                .iter()
                .map(|b| {
                    *next += 1;
                    let name = format!("{TEMP}{next}");
                    scope.push((b.name.clone(), name.clone()));
                    Binder { name, var: b.var.clone() }
                })
                .collect();
            let body = freshen(body, scope, next);
            scope.truncate(depth);
            ProbExpression::SumOver { over, body: Box::new(body) }
        }
        ProbExpression::Ratio { numerator, denominator } => {
            ProbExpression::ratio(freshen(numerator, scope, next), freshen(denominator, scope, next))
        }
    }
}

/// Flattens products and sums, drops unit factors, absorbs zero and lifts
/// sums out of products.
fn normalize(e: &ProbExpression) -> ProbExpression {
    match e {
        ProbExpression::Constant { .. } | ProbExpression::PStar(_) => e.clone(),
        ProbExpression::Product { factors } => {
            let mut binders = Vec::new();
            let mut out = Vec::new();
            for f in factors {
                let (bs, inner) = match normalize(f) {
                    ProbExpression::SumOver { over, body } => (over, *body),
                    other => (Vec::new(), other),
                };
                binders.extend(bs);
                match inner {
                    z if z.is_zero() => return ProbExpression::zero(),
                    o if o.is_one() => {}
                    ProbExpression::Product { factors } => out.extend(factors),
                    other => out.push(other),
                }
            }
            ProbExpression::sum_over(binders, ProbExpression::product(out))
        }
        ProbExpression::SumOver { over, body } => match normalize(body) {
            z if z.is_zero() => z,
            ProbExpression::SumOver { over: inner, body } => {
                ProbExpression::sum_over(over.iter().cloned().chain(inner).collect(), *body)
            }
            b => ProbExpression::sum_over(over.clone(), b),
        },
        ProbExpression::Ratio { numerator, denominator } => ProbExpression::ratio(normalize(numerator), normalize(denominator)),
    }
}

struct NameSupply<'a> {
    next: usize,
    avoid: &'a BTreeSet<String>,
}

impl NameSupply<'_> {
    fn take(&mut self) -> String {
        loop {
            let name = format!("w{}", self.next);
            self.next += 1;
            if !self.avoid.contains(&name) {
                return name;
            }
        }
    }
}

/// Ordering key: full rendering with variable names; temporary binder names
/// not in `names` print as `_`.
fn key(e: &ProbExpression, names: &BTreeMap<&str, &str>) -> String {
    let mut out = String::new();
    write_key(e, names, &mut out);
    out
}

fn symbol_key(s: &ValueSymbol, names: &BTreeMap<&str, &str>, out: &mut String) {
    match s {
        ValueSymbol::Literal(v) => write!(out, "'{v}").unwrap(),
        ValueSymbol::Bound { name, .. } => match names.get(name.as_str()) {
            Some(n) => write!(out, "${n}").unwrap(),
            None if name.starts_with(TEMP) => out.push_str("$_"),
            None => write!(out, "${name}").unwrap(),
        },
    }
}

fn write_key(e: &ProbExpression, names: &BTreeMap<&str, &str>, out: &mut String) {
    match e {
        ProbExpression::Constant { value } => write!(out, "{value}").unwrap(),
        ProbExpression::PStar(t) => {
            out.push_str("P[");
            for (k, s) in &t.intervention {
                write!(out, "{k}=").unwrap();
                symbol_key(s, names, out);
                out.push(',');
            }
            out.push_str("](");
            for (k, s) in &t.joint {
                write!(out, "{k}=").unwrap();
                symbol_key(s, names, out);
                out.push(',');
            }
            out.push(')');
        }
        ProbExpression::Product { factors } => {
            let mut keys: Vec<String> = factors.iter().map(|f| key(f, names)).collect();
            keys.sort();
            write!(out, "*({})", keys.join(";")).unwrap();
        }
        ProbExpression::SumOver { over, body } => {
            let mut bs: Vec<String> = over
                .iter()
                .map(|b| {
                    let mut s = format!("{}:", b.var);
                    symbol_key(&ValueSymbol::Bound { name: b.name.clone(), var: b.var.clone() }, names, &mut s);
                    s
                })
                .collect();
            bs.sort();
            write!(out, "sum[{}](", bs.join(",")).unwrap();
            write_key(body, names, out);
            out.push(')');
        }
        ProbExpression::Ratio { numerator, denominator } => {
            out.push_str("ratio(");
            write_key(numerator, names, out);
            out.push('|');
            write_key(denominator, names, out);
            out.push(')');
        }
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

fn rename(e: &ProbExpression, names: &mut NameSupply) -> ProbExpression {
    match e {
        ProbExpression::Constant { .. } | ProbExpression::PStar(_) => e.clone(),
        ProbExpression::SumOver { over, body } => {
            let fresh: Vec<String> = over.iter().map(|_| names.take()).collect();
            let orders = if over.len() <= EXHAUSTIVE_BINDERS {
                permutations(over.len())
            } else {
                let mut idx: Vec<usize> = (0..over.len()).collect();
                idx.sort_by(|a, b| over[*a].var.cmp(&over[*b].var));
                vec![idx]
            };
            let assign = |perm: &[usize]| -> BTreeMap<&str, &str> {
                perm.iter().zip(&fresh).map(|(&i, n)| (over[i].name.as_str(), n.as_str())).collect()
            };
            let best = orders.iter().min_by_key(|perm| key(body, &assign(perm))).expect("at least one order");
            let map: BTreeMap<String, ValueSymbol> = best
                .iter()
                .zip(&fresh)
                .map(|(&i, n)| (over[i].name.clone(), ValueSymbol::Bound { name: n.clone(), var: over[i].var.clone() }))
                .collect();
            let binders = best.iter().zip(&fresh).map(|(&i, n)| Binder { name: n.clone(), var: over[i].var.clone() }).collect();
            let body = rename(&body.substitute(&map), names);
            ProbExpression::SumOver { over: binders, body: Box::new(body) }
        }
        ProbExpression::Product { factors } => {
            let empty = BTreeMap::new();
            let mut keyed: Vec<(String, &ProbExpression)> = factors.iter().map(|f| (key(f, &empty), f)).collect();
            keyed.sort_by(|a, b| a.0.cmp(&b.0));
            ProbExpression::Product { factors: keyed.into_iter().map(|(_, f)| rename(f, names)).collect() }
        }
        ProbExpression::Ratio { numerator, denominator } => {
            let n = rename(numerator, names);
            ProbExpression::ratio(n, rename(denominator, names))
        }
    }
}

fn sort_factors(e: &ProbExpression) -> ProbExpression {
    match e {
        ProbExpression::Constant { .. } | ProbExpression::PStar(_) => e.clone(),
        ProbExpression::Product { factors } => {
            let empty = BTreeMap::new();
            let mut fs: Vec<ProbExpression> = factors.iter().map(sort_factors).collect();
            fs.sort_by_cached_key(|f| key(f, &empty));
            ProbExpression::Product { factors: fs }
        }
        ProbExpression::SumOver { over, body } => ProbExpression::SumOver { over: over.clone(), body: Box::new(sort_factors(body)) },
        ProbExpression::Ratio { numerator, denominator } => ProbExpression::ratio(sort_factors(numerator), sort_factors(denominator)),
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{binder, bound, golden, lit, p};
    use super::super::render_text;
    use super::*;

    #[test]
    fn unit_elimination() {
        let py = p(&[("X", lit("x"))], &[("Y", lit("y"))]);
        let e = ProbExpression::Product { factors: vec![py.clone(), ProbExpression::one()] };
        assert_eq!(canonicalize(&e), py);
        let z = ProbExpression::Product { factors: vec![py.clone(), ProbExpression::zero()] };
        assert_eq!(canonicalize(&z), ProbExpression::zero());
    }

    #[test]
    fn alpha_equivalence() {
        assert_eq!(canonicalize(&golden("w")), canonicalize(&golden("v")));
        assert_eq!(render_text(&canonicalize(&golden("v"))), "sum_{w1} P[w1,z](x', y) * P[x](w1)");
    }

    #[test]
    fn factor_order_is_irrelevant() {
        let ProbExpression::SumOver { over, body } = golden("w") else { unreachable!() };
        let ProbExpression::Product { mut factors } = *body else { unreachable!() };
        factors.reverse();
        let swapped = ProbExpression::SumOver { over, body: Box::new(ProbExpression::Product { factors }) };
        assert!(structurally_equal(&swapped, &golden("w")));
        assert!(!structurally_equal(&p(&[("X", lit("x"))], &[("Y", lit("y"))]), &p(&[("X", lit("x'"))], &[("Y", lit("y"))])));
    }

    #[test]
    fn nested_sums_are_lifted() {
        let inner = ProbExpression::sum_over(vec![binder("b", "B")], p(&[], &[("B", bound("b", "B")), ("Y", lit("y"))]));
        let e = ProbExpression::sum_over(
            vec![binder("a", "A")],
            ProbExpression::product(vec![p(&[], &[("A", bound("a", "A"))]), inner]),
        );
        let c = canonicalize(&e);
        let ProbExpression::SumOver { over, body } = &c else { panic!("{c:?}") };
        assert_eq!(over.len(), 2);
        assert!(matches!(**body, ProbExpression::Product { .. }));
        assert!(c.validate().is_ok());
        assert_eq!(canonicalize(&c), c);
    }

    #[test]
    fn binder_choice_does_not_depend_on_input_names() {
        let mk = |a: &str, b: &str| {
            ProbExpression::sum_over(
                vec![binder(a, "A"), binder(b, "B")],
                ProbExpression::product(vec![
                    p(&[("A", bound(a, "A"))], &[("B", bound(b, "B"))]),
                    p(&[], &[("A", bound(a, "A"))]),
                ]),
            )
        };
        assert_eq!(canonicalize(&mk("s", "t")), canonicalize(&mk("t", "s")));
    }

    #[test]
    fn free_symbols_are_not_captured() {
        let e = ProbExpression::sum_over(vec![binder("a", "A")], p(&[("W", bound("w1", "W"))], &[("A", bound("a", "A"))]));
        let c = canonicalize(&e);
        assert_eq!(c.free_symbols(), BTreeSet::from(["w1".to_string()]));
        assert_eq!(c.binders()[0].name, "w2");
    }
}
