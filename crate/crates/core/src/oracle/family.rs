use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use num_rational::BigRational;

use super::DiscreteScm;
use crate::error::{Error, Result};
use crate::events::{Intervention, Value};
use crate::expr::PStarSource;
use crate::graph::{CausalDiagram, Variable};

/// Exact interventional distributions, one table per intervention. Table
/// rows list the values of the non-intervened observables in name order;
/// rows of probability zero are omitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PStarFamily {
    pub tables: BTreeMap<Intervention, BTreeMap<Vec<Value>, BigRational>>,
}

impl PStarFamily {
    pub fn table(&self, x: &Intervention) -> Option<&BTreeMap<Vec<Value>, BigRational>> {
        self.tables.get(x)
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

/// Tabulates `P_x(v ∖ x)` exactly for every intervention on at most `up_to`
/// variables (all subsets when `None`).
pub fn interventional_family(m: &DiscreteScm, up_to: Option<usize>) -> Result<PStarFamily> {
    let names: Vec<Variable> = m.diagram().nodes().iter().cloned().collect();
    let limit = up_to.unwrap_or(names.len());
    let mut tables = BTreeMap::new();
    for mask in 0u64..(1u64 << names.len()) {
        if mask.count_ones() as usize > limit {
            continue;
        }
        let chosen: Vec<&Variable> = names.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| v).collect();
        let rest: Vec<usize> = names.iter().filter(|v| !chosen.contains(v)).map(|v| m.c.index[v]).collect();
        let sizes: Vec<usize> = chosen.iter().map(|v| m.domains()[*v].len()).collect();
        let mut digits = vec![0usize; chosen.len()];
        loop {
            let x: Intervention = chosen.iter().zip(&digits).map(|(v, &d)| ((*v).clone(), m.domains()[*v][d].clone())).collect();
            let mut table = BTreeMap::new();
            for (row, p) in m.joint_exact(&m.setting(&x)?)? {
                let key: Vec<Value> = rest.iter().map(|&i| m.domains()[&m.c.order[i]][row[i] as usize].clone()).collect();
                table.insert(key, p);
            }
            tables.insert(x, table);
            if !advance(&mut digits, &sizes) {
                break;
            }
        }
    }
    Ok(PStarFamily { tables })
}

/// Odometer step; false once every combination has been visited.
fn advance(digits: &mut [usize], sizes: &[usize]) -> bool {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < sizes[i] {
            return true;
        }
        digits[i] = 0;
    }
    false
}

type Setting = Vec<Option<u8>>;

/// Floating-point experimental family computed on demand. Each
/// intervention's joint is enumerated once and cached.
pub struct LazyFamily<'m> {
    model: &'m DiscreteScm,
    joints: RefCell<HashMap<Setting, Rc<Vec<f64>>>>,
    memo: RefCell<HashMap<(Setting, Setting), f64>>,
}

impl<'m> LazyFamily<'m> {
    pub fn new(model: &'m DiscreteScm) -> Self {
        LazyFamily { model, joints: RefCell::default(), memo: RefCell::default() }
    }

    pub fn model(&self) -> &'m DiscreteScm {
        self.model
    }

    fn joint(&self, setting: &Setting) -> Result<Rc<Vec<f64>>> {
        if let Some(t) = self.joints.borrow().get(setting) {
            return Ok(t.clone());
        }
        let t = Rc::new(self.model.joint_f64(setting)?);
        self.joints.borrow_mut().insert(setting.clone(), t.clone());
        Ok(t)
    }

    fn marginal(&self, setting: &Setting, pattern: &Setting) -> Result<f64> {
        let key = (setting.clone(), pattern.clone());
        if let Some(p) = self.memo.borrow().get(&key) {
            return Ok(*p);
        }
        let table = self.joint(setting)?;
        let dom = &self.model.c.dom;
        let mut digits = vec![0usize; dom.len()];
        let mut total = 0.0;
        for p in table.iter() {
            if pattern.iter().zip(&digits).all(|(want, &d)| want.is_none_or(|w| w as usize == d)) {
                total += p;
            }
            advance(&mut digits, dom);
        }
        self.memo.borrow_mut().insert(key, total);
        Ok(total)
    }
}

impl PStarSource for LazyFamily<'_> {
    fn domain(&self, var: &Variable) -> Result<&[Value]> {
        self.model.domain(var)
    }

    fn prob(&self, intervention: &BTreeMap<Variable, Value>, joint: &BTreeMap<Variable, Value>) -> Result<f64> {
        let setting = self.model.setting_map(intervention)?;
        let pattern = self.model.setting_map(joint)?;
        self.marginal(&setting, &pattern)
    }
}

/// `Π_i P_{v∖s_i}(s_i)` over the c-components `s_i` of the diagram with `x`
/// removed, at the full assignment `x ∪ v`.
pub fn c_component_product<S: PStarSource + ?Sized>(
    src: &S,
    g: &CausalDiagram,
    x: &BTreeMap<Variable, Value>,
    v: &BTreeMap<Variable, Value>,
) -> Result<f64> {
    let rest: BTreeSet<Variable> = g.nodes().iter().filter(|n| !x.contains_key(*n)).cloned().collect();
    let all: BTreeMap<Variable, Value> = x.iter().chain(v.iter()).map(|(k, val)| (k.clone(), val.clone())).collect();
    let mut product = 1.0;
    for s in g.induced(&rest).c_components() {
        let (joint, intervention): (BTreeMap<_, _>, BTreeMap<_, _>) = all.iter().map(|(k, val)| (k.clone(), val.clone())).partition(|(k, _)| s.contains(k));
        product *= src.prob(&intervention, &joint)?;
    }
    Ok(product)
}

/// Largest difference between `P_x(v ∖ x)` and its c-component product over
/// all assignments of the remaining observables.
pub fn factorization_gap(m: &DiscreteScm, x: &Intervention) -> Result<f64> {
    let fam = LazyFamily::new(m);
    let rest: Vec<&Variable> = m.diagram().nodes().iter().filter(|n| !x.contains(n)).collect();
    let sizes: Vec<usize> = rest.iter().map(|v| m.domains()[*v].len()).collect();
    let mut digits = vec![0usize; rest.len()];
    let mut gap: f64 = 0.0;
    loop {
        let v: BTreeMap<Variable, Value> = rest.iter().zip(&digits).map(|(n, &d)| ((*n).clone(), m.domains()[*n][d].clone())).collect();
        let direct = fam.prob(x.as_map(), &v)?;
        let product = c_component_product(&fam, m.diagram(), x.as_map(), &v)?;
        gap = gap.max((direct - product).abs());
        if !advance(&mut digits, &sizes) {
            return Ok(gap);
        }
    }
}

/// Largest `|P(a,b|z) − P(a|z)P(b|z)|` over all strata with `P(z) > 0` in
/// the observational joint.
pub fn ci_gap(m: &DiscreteScm, a: &BTreeSet<Variable>, b: &BTreeSet<Variable>, z: &BTreeSet<Variable>) -> Result<f64> {
    for v in a.iter().chain(b).chain(z) {
        if !m.diagram().contains(v) {
            return Err(Error::UnknownVariable(v.to_string()));
        }
    }
    let table = m.joint_f64(&vec![None; m.c.order.len()])?;
    let idx = |s: &BTreeSet<Variable>| -> Vec<usize> { s.iter().map(|v| m.c.index[v]).collect() };
    let (ia, ib, iz) = (idx(a), idx(b), idx(z));
    type Key = (Vec<usize>, Vec<usize>, Vec<usize>);
    let mut abz: BTreeMap<Key, f64> = BTreeMap::new();
    let mut az: BTreeMap<(Vec<usize>, Vec<usize>), f64> = BTreeMap::new();
    let mut bz: BTreeMap<(Vec<usize>, Vec<usize>), f64> = BTreeMap::new();
    let mut pz: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let dom = &m.c.dom;
    let mut digits = vec![0usize; dom.len()];
    for p in table.iter() {
        let pick = |ix: &[usize]| -> Vec<usize> { ix.iter().map(|&i| digits[i]).collect() };
        let (va, vb, vz) = (pick(&ia), pick(&ib), pick(&iz));
        *abz.entry((va.clone(), vb.clone(), vz.clone())).or_default() += p;
        *az.entry((va, vz.clone())).or_default() += p;
        *bz.entry((vb, vz.clone())).or_default() += p;
        *pz.entry(vz).or_default() += p;
        advance(&mut digits, dom);
    }
    let mut gap: f64 = 0.0;
    for ((va, vb, vz), p) in &abz {
        let w = pz[vz];
        if w > 0.0 {
            let lhs = p / w;
            let rhs = az[&(va.clone(), vz.clone())] / w * (bz[&(vb.clone(), vz.clone())] / w);
            gap = gap.max((lhs - rhs).abs());
        }
    }
    // strata where (a, b) never co-occur still need P(a|z)P(b|z) = 0
    for ((va, vz), pa) in &az {
        for ((vb, vz2), pb) in &bz {
            if vz == vz2 && !abz.contains_key(&(va.clone(), vb.clone(), vz.clone())) {
                let w = pz[vz];
                if w > 0.0 {
                    gap = gap.max(pa / w * (pb / w));
                }
            }
        }
    }
    Ok(gap)
}
