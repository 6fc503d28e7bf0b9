//! Exact posteriors: exhaustive enumeration and variable elimination.
//!
//! Elimination builds the bucket tree of the chosen order and calibrates it
//! with one pass toward the roots and one back, so every family and variable
//! marginal comes out of a single run.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{walk, BayesNetwork, Evidence, Factor, VarId};

/// Largest joint enumerated by [`brute_force_posteriors`].
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;
/// Largest intermediate table built by [`variable_elimination`].
pub const TABLE_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, PartialEq)]
pub struct Posteriors {
    /// `variables[v][x] = P(X_v = x | e)`; observed variables are one-hot.
    pub variables: Vec<Vec<f64>>,
    /// `P(F_i | e)` over the full CPT scope of variable `i`.
    pub families: Vec<Factor>,
    /// Natural log of `P(e)`.
    pub log_evidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Exact {
    Posteriors(Posteriors),
    /// `P(e) = 0`.
    ImpossibleEvidence,
}

impl Exact {
    pub fn posteriors(&self) -> Option<&Posteriors> {
        match self {
            Exact::Posteriors(p) => Some(p),
            Exact::ImpossibleEvidence => None,
        }
    }

    pub fn is_impossible(&self) -> bool {
        matches!(self, Exact::ImpossibleEvidence)
    }
}

fn evidence_domains(bn: &BayesNetwork, evidence: &Evidence) -> Vec<Vec<usize>> {
    bn.variables()
        .iter()
        .map(|v| match evidence.get(v.id) {
            Some(x) => vec![x],
            None => (0..v.card()).collect(),
        })
        .collect()
}

/// Sums the joint over every completion of the evidence.
pub fn brute_force_posteriors(bn: &BayesNetwork, evidence: &Evidence) -> Result<Exact> {
    bn.check_evidence(evidence)?;
    let domains = evidence_domains(bn, evidence);
    let size: f64 = domains.iter().map(|d| d.len() as f64).product();
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeGuard { size, limit: BRUTE_FORCE_LIMIT });
    }
    let n = bn.num_vars();
    let cards = bn.cards();
    let mut vars: Vec<Vec<f64>> = cards.iter().map(|&c| vec![0.0; c]).collect();
    let mut fams: Vec<Vec<f64>> = bn.cpts().iter().map(|c| vec![0.0; c.table().len()]).collect();
    let mut total = 0.0;
    let mut x: Vec<usize> = domains.iter().map(|d| d[0]).collect();
    let mut digits = vec![0usize; n];
    let mut fam_idx = vec![0usize; n];
    'outer: loop {
        let mut p = 1.0;
        for (i, c) in bn.cpts().iter().enumerate() {
            let idx = c.family().iter().fold(0, |acc, &v| acc * cards[v] + x[v]);
            fam_idx[i] = idx;
            p *= c.table().values()[idx];
        }
        if p > 0.0 {
            total += p;
            for v in 0..n {
                vars[v][x[v]] += p;
                fams[v][fam_idx[v]] += p;
            }
        }
        let mut k = n;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < domains[k].len() {
                x[k] = domains[k][digits[k]];
                break;
            }
            digits[k] = 0;
            x[k] = domains[k][0];
        }
    }
    if total == 0.0 {
        return Ok(Exact::ImpossibleEvidence);
    }
    for t in vars.iter_mut().chain(fams.iter_mut()) {
        for p in t.iter_mut() {
            *p /= total;
        }
    }
    let families = bn
        .cpts()
        .iter()
        .zip(fams)
        .map(|(c, vals)| Factor::new(c.family().to_vec(), c.table().cards().to_vec(), vals).expect("CPT shape"))
        .collect();
    Ok(Exact::Posteriors(Posteriors { variables: vars, families, log_evidence: total.ln() }))
}

/// Min-degree elimination order over the unobserved variables, ties to the smaller id.
pub fn min_degree_order(bn: &BayesNetwork, evidence: &Evidence) -> Vec<VarId> {
    let mut adj = interaction_graph(bn, evidence);
    let mut alive: BTreeSet<VarId> = (0..bn.num_vars()).filter(|&v| !evidence.contains(v)).collect();
    let mut order = Vec::with_capacity(alive.len());
    while let Some(&v) = alive.iter().min_by_key(|&&v| (adj[v].len(), v)) {
        eliminate(&mut adj, v);
        alive.remove(&v);
        order.push(v);
    }
    order
}

fn interaction_graph(bn: &BayesNetwork, evidence: &Evidence) -> Vec<BTreeSet<VarId>> {
    let mut adj = vec![BTreeSet::new(); bn.num_vars()];
    for c in bn.cpts() {
        let s: Vec<VarId> = c.family().iter().copied().filter(|v| !evidence.contains(*v)).collect();
        for &a in &s {
            for &b in &s {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    adj
}

/// Connects the neighbors of `v` and detaches it; returns the neighbors.
fn eliminate(adj: &mut [BTreeSet<VarId>], v: VarId) -> Vec<VarId> {
    let nb: Vec<VarId> = adj[v].iter().copied().collect();
    for &a in &nb {
        adj[a].remove(&v);
        for &b in &nb {
            if a != b {
                adj[a].insert(b);
            }
        }
    }
    adj[v].clear();
    nb
}

/// Bucket clusters `{v} ∪ later neighbors` for each eliminated variable, in order.
fn buckets(bn: &BayesNetwork, evidence: &Evidence, order: &[VarId]) -> Vec<Vec<VarId>> {
    let mut adj = interaction_graph(bn, evidence);
    order
        .iter()
        .map(|&v| {
            let mut c = vec![v];
            c.extend(eliminate(&mut adj, v));
            c
        })
        .collect()
}

/// Induced width of `order` (largest bucket minus one; 0 for an empty order).
pub fn induced_width(bn: &BayesNetwork, evidence: &Evidence, order: &[VarId]) -> usize {
    buckets(bn, evidence, order).iter().map(|c| c.len() - 1).max().unwrap_or(0)
}

#[derive(Debug, Clone)]
pub struct VeResult {
    pub exact: Exact,
    pub order: Vec<VarId>,
    pub induced_width: usize,
}

fn check_order(bn: &BayesNetwork, evidence: &Evidence, order: &[VarId]) -> Result<Vec<VarId>> {
    let mut seen = vec![false; bn.num_vars()];
    let mut out = Vec::new();
    for &v in order {
        if v >= bn.num_vars() || seen[v] {
            return Err(Error::InvalidParameter(format!("elimination order repeats or exceeds variable {v}")));
        }
        seen[v] = true;
        if !evidence.contains(v) {
            out.push(v);
        }
    }
    if let Some(v) = (0..bn.num_vars()).find(|&v| !seen[v] && !evidence.contains(v)) {
        return Err(Error::InvalidParameter(format!("elimination order misses variable {v}")));
    }
    Ok(out)
}

/// Exact posteriors by elimination along `order` (min-degree when `None`).
///
/// Observed variables may appear in `order`; they are skipped.
pub fn variable_elimination(bn: &BayesNetwork, evidence: &Evidence, order: Option<&[VarId]>) -> Result<VeResult> {
    bn.check_evidence(evidence)?;
    let order = match order {
        Some(o) => check_order(bn, evidence, o)?,
        None => min_degree_order(bn, evidence),
    };
    let cards = bn.cards();
    let clusters = buckets(bn, evidence, &order);
    let induced_width = clusters.iter().map(|c| c.len() - 1).max().unwrap_or(0);
    for c in &clusters {
        let size: f64 = c.iter().map(|&v| cards[v] as f64).product();
        if size > TABLE_LIMIT {
            return Err(Error::WidthGuard { size, limit: TABLE_LIMIT });
        }
    }
    let m = order.len();
    let mut rank = vec![usize::MAX; bn.num_vars()];
    for (k, &v) in order.iter().enumerate() {
        rank[v] = k;
    }
    let parent: Vec<Option<usize>> =
        clusters.iter().map(|c| c[1..].iter().map(|&w| rank[w]).min()).collect();
    let mut children = vec![Vec::new(); m];
    for (k, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(k);
        }
    }

    let mut log_evidence = 0.0;
    let mut potentials: Vec<Factor> =
        clusters.iter().map(|c| Factor::constant(c.clone(), c.iter().map(|&v| cards[v]).collect(), 1.0)).collect();
    // bucket holding each family (None when fully observed)
    let mut home = vec![None; bn.num_vars()];
    for (i, c) in bn.cpts().iter().enumerate() {
        let t = c.table().restrict(evidence);
        match t.scope().iter().map(|&v| rank[v]).min() {
            Some(k) => {
                potentials[k].multiply_in(&t);
                home[i] = Some(k);
            }
            None => {
                let p = t.values()[0];
                if p == 0.0 {
                    return Ok(VeResult { exact: Exact::ImpossibleEvidence, order, induced_width });
                }
                log_evidence += p.ln();
            }
        }
    }

    let sep = |k: usize| clusters[k][1..].to_vec();
    // upward messages, normalized to unit mass
    let mut up: Vec<Option<Factor>> = vec![None; m];
    for k in 0..m {
        let mut t = potentials[k].clone();
        for &c in &children[k] {
            t.multiply_in(up[c].as_ref().expect("children precede parents"));
        }
        let msg = t.marginalize(&sep(k));
        let mut msg = msg;
        let s = msg.sum();
        if s == 0.0 {
            return Ok(VeResult { exact: Exact::ImpossibleEvidence, order, induced_width });
        }
        log_evidence += s.ln();
        msg.normalize();
        up[k] = Some(msg);
    }
    // downward pass from the roots
    let mut down: Vec<Option<Factor>> = vec![None; m];
    let mut beliefs: Vec<Option<Factor>> = vec![None; m];
    for k in (0..m).rev() {
        let mut base = potentials[k].clone();
        if let Some(d) = &down[k] {
            base.multiply_in(d);
        }
        for &c in &children[k] {
            let mut t = base.clone();
            for &o in &children[k] {
                if o != c {
                    t.multiply_in(up[o].as_ref().unwrap());
                }
            }
            let mut msg = t.marginalize(&sep(c));
            msg.normalize();
            down[c] = Some(msg);
        }
        for &c in &children[k] {
            base.multiply_in(up[c].as_ref().unwrap());
        }
        base.normalize();
        beliefs[k] = Some(base);
    }

    let mut variables = Vec::with_capacity(bn.num_vars());
    for v in 0..bn.num_vars() {
        let mut p = vec![0.0; cards[v]];
        match evidence.get(v) {
            Some(x) => p[x] = 1.0,
            None => {
                let b = beliefs[rank[v]].as_ref().unwrap().marginalize(&[v]);
                p.copy_from_slice(b.values());
            }
        }
        variables.push(p);
    }
    let mut families = Vec::with_capacity(bn.num_vars());
    for (i, c) in bn.cpts().iter().enumerate() {
        let full = c.family().to_vec();
        let fcards: Vec<usize> = c.table().cards().to_vec();
        let reduced: Vec<VarId> = full.iter().copied().filter(|v| !evidence.contains(*v)).collect();
        let rt = match home[i] {
            Some(k) => beliefs[k].as_ref().unwrap().marginalize(&reduced),
            None => Factor::scalar(1.0),
        };
        let mut out = Factor::constant(full.clone(), fcards.clone(), 0.0);
        // scatter the reduced table into the slice fixed by the evidence
        let base: usize = {
            let st = crate::model::strides(&fcards);
            full.iter().zip(&st).filter_map(|(&v, &s)| evidence.get(v).map(|x| x * s)).sum()
        };
        let map = crate::model::strides_into(&reduced, &full, &fcards);
        let vals = out.values_mut();
        walk(rt.cards(), &[&map], |idx, offs| vals[base + offs[0]] = rt.values()[idx]);
        families.push(out);
    }
    Ok(VeResult { exact: Exact::Posteriors(Posteriors { variables, families, log_evidence }), order, induced_width })
}
