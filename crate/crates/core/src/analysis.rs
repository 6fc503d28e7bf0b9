//! Cross-engine verification and error metrics.
//!
//! - [`lockstep_compare`] drives belief propagation and relational
//!   arc-consistency with the same schedule and compares, step by step, the
//!   zero entries of every message and receiving node with the tuples the
//!   relational side has dropped.
//! - [`soundness_audit`] checks propagated zeros against exact posteriors
//!   and reports the zeros propagation never found.
//! - [`interval_error_report`] and [`bit_error_rate`] score approximate beliefs.
//! - [`precision_decay_demo`] shows a belief driven to `0.0` by underflow.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::drac::{Drac, DracMode};
use crate::dualgraph::{DualJoinGraph, Schedule};
use crate::error::{Error, Result};
use crate::flatten::{evidence_relation_index, flatten};
use crate::generators::ex44;
use crate::ibp::{Belief, Ibp, IbpConfig, IbpState, ZeroProvenance};
use crate::model::{BayesNetwork, Evidence, Factor, Relation, VarId};
use crate::oracle::{brute_force_posteriors, variable_elimination, Exact, Posteriors, BRUTE_FORCE_LIMIT};

// ---------------------------------------------------------------- lockstep

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Message,
    Node,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub from: usize,
    pub to: usize,
    /// Zero entries of the IBP message (over the reduced label).
    pub ibp_message_zeros: Vec<Vec<usize>>,
    /// Label tuples missing from the DR-AC message.
    pub drac_message_missing: Vec<Vec<usize>>,
    /// Zero entries of the receiving node's IBP table.
    pub ibp_node_zeros: Vec<Vec<usize>>,
    /// Tuples missing from the receiving node's DR-AC relation.
    pub drac_node_missing: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub step: usize,
    pub from: usize,
    pub to: usize,
    pub target: Target,
    pub ibp_only: Vec<Vec<usize>>,
    pub drac_only: Vec<Vec<usize>>,
    /// Every IBP-only zero is positive in exact arithmetic.
    pub underflow: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Match,
    Mismatch,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub schedule: Vec<(usize, usize)>,
    pub steps: Vec<StepRecord>,
    pub mismatches: Vec<Mismatch>,
    /// Divergences explained entirely by floating-point underflow.
    pub underflow_divergences: Vec<Mismatch>,
    pub sweeps: usize,
    pub verdict: Verdict,
}

fn zero_tuples(f: &Factor) -> Vec<Vec<usize>> {
    f.entries().filter(|(_, p)| *p == 0.0).map(|(a, _)| a).collect()
}

fn missing_tuples(r: &Relation, cards: &[usize]) -> Vec<Vec<usize>> {
    let proto = Factor::constant(r.scope().to_vec(), cards.to_vec(), 0.0);
    proto.entries().map(|(a, _)| a).filter(|a| !r.contains(a)).collect()
}

fn diff(a: &[Vec<usize>], b: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let bs: BTreeSet<&Vec<usize>> = b.iter().collect();
    a.iter().filter(|t| !bs.contains(t)).cloned().collect()
}

/// Flat network of `(bn, e)` on a copy of `graph` in which every evidence
/// relation sits in the node holding its variable's CPT.
pub fn aligned_flat_graph(bn: &BayesNetwork, evidence: &Evidence, graph: &DualJoinGraph) -> Result<DualJoinGraph> {
    let cn = flatten(bn, evidence);
    let scopes: Vec<Vec<VarId>> = cn.relations().iter().map(|r| r.scope().to_vec()).collect();
    let mut extra = Vec::new();
    for (v, _) in evidence.iter() {
        let u = graph
            .node_of_function(v)
            .ok_or_else(|| Error::Misaligned(format!("no node holds the CPT of variable {v}")))?;
        extra.push((u, evidence_relation_index(bn, evidence, v).expect("observed")));
    }
    let flat = graph.with_extra_functions(&scopes, &extra)?;
    let same_nodes = flat.num_nodes() == graph.num_nodes()
        && flat.nodes().iter().zip(graph.nodes()).all(|(a, b)| a.scope == b.scope);
    let same_arcs = flat.arcs() == graph.arcs();
    if !same_nodes || !same_arcs || !flat.validate_cluster_join_graph(&scopes) {
        return Err(Error::Misaligned("flat join-graph does not mirror the Bayesian one".into()));
    }
    Ok(flat)
}

/// Runs both engines in no-echo mode on `schedule` until the relational side
/// completes a sweep without change (at most `t·r + 1` sweeps).
pub fn lockstep_compare(
    bn: &BayesNetwork,
    evidence: &Evidence,
    graph: &DualJoinGraph,
    schedule: &Schedule,
) -> Result<TraceReport> {
    let cn = flatten(bn, evidence);
    let flat_graph = aligned_flat_graph(bn, evidence, graph)?;
    let mut ibp = Ibp::new(bn, graph, evidence)?;
    let mut drac = Drac::new(&cn, &flat_graph, evidence, DracMode::NoEcho)?;
    let cards = bn.cards();
    let sched = schedule.steps(graph);
    let mut steps = Vec::new();
    let mut mismatches = Vec::new();
    let mut underflow_divergences = Vec::new();
    let mut sweeps = 0;
    let cap = drac.bound() + 1;
    loop {
        sweeps += 1;
        let mut changed = false;
        for &(u, v) in &sched {
            ibp.send(u, v)?;
            changed |= drac.send(u, v)?;
            let step = drac.step();
            let rm = drac.message(u, v)?;
            let rc: Vec<usize> = rm.scope().iter().map(|&x| cards[x]).collect();
            let rec = StepRecord {
                step,
                from: u,
                to: v,
                ibp_message_zeros: zero_tuples(ibp.message(u, v)?),
                drac_message_missing: missing_tuples(rm, &rc),
                ibp_node_zeros: zero_tuples(&ibp.node_table(v)),
                drac_node_missing: {
                    let r = drac.node_relation(v);
                    let nc: Vec<usize> = r.scope().iter().map(|&x| cards[x]).collect();
                    missing_tuples(r, &nc)
                },
            };
            let msg_support = zero_tuples(ibp.message_support(u, v)?);
            let node_support = zero_tuples(&ibp.node_support(v));
            for (target, iz, dz, exact) in [
                (Target::Message, &rec.ibp_message_zeros, &rec.drac_message_missing, &msg_support),
                (Target::Node, &rec.ibp_node_zeros, &rec.drac_node_missing, &node_support),
            ] {
                let ibp_only = diff(iz, dz);
                let drac_only = diff(dz, iz);
                if ibp_only.is_empty() && drac_only.is_empty() {
                    continue;
                }
                let underflow = drac_only.is_empty() && diff(&ibp_only, exact).len() == ibp_only.len();
                let m = Mismatch { step, from: u, to: v, target, ibp_only, drac_only, underflow };
                if underflow {
                    underflow_divergences.push(m);
                } else {
                    mismatches.push(m);
                }
            }
            steps.push(rec);
        }
        if !changed || sweeps >= cap {
            break;
        }
    }
    let verdict = if mismatches.is_empty() { Verdict::Match } else { Verdict::Mismatch };
    Ok(TraceReport { schedule: sched, steps, mismatches, underflow_divergences, sweeps, verdict })
}

// ---------------------------------------------------------------- soundness

/// Exact posteriors by enumeration when small enough, otherwise by elimination.
pub fn exact_posteriors(bn: &BayesNetwork, evidence: &Evidence) -> Result<Exact> {
    let size: f64 = bn
        .variables()
        .iter()
        .filter(|v| !evidence.contains(v.id))
        .map(|v| v.card() as f64)
        .product();
    if size <= BRUTE_FORCE_LIMIT {
        brute_force_posteriors(bn, evidence)
    } else {
        Ok(variable_elimination(bn, evidence, None)?.exact)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ZeroItem {
    Variable { var: VarId, value: usize },
    Family { family: usize, tuple: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub item: ZeroItem,
    pub provenance: ZeroProvenance,
    pub exact: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub iterations: usize,
    pub impossible_evidence: bool,
    pub violations: Vec<Violation>,
    pub underflow_zeros: usize,
    /// Exact zeros of unobserved variables that propagation did not find.
    pub variable_gap: Vec<(VarId, usize)>,
    /// Exact family zeros (positive in the CPT) that propagation did not find.
    pub family_gap: Vec<(usize, Vec<usize>)>,
    pub last_zero_change: usize,
    /// Iteration at which the last non-underflow zero appeared.
    pub last_input_zero_change: usize,
    /// `t·r`: most positive entries of a CPT times the number of CPTs.
    pub bound: usize,
}

impl AuditReport {
    pub fn is_sound(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn zeros_settled_in_bound(&self) -> bool {
        self.last_input_zero_change <= self.bound
    }

    pub fn passes(&self) -> bool {
        self.is_sound() && self.zeros_settled_in_bound()
    }
}

/// `t·r` for a network: largest number of positive CPT entries times the number of CPTs.
pub fn zero_bound(bn: &BayesNetwork) -> usize {
    bn.cpts().iter().map(|c| c.positive_rows()).max().unwrap_or(0) * bn.num_vars()
}

fn family_index(f: &Factor, tuple: &[usize]) -> usize {
    f.index_of(tuple)
}

/// Runs propagation for `iterations` full iterations (no early stop) and
/// checks every zero it produced against the exact posteriors. Underflow
/// zeros count as violations only when `strict`.
pub fn soundness_audit(
    bn: &BayesNetwork,
    evidence: &Evidence,
    graph: &DualJoinGraph,
    iterations: usize,
    strict: bool,
) -> Result<AuditReport> {
    let config = IbpConfig { max_iterations: iterations, stop_on_convergence: false, ..Default::default() };
    let mut engine = Ibp::new(bn, graph, evidence)?;
    let state = engine.run(&config)?;
    let exact = exact_posteriors(bn, evidence)?;
    Ok(audit_against(bn, evidence, &state, &exact, strict))
}

/// The audit proper, for callers that already hold both results.
pub fn audit_against(bn: &BayesNetwork, evidence: &Evidence, state: &IbpState, exact: &Exact, strict: bool) -> AuditReport {
    let zeros = &state.zeros;
    let underflow_zeros = zeros
        .families
        .iter()
        .flat_map(|m| m.values())
        .chain(zeros.variables.iter().flat_map(|m| m.values()))
        .filter(|t| t.provenance == ZeroProvenance::Underflow)
        .count();
    let mut report = AuditReport {
        iterations: state.iteration,
        impossible_evidence: exact.is_impossible(),
        violations: Vec::new(),
        underflow_zeros,
        variable_gap: Vec::new(),
        family_gap: Vec::new(),
        last_zero_change: state.last_zero_change,
        last_input_zero_change: zeros
            .families
            .iter()
            .flat_map(|m| m.values())
            .chain(zeros.variables.iter().flat_map(|m| m.values()))
            .filter(|t| t.provenance == ZeroProvenance::Input)
            .map(|t| t.first_iteration)
            .max()
            .unwrap_or(0),
        bound: zero_bound(bn),
    };
    let Some(p) = exact.posteriors() else { return report };
    let counts = |prov: ZeroProvenance| strict || prov == ZeroProvenance::Input;
    for (v, m) in zeros.variables.iter().enumerate() {
        for (&x, tag) in m {
            if counts(tag.provenance) && p.variables[v][x] != 0.0 {
                report.violations.push(Violation {
                    item: ZeroItem::Variable { var: v, value: x },
                    provenance: tag.provenance,
                    exact: p.variables[v][x],
                });
            }
        }
    }
    for (f, m) in zeros.families.iter().enumerate() {
        for (t, tag) in m {
            let e = p.families[f].values()[family_index(&p.families[f], t)];
            if counts(tag.provenance) && e != 0.0 {
                report.violations.push(Violation {
                    item: ZeroItem::Family { family: f, tuple: t.clone() },
                    provenance: tag.provenance,
                    exact: e,
                });
            }
        }
    }
    let (vg, fg) = completeness_gap(bn, evidence, state, p);
    report.variable_gap = vg;
    report.family_gap = fg;
    report
}

/// Exact zeros (variables, and families with positive CPT entry) missing from the propagated zero set.
#[allow(clippy::type_complexity)]
pub fn completeness_gap(
    bn: &BayesNetwork,
    evidence: &Evidence,
    state: &IbpState,
    exact: &Posteriors,
) -> (Vec<(VarId, usize)>, Vec<(usize, Vec<usize>)>) {
    let (vz, fz) = exact_zero_sets(bn, evidence, exact);
    let vg = vz.into_iter().filter(|(v, x)| !state.zeros.variables[*v].contains_key(x)).collect();
    let fg = fz.into_iter().filter(|(f, t)| !state.zeros.families[*f].contains_key(t)).collect();
    (vg, fg)
}

/// Exact zeros in the same form as the propagated zero set: unobserved
/// variable values, and family tuples consistent with the evidence whose CPT
/// entry is positive.
#[allow(clippy::type_complexity)]
pub fn exact_zero_sets(
    bn: &BayesNetwork,
    evidence: &Evidence,
    exact: &Posteriors,
) -> (Vec<(VarId, usize)>, Vec<(usize, Vec<usize>)>) {
    let mut vz = Vec::new();
    for (v, p) in exact.variables.iter().enumerate() {
        if evidence.contains(v) {
            continue;
        }
        vz.extend(p.iter().enumerate().filter(|(_, &q)| q == 0.0).map(|(x, _)| (v, x)));
    }
    let mut fz = Vec::new();
    for (f, table) in exact.families.iter().enumerate() {
        let cpt = bn.cpt(f).table();
        for (t, q) in table.entries() {
            let consistent = table.scope().iter().zip(&t).all(|(&v, &x)| evidence.get(v).is_none_or(|e| e == x));
            if consistent && q == 0.0 && cpt.get(&t) > 0.0 {
                fz.push((f, t));
            }
        }
    }
    (vz, fz)
}

/// Propagated zero set in the same shape as [`exact_zero_sets`], input provenance only.
#[allow(clippy::type_complexity)]
pub fn ibp_zero_sets(state: &IbpState) -> (Vec<(VarId, usize)>, Vec<(usize, Vec<usize>)>) {
    let vz = state.zeros.variable_zeros(Some(ZeroProvenance::Input));
    let fz = state
        .zeros
        .families
        .iter()
        .enumerate()
        .flat_map(|(f, m)| {
            m.iter().filter(|(_, t)| t.provenance == ZeroProvenance::Input).map(move |(k, _)| (f, k.clone()))
        })
        .collect();
    (vz, fz)
}

// ---------------------------------------------------------------- metrics

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalBin {
    pub lo: f64,
    pub hi: f64,
    pub exact_count: usize,
    pub approx_count: usize,
    /// Mean |exact − approx| over entries whose exact belief falls in the bin.
    pub recall_error: Option<f64>,
    /// Mean |exact − approx| over entries whose approximate belief falls in the bin.
    pub precision_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalErrorReport {
    pub bin_width: f64,
    pub bins: Vec<IntervalBin>,
    pub total: usize,
    pub mean_abs_error: f64,
}

impl IntervalErrorReport {
    /// Bins lying inside `[0, 0.5]`, the half shown for symmetric binary problems.
    pub fn lower_half(&self) -> Vec<IntervalBin> {
        self.bins.iter().filter(|b| b.hi <= 0.5 + 1e-12).cloned().collect()
    }
}

fn bin_of(x: f64, n: usize, w: f64) -> usize {
    ((x / w).floor().max(0.0) as usize).min(n - 1)
}

/// Bins `[k·w, (k+1)·w)` over `[0, 1]`; the last bin is closed on the right.
pub fn interval_error_report(exact: &[f64], approx: &[f64], bin_width: f64) -> Result<IntervalErrorReport> {
    if exact.len() != approx.len() {
        return Err(Error::InvalidParameter(format!(
            "exact and approximate beliefs differ in length ({} vs {})",
            exact.len(),
            approx.len()
        )));
    }
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(Error::InvalidParameter(format!("bin width {bin_width} outside (0, 1]")));
    }
    let n = (1.0 / bin_width).round().max(1.0) as usize;
    let mut rs = vec![(0usize, 0.0f64); n];
    let mut ps = vec![(0usize, 0.0f64); n];
    let mut total_err = 0.0;
    for (&e, &a) in exact.iter().zip(approx) {
        let d = (e - a).abs();
        total_err += d;
        let r = &mut rs[bin_of(e, n, bin_width)];
        r.0 += 1;
        r.1 += d;
        let p = &mut ps[bin_of(a, n, bin_width)];
        p.0 += 1;
        p.1 += d;
    }
    let mean = |(c, s): (usize, f64)| if c == 0 { None } else { Some(s / c as f64) };
    let bins = (0..n)
        .map(|k| IntervalBin {
            lo: k as f64 * bin_width,
            hi: if k + 1 == n { 1.0 } else { (k + 1) as f64 * bin_width },
            exact_count: rs[k].0,
            approx_count: ps[k].0,
            recall_error: mean(rs[k]),
            precision_error: mean(ps[k]),
        })
        .collect();
    let total = exact.len();
    Ok(IntervalErrorReport {
        bin_width,
        bins,
        total,
        mean_abs_error: if total == 0 { 0.0 } else { total_err / total as f64 },
    })
}

/// Flattened `(exact, approx)` beliefs over every value of every unobserved
/// variable; an all-zero approximate belief contributes zeros.
pub fn belief_pairs(bn: &BayesNetwork, evidence: &Evidence, exact: &Posteriors, approx: &[Belief]) -> (Vec<f64>, Vec<f64>) {
    let mut e = Vec::new();
    let mut a = Vec::new();
    for (v, b) in approx.iter().enumerate().take(bn.num_vars()) {
        if evidence.contains(v) {
            continue;
        }
        e.extend_from_slice(&exact.variables[v]);
        a.extend(b.values_or_zeros(bn.variable(v).card()));
    }
    (e, a)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitErrorReport {
    pub rate: f64,
    pub errors: usize,
    pub bits: usize,
    /// Bits whose two beliefs were equal and were decided as 0.
    pub ties: usize,
}

/// Fraction of bits whose most probable value differs from `truth`; ties decide 0.
pub fn bit_error_rate(truth: &[usize], beliefs: &[Vec<f64>]) -> Result<BitErrorReport> {
    if truth.len() > beliefs.len() {
        return Err(Error::InvalidParameter("fewer beliefs than transmitted bits".into()));
    }
    let (mut errors, mut ties) = (0, 0);
    for (t, b) in truth.iter().zip(beliefs) {
        if b.len() != 2 {
            return Err(Error::InvalidParameter("bit error rate needs binary variables".into()));
        }
        if b[0] == b[1] {
            ties += 1;
        }
        let decided = usize::from(b[1] > b[0]);
        if decided != *t {
            errors += 1;
        }
    }
    let bits = truth.len();
    Ok(BitErrorReport { rate: if bits == 0 { 0.0 } else { errors as f64 / bits as f64 }, errors, bits, ties })
}

// ------------------------------------------------------ finite precision

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub priors: [f64; 3],
    /// Belief of `X1` after each iteration (index 0 is iteration 1).
    pub beliefs: Vec<Vec<f64>>,
    /// First iteration at which `Bel(X1 = 3)` is exactly `0.0`.
    pub first_zero_iteration: Option<usize>,
    /// `Bel(X1 = 3)` strictly decreased at every iteration until it hit zero.
    pub monotone: bool,
    pub final_belief: Vec<f64>,
    /// Provenance recorded for the zero of `X1 = 3`, if one appeared.
    pub provenance: Option<ZeroProvenance>,
    pub exact: Vec<f64>,
}

/// Runs the three-variable coloring example with evidence all H = 1 and the
/// given priors on every X until `Bel(X1 = 3)` underflows (plus a few
/// settling iterations) or `max_iterations` is reached.
pub fn precision_decay_demo(priors: [f64; 3], max_iterations: usize) -> Result<DecayReport> {
    let (bn, e) = ex44(priors, 0.0);
    let g = DualJoinGraph::singleton_join_graph(&bn);
    let mut engine = Ibp::new(&bn, &g, &e)?;
    let step = IbpConfig { max_iterations: 1, stop_on_convergence: false, ..Default::default() };
    let mut beliefs = Vec::new();
    let mut first_zero = None;
    let mut last = None;
    while beliefs.len() < max_iterations {
        let st = engine.run(&step)?;
        let b = st.variable_belief(0).values_or_zeros(3);
        beliefs.push(b.clone());
        last = Some(st);
        if first_zero.is_none() && b[2] == 0.0 {
            first_zero = Some(beliefs.len());
        }
        if first_zero.is_some_and(|k| beliefs.len() >= k + 5) {
            break;
        }
    }
    let monotone = beliefs.windows(2).all(|w| w[1][2] < w[0][2] || (w[0][2] == 0.0 && w[1][2] == 0.0));
    let provenance = last.as_ref().and_then(|st| st.zeros.variables[0].get(&2).map(|t| t.provenance));
    let exact = match brute_force_posteriors(&bn, &e)? {
        Exact::Posteriors(p) => p.variables[0].clone(),
        Exact::ImpossibleEvidence => vec![0.0; 3],
    };
    Ok(DecayReport {
        priors,
        final_belief: beliefs.last().cloned().unwrap_or_default(),
        beliefs,
        first_zero_iteration: first_zero,
        monotone,
        provenance,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_report_arithmetic() {
        let r = interval_error_report(&[1.0, 0.0], &[0.8, 0.2], 0.5).unwrap();
        assert_eq!(r.bins.len(), 2);
        assert_eq!(r.bins[0].exact_count, 1);
        assert_eq!(r.bins[1].exact_count, 1);
        assert!((r.bins[0].recall_error.unwrap() - 0.2).abs() < 1e-12);
        assert!((r.bins[1].recall_error.unwrap() - 0.2).abs() < 1e-12);
        let same = interval_error_report(&[0.1, 0.9], &[0.1, 0.9], 0.05).unwrap();
        assert_eq!(same.bins.len(), 20);
        assert!(same.bins.iter().all(|b| b.exact_count == b.approx_count));
        assert!(same.bins.iter().filter_map(|b| b.recall_error).all(|e| e == 0.0));
        assert!(interval_error_report(&[0.1], &[], 0.05).is_err());
    }

    #[test]
    fn bit_errors_and_ties() {
        let r = bit_error_rate(&[0, 1, 1], &[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(r.errors, 1);
        assert_eq!(r.ties, 1);
        assert!((r.rate - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn polytree_lockstep_matches() {
        let bn = crate::generators::ex31();
        let g = DualJoinGraph::singleton_join_graph(&bn);
        let s = Schedule::topological(&bn, &g);
        let e = Evidence::from_pairs([(2, 1)]);
        let r = lockstep_compare(&bn, &e, &g, &s).unwrap();
        assert_eq!(r.verdict, Verdict::Match, "{:?}", r.mismatches);
    }

    #[test]
    fn correlated_parents_hide_a_prior_zero() {
        use crate::model::{Cpt, Variable};
        // P1 and P2 copy A; X = 1 only when they differ, so P(X = 1) = 0.
        let cards = [2, 2, 2, 2];
        let vars = (0..4).map(|i| Variable::indexed(i, format!("V{i}"), 2)).collect();
        let cpts = vec![
            Cpt::from_fn(0, vec![], &cards, |_, _| 0.5),
            Cpt::from_fn(1, vec![0], &cards, |c, p| (c == p[0]) as u8 as f64),
            Cpt::from_fn(2, vec![0], &cards, |c, p| (c == p[0]) as u8 as f64),
            Cpt::from_fn(3, vec![1, 2], &cards, |c, p| (c == (p[0] != p[1]) as usize) as u8 as f64),
        ];
        let bn = BayesNetwork::new(vars, cpts).unwrap();
        let e = Evidence::new();
        let g = DualJoinGraph::singleton_join_graph(&bn);
        let st = crate::ibp::run_ibp(&bn, &g, &e, &IbpConfig::default()).unwrap();
        let Exact::Posteriors(p) = brute_force_posteriors(&bn, &e).unwrap() else { panic!() };
        assert_eq!(p.variables[3][1], 0.0);
        let (vg, _) = completeness_gap(&bn, &e, &st, &p);
        assert_eq!(vg, vec![(3, 1)]);
    }
}
