//! Iterative belief propagation over arc-labeled dual join-graphs.
//!
//! Each node multiplies its (evidence-restricted) functions with the
//! messages of all neighbors but the recipient and sums out whatever the
//! arc label does not carry. Messages start as all-ones tables and are
//! rescaled to unit mass after every computation; a positive rescaling
//! neither creates nor removes zeros.
//!
//! Alongside every real-valued table the engine keeps its exact support
//! (a 0/1 table propagated with the same products and sums). A belief that
//! is `0.0` in floating point but positive in the support came from
//! underflow rather than from a zero of the input tables.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dualgraph::{DualJoinGraph, Schedule};
use crate::error::{Error, Result};
use crate::model::{BayesNetwork, Evidence, Factor, VarId};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Messages are sent one at a time in schedule order; later messages of
    /// a sweep see earlier ones.
    #[default]
    Sequential,
    /// Every message of an iteration is computed from the previous iteration's messages.
    Synchronous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroProvenance {
    /// Zero in exact arithmetic; traced back to zeros of the input tables.
    Input,
    /// Zero only because the floating-point value underflowed.
    Underflow,
}

impl ZeroProvenance {
    pub fn as_str(self) -> &'static str {
        match self {
            ZeroProvenance::Input => "input",
            ZeroProvenance::Underflow => "underflow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ZeroTag {
    pub first_iteration: usize,
    pub provenance: ZeroProvenance,
}

/// Zero beliefs found so far.
///
/// Family keys are full family assignments in CPT scope order (observed
/// variables carry their observed value). Entries that are already zero in
/// the evidence-restricted CPT are not inferred and are left out. Observed
/// variables are not listed among the variable zeros.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ZeroSet {
    pub families: Vec<BTreeMap<Vec<usize>, ZeroTag>>,
    pub variables: Vec<BTreeMap<usize, ZeroTag>>,
}

impl ZeroSet {
    pub fn len(&self) -> usize {
        self.families.iter().map(BTreeMap::len).sum::<usize>() + self.variables.iter().map(BTreeMap::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(variable, value)` pairs, optionally restricted to one provenance.
    pub fn variable_zeros(&self, provenance: Option<ZeroProvenance>) -> Vec<(VarId, usize)> {
        self.variables
            .iter()
            .enumerate()
            .flat_map(|(v, m)| {
                m.iter()
                    .filter(move |(_, t)| provenance.is_none_or(|p| t.provenance == p))
                    .map(move |(&x, _)| (v, x))
            })
            .collect()
    }

    fn keys(&self) -> (Vec<Vec<Vec<usize>>>, Vec<Vec<usize>>) {
        (
            self.families.iter().map(|m| m.keys().cloned().collect()).collect(),
            self.variables.iter().map(|m| m.keys().copied().collect()).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Belief {
    Distribution(Vec<f64>),
    /// The unnormalized table was identically zero: the evidence is judged impossible here.
    AllZero,
}

impl Belief {
    pub fn is_all_zero(&self) -> bool {
        matches!(self, Belief::AllZero)
    }

    /// The distribution, or zeros of length `len` for the all-zero marker.
    pub fn values_or_zeros(&self, len: usize) -> Vec<f64> {
        match self {
            Belief::Distribution(p) => p.clone(),
            Belief::AllZero => vec![0.0; len],
        }
    }

    fn from_table(values: &[f64]) -> Belief {
        let s: f64 = values.iter().sum();
        if s > 0.0 {
            Belief::Distribution(values.iter().map(|x| x / s).collect())
        } else {
            Belief::AllZero
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyBelief {
    /// Family scope with observed variables removed, in CPT order.
    pub scope: Vec<VarId>,
    pub cards: Vec<usize>,
    pub belief: Belief,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IbpMessage {
    pub from: usize,
    pub to: usize,
    /// Table over the evidence-reduced arc label.
    pub table: Factor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub max_message_change: f64,
    pub zero_count: usize,
    pub new_zeros: usize,
    pub underflow_zeros: usize,
}

#[derive(Debug, Clone)]
pub struct IbpConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub mode: Mode,
    /// Node order; defaults to [`Schedule::topological`].
    pub schedule: Option<Schedule>,
    /// Stop once messages and the zero set are both stable.
    pub stop_on_convergence: bool,
}

impl Default for IbpConfig {
    fn default() -> Self {
        IbpConfig {
            max_iterations: 100,
            tolerance: DEFAULT_TOLERANCE,
            mode: Mode::Sequential,
            schedule: None,
            stop_on_convergence: true,
        }
    }
}

impl IbpConfig {
    pub fn with_iterations(max_iterations: usize) -> Self {
        IbpConfig { max_iterations, ..Default::default() }
    }
}

/// Snapshot after a run.
#[derive(Debug, Clone)]
pub struct IbpState {
    pub messages: Vec<IbpMessage>,
    pub iteration: usize,
    pub zeros: ZeroSet,
    pub family_beliefs: Vec<FamilyBelief>,
    pub variable_beliefs: Vec<Belief>,
    pub log: Vec<IterationLog>,
    /// Largest message change of the last iteration fell below the tolerance.
    pub values_converged: bool,
    /// The last iteration neither added nor removed a zero.
    pub zeros_stable: bool,
    /// Last iteration at which the zero set changed (0 if it never did).
    pub last_zero_change: usize,
}

impl IbpState {
    pub fn variable_belief(&self, v: VarId) -> &Belief {
        &self.variable_beliefs[v]
    }

    pub fn family_belief(&self, f: usize) -> &FamilyBelief {
        &self.family_beliefs[f]
    }

    pub fn zero_set(&self) -> &ZeroSet {
        &self.zeros
    }
}

fn support_of(f: &Factor) -> Factor {
    let mut s = f.clone();
    for x in s.values_mut() {
        *x = if *x > 0.0 { 1.0 } else { 0.0 };
    }
    s
}

fn clamp_support(f: &mut Factor) {
    for x in f.values_mut() {
        if *x > 0.0 {
            *x = 1.0;
        }
    }
}

/// The belief propagation engine for one network, graph and evidence.
#[derive(Debug, Clone)]
pub struct Ibp<'a> {
    bn: &'a BayesNetwork,
    graph: &'a DualJoinGraph,
    evidence: Evidence,
    potentials: Vec<Factor>,
    potential_support: Vec<Factor>,
    /// Evidence-restricted CPTs, to tell inferred zeros from explicit ones.
    restricted: Vec<Factor>,
    /// Indexed by `2 * arc + direction` (direction 0 is `arc.u -> arc.v`).
    messages: Vec<Factor>,
    message_support: Vec<Factor>,
    zeros: ZeroSet,
    iteration: usize,
    last_zero_change: usize,
}

impl<'a> Ibp<'a> {
    /// Applies the evidence to every node and initializes all messages to ones.
    pub fn new(bn: &'a BayesNetwork, graph: &'a DualJoinGraph, evidence: &Evidence) -> Result<Self> {
        bn.check_evidence(evidence)?;
        let scopes = bn.family_scopes();
        if !graph.validate_cluster_join_graph(&scopes) {
            return Err(Error::InvalidGraph(
                "graph fails coverage, labeling or connectedness for this network".into(),
            ));
        }
        let cards = bn.cards();
        let mut potentials = Vec::with_capacity(graph.num_nodes());
        for c in graph.nodes() {
            let scope: Vec<VarId> = c.scope.iter().copied().filter(|v| !evidence.contains(*v)).collect();
            let node_cards = scope.iter().map(|&v| cards[v]).collect();
            let mut p = Factor::constant(scope, node_cards, 1.0);
            for &f in &c.functions {
                p.multiply_in(&bn.cpt(f).table().restrict(evidence));
            }
            potentials.push(p);
        }
        let potential_support = potentials.iter().map(support_of).collect();
        let restricted = bn.cpts().iter().map(|c| c.table().restrict(evidence)).collect();
        let mut messages = Vec::with_capacity(2 * graph.arcs().len());
        for a in graph.arcs() {
            let label: Vec<VarId> = a.label.iter().copied().filter(|v| !evidence.contains(*v)).collect();
            let lc = label.iter().map(|&v| cards[v]).collect::<Vec<_>>();
            let ones = Factor::constant(label, lc, 1.0);
            messages.push(ones.clone());
            messages.push(ones);
        }
        let message_support = messages.clone();
        let zeros = ZeroSet {
            families: vec![BTreeMap::new(); bn.num_vars()],
            variables: vec![BTreeMap::new(); bn.num_vars()],
        };
        Ok(Ibp {
            bn,
            graph,
            evidence: evidence.clone(),
            potentials,
            potential_support,
            restricted,
            messages,
            message_support,
            zeros,
            iteration: 0,
            last_zero_change: 0,
        })
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn graph(&self) -> &DualJoinGraph {
        self.graph
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn zeros(&self) -> &ZeroSet {
        &self.zeros
    }

    fn slot(&self, u: usize, v: usize) -> Result<usize> {
        let k = self.graph.arc_between(u, v).ok_or(Error::NotAdjacent(u, v))?;
        Ok(2 * k + usize::from(self.graph.arcs()[k].u != u))
    }

    /// Current message from `u` to `v`.
    pub fn message(&self, u: usize, v: usize) -> Result<&Factor> {
        Ok(&self.messages[self.slot(u, v)?])
    }

    /// Node `u`'s restricted functions times the incoming messages, excluding `skip`'s.
    fn combine(&self, u: usize, skip: Option<usize>, support: bool) -> Factor {
        let (base, msgs) = if support {
            (&self.potential_support[u], &self.message_support)
        } else {
            (&self.potentials[u], &self.messages)
        };
        let mut t = base.clone();
        for &(w, k) in self.graph.neighbors(u) {
            if Some(w) == skip {
                continue;
            }
            let incoming = 2 * k + usize::from(self.graph.arcs()[k].v != u);
            t.multiply_in(&msgs[incoming]);
            if support {
                clamp_support(&mut t);
            }
        }
        t
    }

    fn compute(&self, u: usize, v: usize) -> Result<(usize, Factor, Factor)> {
        let slot = self.slot(u, v)?;
        let label = self.messages[slot].scope().to_vec();
        let mut m = self.combine(u, Some(v), false).marginalize(&label);
        m.normalize();
        let mut s = self.combine(u, Some(v), true).marginalize(&label);
        clamp_support(&mut s);
        Ok((slot, m, s))
    }

    /// `h_u^v`: sum over `scope(u) - label` of `u`'s functions times the messages from `ne(u) - {v}`.
    pub fn compute_message(&self, u: usize, v: usize) -> Result<IbpMessage> {
        let (_, table, _) = self.compute(u, v)?;
        Ok(IbpMessage { from: u, to: v, table })
    }

    /// Computes and stores `h_u^v`.
    pub fn send(&mut self, u: usize, v: usize) -> Result<()> {
        let (slot, m, s) = self.compute(u, v)?;
        self.messages[slot] = m;
        self.message_support[slot] = s;
        Ok(())
    }

    /// Exact 0/1 support of the current message from `u` to `v`.
    pub fn message_support(&self, u: usize, v: usize) -> Result<&Factor> {
        Ok(&self.message_support[self.slot(u, v)?])
    }

    /// Unnormalized node table: functions times all incoming messages, over the reduced node scope.
    pub fn node_table(&self, u: usize) -> Factor {
        self.combine(u, None, false)
    }

    /// Exact 0/1 support of [`Ibp::node_table`].
    pub fn node_support(&self, u: usize) -> Factor {
        self.combine(u, None, true)
    }

    fn reduced_family(&self, f: usize) -> Vec<VarId> {
        self.bn.cpt(f).family().iter().copied().filter(|v| !self.evidence.contains(*v)).collect()
    }

    fn family_tables(&self, f: usize) -> (Factor, Factor) {
        let u = self.graph.node_of_function(f).expect("every CPT is placed in a node");
        let scope = self.reduced_family(f);
        let t = self.node_table(u).marginalize(&scope);
        let mut s = self.combine(u, None, true).marginalize(&scope);
        clamp_support(&mut s);
        (t, s)
    }

    /// Approximation of `P(F_f | e)` read from the node holding CPT `f`.
    pub fn family_belief(&self, f: usize) -> FamilyBelief {
        let (t, _) = self.family_tables(f);
        FamilyBelief { scope: t.scope().to_vec(), cards: t.cards().to_vec(), belief: Belief::from_table(t.values()) }
    }

    /// Approximation of `P(X_v | e)`; observed variables get their one-hot distribution.
    pub fn variable_belief(&self, v: VarId) -> Belief {
        let card = self.bn.variable(v).card();
        if let Some(x) = self.evidence.get(v) {
            let mut p = vec![0.0; card];
            p[x] = 1.0;
            return Belief::Distribution(p);
        }
        let (t, _) = self.family_tables(v);
        Belief::from_table(t.marginalize(&[v]).values())
    }

    fn full_family_assignment(&self, f: usize, reduced: &Factor, idx: usize) -> Vec<usize> {
        let a = reduced.assignment_of(idx);
        let mut it = a.into_iter();
        self.bn
            .cpt(f)
            .family()
            .iter()
            .map(|&v| self.evidence.get(v).unwrap_or_else(|| it.next().unwrap()))
            .collect()
    }

    /// Recomputes the zero set, tagging new zeros with `iteration`.
    /// Returns `(added, removed)` counts.
    fn refresh_zeros(&mut self, iteration: usize) -> (usize, usize) {
        let (mut added, mut removed) = (0, 0);
        for f in 0..self.bn.num_vars() {
            let (t, s) = self.family_tables(f);
            let mut current = BTreeMap::new();
            for i in 0..t.len() {
                if t.values()[i] == 0.0 && self.restricted[f].values()[i] > 0.0 {
                    let provenance =
                        if s.values()[i] == 0.0 { ZeroProvenance::Input } else { ZeroProvenance::Underflow };
                    current.insert(self.full_family_assignment(f, &t, i), provenance);
                }
            }
            let (a, r) = merge_zeros(&mut self.zeros.families[f], current, iteration);
            added += a;
            removed += r;
            if self.evidence.contains(f) {
                continue;
            }
            let tv = t.marginalize(&[f]);
            let sv = s.marginalize(&[f]);
            let current = (0..tv.len())
                .filter(|&x| tv.values()[x] == 0.0)
                .map(|x| {
                    let p = if sv.values()[x] == 0.0 { ZeroProvenance::Input } else { ZeroProvenance::Underflow };
                    (x, p)
                })
                .collect();
            let (a, r) = merge_zeros(&mut self.zeros.variables[f], current, iteration);
            added += a;
            removed += r;
        }
        (added, removed)
    }

    /// One full iteration; returns the largest absolute message change.
    pub fn iterate(&mut self, schedule: &Schedule, mode: Mode) -> Result<f64> {
        let before = self.messages.clone();
        match mode {
            Mode::Sequential => {
                for (u, v) in schedule.steps(self.graph) {
                    self.send(u, v)?;
                }
            }
            Mode::Synchronous => {
                let mut updates = Vec::with_capacity(self.messages.len());
                for a in self.graph.arcs() {
                    updates.push(self.compute(a.u, a.v)?);
                    updates.push(self.compute(a.v, a.u)?);
                }
                for (slot, m, s) in updates {
                    self.messages[slot] = m;
                    self.message_support[slot] = s;
                }
            }
        }
        self.iteration += 1;
        Ok(before
            .iter()
            .zip(&self.messages)
            .flat_map(|(a, b)| a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }

    pub fn run(&mut self, config: &IbpConfig) -> Result<IbpState> {
        if config.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        let schedule = config.schedule.clone().unwrap_or_else(|| Schedule::topological(self.bn, self.graph));
        let mut log = Vec::new();
        let (mut values_converged, mut zeros_stable) = (false, false);
        for _ in 0..config.max_iterations {
            let change = self.iterate(&schedule, config.mode)?;
            let it = self.iteration;
            let (added, removed) = self.refresh_zeros(it);
            if added + removed > 0 {
                self.last_zero_change = it;
            }
            let underflow = self
                .zeros
                .families
                .iter()
                .flat_map(|m| m.values())
                .chain(self.zeros.variables.iter().flat_map(|m| m.values()))
                .filter(|t| t.provenance == ZeroProvenance::Underflow)
                .count();
            log.push(IterationLog {
                iteration: it,
                max_message_change: change,
                zero_count: self.zeros.len(),
                new_zeros: added,
                underflow_zeros: underflow,
            });
            values_converged = change < config.tolerance;
            zeros_stable = added + removed == 0;
            if config.stop_on_convergence && values_converged && zeros_stable {
                break;
            }
        }
        Ok(self.snapshot(log, values_converged, zeros_stable))
    }

    fn snapshot(&self, log: Vec<IterationLog>, values_converged: bool, zeros_stable: bool) -> IbpState {
        let messages = self
            .graph
            .arcs()
            .iter()
            .enumerate()
            .flat_map(|(k, a)| {
                [
                    IbpMessage { from: a.u, to: a.v, table: self.messages[2 * k].clone() },
                    IbpMessage { from: a.v, to: a.u, table: self.messages[2 * k + 1].clone() },
                ]
            })
            .collect();
        IbpState {
            messages,
            iteration: self.iteration,
            zeros: self.zeros.clone(),
            family_beliefs: (0..self.bn.num_vars()).map(|f| self.family_belief(f)).collect(),
            variable_beliefs: (0..self.bn.num_vars()).map(|v| self.variable_belief(v)).collect(),
            log,
            values_converged,
            zeros_stable,
            last_zero_change: self.last_zero_change,
        }
    }

    /// Zero keys currently present, for monotonicity checks by callers.
    pub fn zero_keys(&self) -> (Vec<Vec<Vec<usize>>>, Vec<Vec<usize>>) {
        self.zeros.keys()
    }
}

/// Merges the zeros observed now into the running set.
///
/// An exact zero can never disappear (support only shrinks); that is
/// asserted. Underflow zeros may come and go and are dropped when they do.
fn merge_zeros<K: Ord + Clone + std::fmt::Debug>(
    set: &mut BTreeMap<K, ZeroTag>,
    current: BTreeMap<K, ZeroProvenance>,
    iteration: usize,
) -> (usize, usize) {
    let mut removed = 0;
    set.retain(|k, tag| {
        let keep = current.contains_key(k);
        assert!(
            keep || tag.provenance == ZeroProvenance::Underflow,
            "exact zero {k:?} (first seen at iteration {}) disappeared",
            tag.first_iteration
        );
        if !keep {
            removed += 1;
        }
        keep
    });
    let mut added = 0;
    for (k, p) in current {
        match set.get_mut(&k) {
            Some(tag) => {
                // an underflow zero whose support later vanished becomes exact
                if p == ZeroProvenance::Input {
                    tag.provenance = p;
                }
            }
            None => {
                set.insert(k, ZeroTag { first_iteration: iteration, provenance: p });
                added += 1;
            }
        }
    }
    (added, removed)
}

/// Runs belief propagation to convergence or `config.max_iterations`.
pub fn run_ibp(bn: &BayesNetwork, graph: &DualJoinGraph, evidence: &Evidence, config: &IbpConfig) -> Result<IbpState> {
    Ibp::new(bn, graph, evidence)?.run(config)
}
