//! Arc-consistency: the binary domain-based form and distributed relational
//! arc-consistency (DR-AC) over dual join-graphs, plus detectors for the
//! Max-closed and implicational classes.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dualgraph::{DualJoinGraph, Schedule};
use crate::error::{Error, Result};
use crate::ibp::Mode;
use crate::model::{ConstraintNetwork, Evidence, Relation, VarId};

/// Which incoming messages a node joins when computing `h_u^v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DracMode {
    /// All neighbors, including the recipient's own message.
    #[default]
    AllNeighbors,
    /// All neighbors except the recipient.
    NoEcho,
}

// ---------------------------------------------------------------- binary AC

/// `D_j^i = π_j(R_ij ⋈ D_i)`: the values of `target` supported by `source_domain` under `r`.
pub fn binary_ac_message(r: &Relation, source: VarId, source_domain: &[usize], target: VarId) -> Vec<usize> {
    let dom = Relation::new(vec![source], source_domain.iter().map(|&x| vec![x]).collect())
        .expect("unary domain relation");
    r.join(&dom).support(target)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinaryAcResult {
    pub domains: Vec<Vec<usize>>,
    /// `(sweep, variable, value)` in removal order.
    pub removed: Vec<(usize, VarId, usize)>,
    pub sweeps: usize,
}

impl BinaryAcResult {
    pub fn is_consistent(&self) -> bool {
        self.domains.iter().all(|d| !d.is_empty())
    }
}

fn check_binary(cn: &ConstraintNetwork) -> Result<()> {
    match cn.relations().iter().position(|r| r.arity() > 2) {
        Some(k) => Err(Error::NonBinary(k)),
        None => Ok(()),
    }
}

/// Repeats `D_i ← D_i ∩ (⋂_j D_j^i)` over all variables until nothing changes.
pub fn run_binary_ac(cn: &ConstraintNetwork) -> Result<BinaryAcResult> {
    check_binary(cn)?;
    let mut domains = cn.current_domains().to_vec();
    let mut removed = Vec::new();
    if cn.relations().iter().any(|r| r.arity() == 0 && r.is_empty()) {
        for (v, d) in domains.iter_mut().enumerate() {
            removed.extend(d.drain(..).map(|x| (0, v, x)));
        }
        return Ok(BinaryAcResult { domains, removed, sweeps: 0 });
    }
    for r in cn.relations().iter().filter(|r| r.arity() == 1) {
        let v = r.scope()[0];
        let allowed = r.support(v);
        for x in std::mem::take(&mut domains[v]) {
            if allowed.binary_search(&x).is_ok() {
                domains[v].push(x);
            } else {
                removed.push((0, v, x));
            }
        }
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); cn.num_vars()];
    for (k, r) in cn.relations().iter().enumerate() {
        if r.arity() == 2 {
            incident[r.scope()[0]].push(k);
            incident[r.scope()[1]].push(k);
        }
    }
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut changed = false;
        for i in 0..cn.num_vars() {
            for &k in &incident[i] {
                let r = &cn.relations()[k];
                let j = if r.scope()[0] == i { r.scope()[1] } else { r.scope()[0] };
                let supported = binary_ac_message(r, j, &domains[j], i);
                for x in std::mem::take(&mut domains[i]) {
                    if supported.binary_search(&x).is_ok() {
                        domains[i].push(x);
                    } else {
                        removed.push((sweeps, i, x));
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(BinaryAcResult { domains, removed, sweeps })
}

// ------------------------------------------------------------------- DR-AC

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelMessage {
    pub from: usize,
    pub to: usize,
    pub relation: Relation,
}

/// Tuples of `r` whose projection onto every message scope lies in that message.
fn semijoin<'m>(r: &Relation, msgs: impl Iterator<Item = &'m Relation>) -> Relation {
    let msgs: Vec<(&Relation, Vec<usize>)> = msgs
        .map(|m| {
            let pos = m
                .scope()
                .iter()
                .map(|v| r.scope().iter().position(|s| s == v).expect("label inside node scope"))
                .collect();
            (m, pos)
        })
        .collect();
    let mut buf = Vec::new();
    let tuples = r
        .tuples()
        .iter()
        .filter(|t| {
            msgs.iter().all(|(m, pos)| {
                buf.clear();
                buf.extend(pos.iter().map(|&p| t[p]));
                m.contains(&buf)
            })
        })
        .cloned()
        .collect();
    Relation::new(r.scope().to_vec(), tuples).expect("subset of a valid relation")
}

/// One DR-AC run over a constraint network laid out on a dual join-graph.
#[derive(Debug, Clone)]
pub struct Drac<'a> {
    graph: &'a DualJoinGraph,
    mode: DracMode,
    domains: Vec<Vec<usize>>,
    evidence: Evidence,
    /// Evidence-restricted join of each node's relations over the reduced node scope.
    originals: Vec<Relation>,
    current: Vec<Relation>,
    messages: Vec<Relation>,
    removed: Vec<BTreeMap<Vec<usize>, usize>>,
    step: usize,
    bound: usize,
}

impl<'a> Drac<'a> {
    pub fn new(cn: &ConstraintNetwork, graph: &'a DualJoinGraph, evidence: &Evidence, mode: DracMode) -> Result<Self> {
        let scopes: Vec<Vec<VarId>> = cn.relations().iter().map(|r| r.scope().to_vec()).collect();
        if !graph.validate_cluster_join_graph(&scopes) {
            return Err(Error::InvalidGraph("graph does not fit the relations of the constraint network".into()));
        }
        if !evidence.is_consistent_with(&cn.cards()) {
            return Err(Error::InvalidNetwork("evidence outside the variable domains".into()));
        }
        let domains = cn.current_domains().to_vec();
        let mut originals = Vec::with_capacity(graph.num_nodes());
        for c in graph.nodes() {
            let scope: Vec<VarId> = c.scope.iter().copied().filter(|v| !evidence.contains(*v)).collect();
            let mut r = Relation::universal(Vec::new(), &[]);
            for &f in &c.functions {
                r = r.join(&cn.relations()[f].filter_domains(&domains).restrict(evidence));
            }
            let r = if r.scope().len() == scope.len() {
                r.project(&scope)
            } else {
                // variables of the scope not mentioned by any (restricted) relation stay free
                let free: Vec<VarId> = scope.iter().copied().filter(|v| !r.scope().contains(v)).collect();
                let fd: Vec<Vec<usize>> = free.iter().map(|&v| domains[v].clone()).collect();
                r.join(&Relation::universal(free, &fd)).project(&scope)
            };
            originals.push(r);
        }
        let mut messages = Vec::with_capacity(2 * graph.arcs().len());
        for a in graph.arcs() {
            let label: Vec<VarId> = a.label.iter().copied().filter(|v| !evidence.contains(*v)).collect();
            let ld: Vec<Vec<usize>> = label.iter().map(|&v| domains[v].clone()).collect();
            let u = Relation::universal(label, &ld);
            messages.push(u.clone());
            messages.push(u);
        }
        Ok(Drac {
            graph,
            mode,
            domains,
            evidence: evidence.clone(),
            current: originals.clone(),
            removed: vec![BTreeMap::new(); originals.len()],
            originals,
            messages,
            step: 0,
            bound: cn.max_tuples() * cn.relations().len(),
        })
    }

    /// The `t·r` sweep bound, with `t` counted before evidence restriction.
    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn step(&self) -> usize {
        self.step
    }

    fn slot(&self, u: usize, v: usize) -> Result<usize> {
        let k = self.graph.arc_between(u, v).ok_or(Error::NotAdjacent(u, v))?;
        Ok(2 * k + usize::from(self.graph.arcs()[k].u != u))
    }

    pub fn message(&self, u: usize, v: usize) -> Result<&Relation> {
        Ok(&self.messages[self.slot(u, v)?])
    }

    fn incoming(&self, u: usize, skip: Option<usize>) -> impl Iterator<Item = &Relation> {
        self.graph.neighbors(u).iter().filter(move |(w, _)| Some(*w) != skip).map(move |&(_, k)| {
            &self.messages[2 * k + usize::from(self.graph.arcs()[k].v != u)]
        })
    }

    /// `h_u^v = π_label(R_u ⋈ incoming)`, with the incoming set chosen by the mode.
    pub fn compute_message(&self, u: usize, v: usize) -> Result<RelMessage> {
        let slot = self.slot(u, v)?;
        let skip = match self.mode {
            DracMode::AllNeighbors => None,
            DracMode::NoEcho => Some(v),
        };
        let joined = semijoin(&self.originals[u], self.incoming(u, skip));
        Ok(RelMessage { from: u, to: v, relation: joined.project(self.messages[slot].scope()) })
    }

    /// Computes and stores `h_u^v`, then refreshes `v`'s relation. Returns whether the message changed.
    pub fn send(&mut self, u: usize, v: usize) -> Result<bool> {
        let m = self.compute_message(u, v)?;
        let slot = self.slot(u, v)?;
        let changed = m.relation != self.messages[slot];
        self.messages[slot] = m.relation;
        self.step += 1;
        self.refresh(v);
        Ok(changed)
    }

    fn refresh(&mut self, u: usize) {
        let now = semijoin(&self.originals[u], self.incoming(u, None));
        for t in self.current[u].tuples() {
            if !now.contains(t) {
                self.removed[u].insert(t.clone(), self.step);
            }
        }
        self.current[u] = now;
    }

    /// Current relation of node `u`: its relation joined with every incoming message.
    pub fn node_relation(&self, u: usize) -> &Relation {
        &self.current[u]
    }

    pub fn original_relation(&self, u: usize) -> &Relation {
        &self.originals[u]
    }

    /// Runs full sweeps until no message changes; the confirming sweep is counted in `iterations`.
    pub fn run(&mut self, schedule: &Schedule, exec: Mode) -> Result<AcState> {
        let mut iterations = 0;
        let mut changing_sweeps = 0;
        loop {
            iterations += 1;
            let changed = match exec {
                Mode::Sequential => {
                    let mut changed = false;
                    for (u, v) in schedule.steps(self.graph) {
                        changed |= self.send(u, v)?;
                    }
                    changed
                }
                Mode::Synchronous => {
                    let mut updates = Vec::new();
                    for a in self.graph.arcs() {
                        updates.push(self.compute_message(a.u, a.v)?);
                        updates.push(self.compute_message(a.v, a.u)?);
                    }
                    let mut changed = false;
                    for m in updates {
                        let slot = self.slot(m.from, m.to)?;
                        changed |= m.relation != self.messages[slot];
                        self.messages[slot] = m.relation;
                        self.step += 1;
                    }
                    for u in 0..self.graph.num_nodes() {
                        self.refresh(u);
                    }
                    changed
                }
            };
            if !changed {
                break;
            }
            changing_sweeps += 1;
            assert!(
                changing_sweeps <= self.bound.max(1),
                "DR-AC still changing after {changing_sweeps} sweeps (bound {})",
                self.bound
            );
        }
        Ok(self.state(iterations, changing_sweeps))
    }

    fn state(&self, iterations: usize, changing_sweeps: usize) -> AcState {
        let messages = self
            .graph
            .arcs()
            .iter()
            .enumerate()
            .flat_map(|(k, a)| {
                [
                    RelMessage { from: a.u, to: a.v, relation: self.messages[2 * k].clone() },
                    RelMessage { from: a.v, to: a.u, relation: self.messages[2 * k + 1].clone() },
                ]
            })
            .collect();
        AcState {
            messages,
            relations: self.current.clone(),
            removed: self.removed.clone(),
            domains: self.induced_domains(),
            iterations,
            changing_sweeps,
            steps: self.step,
            bound: self.bound,
        }
    }

    /// Per-variable values still supported by every node mentioning the variable.
    pub fn induced_domains(&self) -> Vec<Vec<usize>> {
        let mut out = self.domains.clone();
        for (v, d) in out.iter_mut().enumerate() {
            if let Some(x) = self.evidence.get(v) {
                d.retain(|&y| y == x);
            }
        }
        for r in &self.current {
            for &v in r.scope() {
                let s = r.support(v);
                out[v].retain(|x| s.binary_search(x).is_ok());
            }
            if r.is_empty() {
                for &v in r.scope() {
                    out[v].clear();
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcState {
    pub messages: Vec<RelMessage>,
    /// Current relation per node, over the evidence-reduced node scope.
    pub relations: Vec<Relation>,
    /// Per node: removed tuple → step at which it disappeared.
    pub removed: Vec<BTreeMap<Vec<usize>, usize>>,
    pub domains: Vec<Vec<usize>>,
    pub iterations: usize,
    pub changing_sweeps: usize,
    pub steps: usize,
    pub bound: usize,
}

impl AcState {
    pub fn is_consistent(&self) -> bool {
        self.domains.iter().all(|d| !d.is_empty()) && self.relations.iter().all(|r| !r.is_empty())
    }

    /// `(step, node, tuple)` rows ordered by step, then node, then tuple.
    pub fn trace_rows(&self) -> Vec<(usize, usize, Vec<usize>)> {
        let mut rows: Vec<_> = self
            .removed
            .iter()
            .enumerate()
            .flat_map(|(u, m)| m.iter().map(move |(t, &s)| (s, u, t.clone())))
            .collect();
        rows.sort();
        rows
    }
}

/// DR-AC to its fixpoint along `schedule` (by node id when `None`).
pub fn run_drac(
    cn: &ConstraintNetwork,
    graph: &DualJoinGraph,
    evidence: &Evidence,
    mode: DracMode,
    schedule: Option<&Schedule>,
) -> Result<AcState> {
    let mut d = Drac::new(cn, graph, evidence, mode)?;
    let s = schedule.cloned().unwrap_or_else(|| Schedule::by_id(graph));
    d.run(&s, Mode::Sequential)
}

/// Dual graph of the network's relations (full intersection labels).
pub fn dual_graph_of(cn: &ConstraintNetwork) -> DualJoinGraph {
    let scopes: Vec<Vec<VarId>> = cn.relations().iter().map(|r| r.scope().to_vec()).collect();
    DualJoinGraph::build_dual_graph(&scopes)
}

// ------------------------------------------------------ tractable classes

/// Closure under the componentwise maximum of value indices.
pub fn is_max_closed(r: &Relation) -> bool {
    let ts = r.tuples();
    let mut buf = Vec::with_capacity(r.arity());
    for (i, a) in ts.iter().enumerate() {
        for b in &ts[i + 1..] {
            buf.clear();
            buf.extend(a.iter().zip(b).map(|(x, y)| *x.max(y)));
            if !r.contains(&buf) {
                return false;
            }
        }
    }
    true
}

pub fn is_network_max_closed(cn: &ConstraintNetwork) -> bool {
    cn.relations().iter().all(is_max_closed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxSolution {
    /// Per-variable maximum of the arc-consistent domains; `None` if a domain emptied.
    pub assignment: Option<Vec<usize>>,
    /// Whether that assignment satisfies every relation.
    pub satisfies: bool,
    pub max_closed: bool,
}

/// Enforces DR-AC on the dual graph and takes the largest remaining value of each variable.
pub fn max_solution(cn: &ConstraintNetwork) -> Result<MaxSolution> {
    let g = dual_graph_of(cn);
    let st = run_drac(cn, &g, &Evidence::new(), DracMode::AllNeighbors, None)?;
    let max_closed = is_network_max_closed(cn);
    if !st.is_consistent() {
        return Ok(MaxSolution { assignment: None, satisfies: false, max_closed });
    }
    let x: Vec<usize> = st.domains.iter().map(|d| *d.last().unwrap()).collect();
    let satisfies = cn.satisfies(&x);
    Ok(MaxSolution { assignment: Some(x), satisfies, max_closed })
}

/// Every value of every constrained variable is compatible with exactly one
/// or with all values of the other variable of each binary constraint.
pub fn is_implicational(cn: &ConstraintNetwork) -> Result<bool> {
    check_binary(cn)?;
    let d = cn.current_domains();
    for r in cn.relations().iter().filter(|r| r.arity() == 2) {
        for (a, b) in [(0, 1), (1, 0)] {
            let (va, vb) = (r.scope()[a], r.scope()[b]);
            for &x in &d[va] {
                let count = d[vb]
                    .iter()
                    .filter(|&&y| {
                        let mut t = [0; 2];
                        t[a] = x;
                        t[b] = y;
                        r.contains(&t)
                    })
                    .count();
                if count != 1 && count != d[vb].len() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variable;

    fn vars(cards: &[usize]) -> Vec<Variable> {
        cards.iter().enumerate().map(|(i, &c)| Variable::indexed(i, format!("V{i}"), c)).collect()
    }

    fn rel(scope: Vec<VarId>, tuples: &[&[usize]]) -> Relation {
        Relation::new(scope, tuples.iter().map(|t| t.to_vec()).collect()).unwrap()
    }

    #[test]
    fn equality_intersects_domains() {
        let eq = rel(vec![0, 1], &[&[0, 0], &[1, 1], &[2, 2]]);
        let di = rel(vec![0], &[&[0], &[1]]);
        let dj = rel(vec![1], &[&[1], &[2]]);
        let cn = ConstraintNetwork::new(vars(&[3, 3]), vec![eq, di, dj]).unwrap();
        let r = run_binary_ac(&cn).unwrap();
        assert_eq!(r.domains, vec![vec![1], vec![1]]);
        let st = run_drac(&cn, &dual_graph_of(&cn), &Evidence::new(), DracMode::NoEcho, None).unwrap();
        assert_eq!(st.domains, r.domains);
    }

    #[test]
    fn not_equal_on_singletons_wipes_out() {
        let ne = rel(vec![0, 1], &[&[0, 1], &[1, 0]]);
        let cn = ConstraintNetwork::new(vars(&[2, 2]), vec![ne, rel(vec![0], &[&[0]]), rel(vec![1], &[&[0]])]).unwrap();
        let r = run_binary_ac(&cn).unwrap();
        assert!(!r.is_consistent());
        let ternary = rel(vec![0, 1, 2], &[&[0, 0, 0]]);
        let cn = ConstraintNetwork::new(vars(&[2, 2, 2]), vec![ternary]).unwrap();
        assert!(matches!(run_binary_ac(&cn), Err(Error::NonBinary(0))));
    }

    #[test]
    fn max_closed_detection() {
        assert!(is_max_closed(&rel(vec![0, 1], &[&[1, 1], &[2, 2]])));
        assert!(!is_max_closed(&rel(vec![0, 1], &[&[1, 2], &[2, 1]])));
        assert!(is_max_closed(&rel(vec![0, 1], &[&[0, 2]])));
    }

    #[test]
    fn implicational_detection() {
        let eq = rel(vec![0, 1], &[&[0, 0], &[1, 1]]);
        assert!(is_implicational(&ConstraintNetwork::new(vars(&[2, 2]), vec![eq]).unwrap()).unwrap());
        let full = Relation::universal(vec![0, 1], &[vec![0, 1], vec![0, 1, 2]]);
        assert!(is_implicational(&ConstraintNetwork::new(vars(&[2, 3]), vec![full]).unwrap()).unwrap());
        let r = rel(vec![0, 1], &[&[0, 0], &[0, 1], &[1, 0]]);
        assert!(!is_implicational(&ConstraintNetwork::new(vars(&[2, 3]), vec![r]).unwrap()).unwrap());
    }

    #[test]
    fn first_messages_are_universal_and_empty_nodes_send_empty() {
        let r = rel(vec![0, 1], &[&[0, 1]]);
        let empty = rel(vec![1, 2], &[]);
        let cn = ConstraintNetwork::new(vars(&[2, 2, 2]), vec![r, empty]).unwrap();
        let g = dual_graph_of(&cn);
        let mut d = Drac::new(&cn, &g, &Evidence::new(), DracMode::NoEcho).unwrap();
        assert_eq!(d.message(0, 1).unwrap().len(), 2);
        assert!(d.compute_message(1, 0).unwrap().relation.is_empty());
        d.send(1, 0).unwrap();
        assert!(d.node_relation(0).is_empty());
        assert_eq!(d.step(), 1);
    }
}
