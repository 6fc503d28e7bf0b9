use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use serde::Serialize;

use super::{Assignment, Evidence, Factor, Relation, VarId, Variable};
use crate::error::{Error, Result};

/// Column-sum tolerance for conditional probability tables.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Conditional probability table `P(child | parents)`.
///
/// The table scope is the family in UAI order: parents first, child last.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    child: VarId,
    parents: Vec<VarId>,
    table: Factor,
}

impl Cpt {
    pub fn new(child: VarId, parents: Vec<VarId>, table: Factor) -> Result<Self> {
        let mut family = parents.clone();
        family.push(child);
        if table.scope() != family.as_slice() {
            return Err(Error::InvalidNetwork(format!(
                "CPT of {child} has scope {:?}, expected {family:?}",
                table.scope()
            )));
        }
        Ok(Cpt { child, parents, table })
    }

    /// Builds the table from `prob(child_value, parent_values)`.
    pub fn from_fn(
        child: VarId,
        parents: Vec<VarId>,
        cards: &[usize],
        prob: impl Fn(usize, &[usize]) -> f64,
    ) -> Self {
        let mut family = parents.clone();
        family.push(child);
        let fam_cards: Vec<usize> = family.iter().map(|&v| cards[v]).collect();
        let mut t = Factor::constant(family, fam_cards, 0.0);
        for i in 0..t.len() {
            let a = t.assignment_of(i);
            let (pa, c) = a.split_at(a.len() - 1);
            t.values_mut()[i] = prob(c[0], pa);
        }
        Cpt { child, parents, table: t }
    }

    pub fn child(&self) -> VarId {
        self.child
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn table(&self) -> &Factor {
        &self.table
    }

    /// Family scope `parents ++ [child]`.
    pub fn family(&self) -> &[VarId] {
        self.table.scope()
    }

    pub fn prob(&self, child_value: usize, parent_values: &[usize]) -> f64 {
        let mut a = parent_values.to_vec();
        a.push(child_value);
        self.table.get(&a)
    }

    /// Number of strictly positive entries.
    pub fn positive_rows(&self) -> usize {
        self.table.values().iter().filter(|&&p| p > 0.0).count()
    }

    pub fn child_card(&self) -> usize {
        *self.table.cards().last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Cycle,
    Normalization,
    Negative,
    Scope,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::Cycle => "cycle",
            ViolationKind::Normalization => "normalization",
            ViolationKind::Negative => "negative",
            ViolationKind::Scope => "scope",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub variable: Option<VarId>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// A discrete Bayesian network: variables, and one CPT per variable whose
/// parent lists define the DAG.
///
/// Construction only checks shapes; acyclicity and normalization are
/// reported by [`BayesNetwork::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNetwork {
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
}

impl BayesNetwork {
    pub fn new(variables: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self> {
        for (i, v) in variables.iter().enumerate() {
            if v.id != i {
                return Err(Error::InvalidNetwork(format!("variable ids must be dense; found {} at {i}", v.id)));
            }
            if v.card() == 0 {
                return Err(Error::InvalidNetwork(format!("variable {i} has an empty domain")));
            }
        }
        if cpts.len() != variables.len() {
            return Err(Error::InvalidNetwork(format!(
                "{} CPTs for {} variables",
                cpts.len(),
                variables.len()
            )));
        }
        for (i, cpt) in cpts.iter().enumerate() {
            if cpt.child != i {
                return Err(Error::InvalidNetwork(format!("CPT {i} is for variable {}", cpt.child)));
            }
            for (&v, &c) in cpt.family().iter().zip(cpt.table.cards()) {
                if v >= variables.len() || variables[v].card() != c {
                    return Err(Error::InvalidNetwork(format!(
                        "CPT {i} mentions variable {v} with cardinality {c}"
                    )));
                }
            }
        }
        Ok(BayesNetwork { variables, cpts })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, v: VarId) -> &Variable {
        &self.variables[v]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, v: VarId) -> &Cpt {
        &self.cpts[v]
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn cards(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::card).collect()
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        &self.cpts[v].parents
    }

    pub fn children(&self) -> Vec<Vec<VarId>> {
        let mut out = vec![Vec::new(); self.num_vars()];
        for cpt in &self.cpts {
            for &p in &cpt.parents {
                out[p].push(cpt.child);
            }
        }
        out
    }

    pub fn family_scopes(&self) -> Vec<Vec<VarId>> {
        self.cpts.iter().map(|c| c.family().to_vec()).collect()
    }

    /// Topological order with ties broken by smallest id; `None` if the parent graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<VarId>> {
        let n = self.num_vars();
        let children = self.children();
        let mut indeg: Vec<usize> = self.cpts.iter().map(|c| c.parents.len()).collect();
        let mut heap: BinaryHeap<Reverse<VarId>> = (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(v)) = heap.pop() {
            order.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    heap.push(Reverse(c));
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for cpt in &self.cpts {
            let v = cpt.child;
            let mut seen = cpt.parents.clone();
            seen.sort_unstable();
            if seen.windows(2).any(|w| w[0] == w[1]) || cpt.parents.contains(&v) {
                violations.push(Violation {
                    kind: ViolationKind::Scope,
                    variable: Some(v),
                    message: format!("family of {v} repeats a variable"),
                });
            }
            if cpt.table.values().iter().any(|&p| p < 0.0 || p.is_nan()) {
                violations.push(Violation {
                    kind: ViolationKind::Negative,
                    variable: Some(v),
                    message: format!("CPT of {v} has a negative or NaN entry"),
                });
            }
            let k = cpt.child_card();
            for (col, chunk) in cpt.table.values().chunks(k).enumerate() {
                let s: f64 = chunk.iter().sum();
                if (s - 1.0).abs() > NORMALIZATION_TOLERANCE {
                    violations.push(Violation {
                        kind: ViolationKind::Normalization,
                        variable: Some(v),
                        message: format!("CPT of {v}, parent row {col} sums to {s}"),
                    });
                }
            }
        }
        if self.topological_order().is_none() {
            violations.push(Violation {
                kind: ViolationKind::Cycle,
                variable: None,
                message: "the parent graph has a directed cycle".into(),
            });
        }
        ValidationReport { violations }
    }

    /// Product of the CPT entries selected by a full assignment.
    pub fn joint_probability(&self, x: &Assignment) -> Result<f64> {
        if x.len() != self.num_vars() {
            return Err(Error::PartialAssignment(x.len().min(self.num_vars())));
        }
        let full = match x.as_full() {
            Some(f) => f,
            None => return Err(Error::PartialAssignment((0..x.len()).find(|&v| x.get(v).is_none()).unwrap())),
        };
        if let Some(v) = (0..full.len()).find(|&v| full[v] >= self.variables[v].card()) {
            return Err(Error::InvalidNetwork(format!("value {} outside the domain of {v}", full[v])));
        }
        Ok(self.joint_full(&full))
    }

    /// Unchecked variant of [`joint_probability`](Self::joint_probability) for dense full assignments.
    pub fn joint_full(&self, x: &[usize]) -> f64 {
        let mut p = 1.0;
        for cpt in &self.cpts {
            let t = &cpt.table;
            let idx = t.scope().iter().zip(t.cards()).fold(0, |acc, (&v, &c)| acc * c + x[v]);
            p *= t.values()[idx];
            if p == 0.0 {
                break;
            }
        }
        p
    }

    pub fn check_evidence(&self, evidence: &Evidence) -> Result<()> {
        if evidence.is_consistent_with(&self.cards()) {
            Ok(())
        } else {
            Err(Error::InvalidNetwork("evidence value outside its variable's domain".into()))
        }
    }
}

/// Variables with domains plus a list of relations. `current_domains`
/// holds the sorted value indices still allowed for each variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintNetwork {
    variables: Vec<Variable>,
    relations: Vec<Relation>,
    current_domains: Vec<Vec<usize>>,
}

impl ConstraintNetwork {
    pub fn new(variables: Vec<Variable>, relations: Vec<Relation>) -> Result<Self> {
        for (i, v) in variables.iter().enumerate() {
            if v.id != i {
                return Err(Error::InvalidNetwork(format!("variable ids must be dense; found {} at {i}", v.id)));
            }
        }
        for (k, r) in relations.iter().enumerate() {
            for t in r.tuples() {
                for (&v, &x) in r.scope().iter().zip(t) {
                    if v >= variables.len() || x >= variables[v].card() {
                        return Err(Error::InvalidNetwork(format!(
                            "relation {k} has value {x} outside the domain of variable {v}"
                        )));
                    }
                }
            }
        }
        let current_domains = variables.iter().map(|v| (0..v.card()).collect()).collect();
        Ok(ConstraintNetwork { variables, relations, current_domains })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn cards(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::card).collect()
    }

    pub fn current_domains(&self) -> &[Vec<usize>] {
        &self.current_domains
    }

    /// Narrows a domain; values outside the original domain are ignored.
    pub fn restrict_domain(&mut self, var: VarId, values: &[usize]) {
        self.current_domains[var].retain(|x| values.contains(x));
    }

    pub fn set_domains(&mut self, domains: Vec<Vec<usize>>) {
        assert_eq!(domains.len(), self.variables.len());
        for (cur, mut new) in self.current_domains.iter_mut().zip(domains) {
            new.sort_unstable();
            new.dedup();
            new.retain(|x| cur.contains(x));
            *cur = new;
        }
    }

    /// True iff the full assignment lies in the current domains and every relation.
    pub fn satisfies(&self, x: &[usize]) -> bool {
        x.iter().zip(&self.current_domains).all(|(v, d)| d.binary_search(v).is_ok())
            && self.relations.iter().all(|r| {
                let t: Vec<usize> = r.scope().iter().map(|&v| x[v]).collect();
                r.contains(&t)
            })
    }

    /// Maximum number of tuples over the relations (the `t` of the convergence bound).
    pub fn max_tuples(&self) -> usize {
        self.relations.iter().map(Relation::len).max().unwrap_or(0)
    }
}
