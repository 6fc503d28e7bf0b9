//! Discrete Bayesian networks, constraint networks and the table types they share.
//!
//! Values of a variable are addressed by their index in the declared domain;
//! the declared order is the linear order used by the Max-closed tests.
//! Tables are dense and indexed in row-major mixed-radix order over their
//! scope (last variable fastest), the same layout the UAI format uses.

use std::collections::BTreeMap;

use serde::Serialize;

mod factor;
mod network;
mod relation;
pub mod uai;

pub use factor::{strides, Factor};
pub(crate) use factor::{strides_into, walk};
pub use network::{BayesNetwork, ConstraintNetwork, Cpt, ValidationReport, Violation, ViolationKind};
pub use relation::Relation;

pub type VarId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub domain: Vec<String>,
}

impl Variable {
    pub fn new(id: VarId, name: impl Into<String>, domain: Vec<String>) -> Self {
        Variable { id, name: name.into(), domain }
    }

    /// Variable whose value labels are `0..card`.
    pub fn indexed(id: VarId, name: impl Into<String>, card: usize) -> Self {
        Variable::new(id, name, (0..card).map(|v| v.to_string()).collect())
    }

    pub fn card(&self) -> usize {
        self.domain.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|d| d == label)
    }
}

/// Observed values, keyed by variable id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Evidence(BTreeMap<VarId, usize>);

impl Evidence {
    pub fn new() -> Self {
        Evidence(BTreeMap::new())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, usize)>) -> Self {
        Evidence(pairs.into_iter().collect())
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn insert(&mut self, var: VarId, value: usize) {
        self.0.insert(var, value);
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.0.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.0.iter().map(|(&v, &x)| (v, x))
    }

    /// True when every observed value lies in its variable's domain.
    pub fn is_consistent_with(&self, cards: &[usize]) -> bool {
        self.iter().all(|(v, x)| v < cards.len() && x < cards[v])
    }
}

/// A possibly partial assignment of values to variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment(Vec<Option<usize>>);

impl Assignment {
    pub fn full(values: Vec<usize>) -> Self {
        Assignment(values.into_iter().map(Some).collect())
    }

    pub fn partial(values: Vec<Option<usize>>) -> Self {
        Assignment(values)
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.0.get(var).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The values as a dense vector if every variable is assigned.
    pub fn as_full(&self) -> Option<Vec<usize>> {
        self.0.iter().copied().collect()
    }

    /// Restriction to the variables of `scope`, in scope order.
    pub fn restrict_to(&self, scope: &[VarId]) -> Option<Vec<usize>> {
        scope.iter().map(|&v| self.get(v)).collect()
    }
}
