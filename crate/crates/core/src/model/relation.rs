use std::collections::HashMap;

use super::{Evidence, VarId};
use crate::error::{Error, Result};

/// A constraint: an ordered scope and the set of allowed tuples over it.
///
/// Tuples are kept sorted lexicographically, which for a fixed scope is the
/// mixed-radix order of the assignments. Every relational operator returns a
/// relation in this normal form, so traces are reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    scope: Vec<VarId>,
    tuples: Vec<Vec<usize>>,
}

impl Relation {
    pub fn new(scope: Vec<VarId>, mut tuples: Vec<Vec<usize>>) -> Result<Self> {
        for (i, v) in scope.iter().enumerate() {
            if scope[..i].contains(v) {
                return Err(Error::InvalidNetwork(format!("variable {v} repeated in relation scope")));
            }
        }
        if let Some(t) = tuples.iter().find(|t| t.len() != scope.len()) {
            return Err(Error::InvalidNetwork(format!(
                "tuple {t:?} does not match scope of arity {}",
                scope.len()
            )));
        }
        tuples.sort_unstable();
        tuples.dedup();
        Ok(Relation { scope, tuples })
    }

    fn normalized(scope: Vec<VarId>, mut tuples: Vec<Vec<usize>>) -> Self {
        tuples.sort_unstable();
        tuples.dedup();
        Relation { scope, tuples }
    }

    /// Every combination of the given per-variable value lists.
    pub fn universal(scope: Vec<VarId>, domains: &[Vec<usize>]) -> Self {
        assert_eq!(scope.len(), domains.len());
        let mut tuples = vec![Vec::with_capacity(scope.len())];
        for dom in domains {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    dom.iter().map(move |&x| {
                        let mut t = t.clone();
                        t.push(x);
                        t
                    })
                })
                .collect();
        }
        Relation::normalized(scope, tuples)
    }

    /// Tuples of the universal relation accepted by `allowed`.
    pub fn from_predicate(scope: Vec<VarId>, domains: &[Vec<usize>], allowed: impl Fn(&[usize]) -> bool) -> Self {
        let mut r = Relation::universal(scope, domains);
        r.tuples.retain(|t| allowed(t));
        r
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    pub fn contains(&self, tuple: &[usize]) -> bool {
        self.tuples.binary_search_by(|t| t.as_slice().cmp(tuple)).is_ok()
    }

    /// Natural join; the result scope is `self`'s scope followed by the new variables of `other`.
    pub fn join(&self, other: &Relation) -> Relation {
        let shared: Vec<(usize, usize)> = self
            .scope
            .iter()
            .enumerate()
            .filter_map(|(i, v)| other.scope.iter().position(|w| w == v).map(|j| (i, j)))
            .collect();
        let extra: Vec<usize> = (0..other.scope.len())
            .filter(|j| !shared.iter().any(|&(_, s)| s == *j))
            .collect();
        let mut index: HashMap<Vec<usize>, Vec<Vec<usize>>> = HashMap::new();
        for t in &other.tuples {
            let key: Vec<usize> = shared.iter().map(|&(_, j)| t[j]).collect();
            index.entry(key).or_default().push(extra.iter().map(|&j| t[j]).collect());
        }
        let mut scope = self.scope.clone();
        scope.extend(extra.iter().map(|&j| other.scope[j]));
        let mut tuples = Vec::new();
        for t in &self.tuples {
            let key: Vec<usize> = shared.iter().map(|&(i, _)| t[i]).collect();
            if let Some(rest) = index.get(&key) {
                for r in rest {
                    let mut joined = t.clone();
                    joined.extend_from_slice(r);
                    tuples.push(joined);
                }
            }
        }
        Relation::normalized(scope, tuples)
    }

    /// Projection onto `vars` (a subset of the scope), in that order.
    pub fn project(&self, vars: &[VarId]) -> Relation {
        let pos: Vec<usize> = vars
            .iter()
            .map(|v| self.scope.iter().position(|s| s == v).expect("projection outside scope"))
            .collect();
        let tuples = self.tuples.iter().map(|t| pos.iter().map(|&p| t[p]).collect()).collect();
        Relation::normalized(vars.to_vec(), tuples)
    }

    /// Selects tuples agreeing with the evidence and drops the observed variables.
    pub fn restrict(&self, evidence: &Evidence) -> Relation {
        if !self.scope.iter().any(|v| evidence.get(*v).is_some()) {
            return self.clone();
        }
        let keep: Vec<VarId> = self.scope.iter().copied().filter(|v| evidence.get(*v).is_none()).collect();
        let selected = Relation {
            scope: self.scope.clone(),
            tuples: self
                .tuples
                .iter()
                .filter(|t| self.scope.iter().zip(t.iter()).all(|(v, x)| evidence.get(*v).is_none_or(|e| e == *x)))
                .cloned()
                .collect(),
        };
        selected.project(&keep)
    }

    /// Keeps only tuples whose values lie in the given per-variable domains.
    pub fn filter_domains(&self, domains: &[Vec<usize>]) -> Relation {
        let tuples = self
            .tuples
            .iter()
            .filter(|t| self.scope.iter().zip(t.iter()).all(|(v, x)| domains[*v].binary_search(x).is_ok()))
            .cloned()
            .collect();
        Relation { scope: self.scope.clone(), tuples }
    }

    pub fn intersect(&self, other: &Relation) -> Relation {
        let other = other.project(&self.scope);
        let tuples = self.tuples.iter().filter(|t| other.contains(t)).cloned().collect();
        Relation { scope: self.scope.clone(), tuples }
    }

    /// Values of `var` appearing in some tuple.
    pub fn support(&self, var: VarId) -> Vec<usize> {
        self.project(&[var]).tuples.into_iter().map(|t| t[0]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doms(k: usize, n: usize) -> Vec<Vec<usize>> {
        vec![(0..n).collect(); k]
    }

    #[test]
    fn selection_by_evidence() {
        // {(1,2),(2,1)} over (A,B) with e = {A=1}  ->  {(2)} over (B); values are 0-based here
        let r = Relation::new(vec![0, 1], vec![vec![1, 2], vec![2, 1]]).unwrap();
        let out = r.restrict(&Evidence::from_pairs([(0, 1)]));
        assert_eq!(out.scope(), &[1]);
        assert_eq!(out.tuples(), &[vec![2]]);
        assert_eq!(r.restrict(&Evidence::from_pairs([(5, 0)])), r);
    }

    #[test]
    fn join_and_project() {
        let neq = Relation::from_predicate(vec![0, 1], &doms(2, 3), |t| t[0] != t[1]);
        let dom_b = Relation::new(vec![1], vec![vec![0]]).unwrap();
        let j = neq.join(&dom_b);
        assert_eq!(j.scope(), &[0, 1]);
        assert_eq!(j.tuples(), &[vec![1, 0], vec![2, 0]]);
        assert_eq!(j.project(&[0]).tuples(), &[vec![1], vec![2]]);
        let chain = Relation::from_predicate(vec![1, 2], &doms(2, 3), |t| t[0] == t[1]);
        let j3 = neq.join(&chain);
        assert_eq!(j3.scope(), &[0, 1, 2]);
        assert_eq!(j3.len(), 6);
        assert!(j3.tuples().iter().all(|t| t[0] != t[1] && t[1] == t[2]));
    }

    #[test]
    fn join_with_nullary_identity() {
        let unit = Relation::new(vec![], vec![vec![]]).unwrap();
        let r = Relation::from_predicate(vec![3], &[vec![0, 1]], |_| true);
        assert_eq!(r.join(&unit), r);
        let empty = Relation::new(vec![], vec![]).unwrap();
        assert!(r.join(&empty).is_empty());
    }
}
