use super::{Evidence, VarId};
use crate::error::{Error, Result};

/// Row-major strides for a mixed-radix encoding; the last variable varies fastest.
pub fn strides(cards: &[usize]) -> Vec<usize> {
    let mut out = vec![1; cards.len()];
    for k in (0..cards.len().saturating_sub(1)).rev() {
        out[k] = out[k + 1] * cards[k + 1];
    }
    out
}

/// Strides of `src_scope` expressed against the positions of `target_scope`
/// (zero where a target variable is absent from the source).
pub(crate) fn strides_into(target_scope: &[VarId], src_scope: &[VarId], src_cards: &[usize]) -> Vec<usize> {
    let src_strides = strides(src_cards);
    target_scope
        .iter()
        .map(|v| match src_scope.iter().position(|s| s == v) {
            Some(p) => src_strides[p],
            None => 0,
        })
        .collect()
}

/// Walks every assignment of `cards` in mixed-radix order, handing the
/// callback the linear index together with the matching offset into each
/// table described by `maps`.
pub(crate) fn walk(cards: &[usize], maps: &[&[usize]], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = cards.iter().product();
    let n = cards.len();
    let mut digits = vec![0usize; n];
    let mut offs = vec![0usize; maps.len()];
    for idx in 0..total {
        f(idx, &offs);
        let mut k = n;
        while k > 0 {
            k -= 1;
            digits[k] += 1;
            for (o, m) in offs.iter_mut().zip(maps) {
                *o += m[k];
            }
            if digits[k] < cards[k] {
                break;
            }
            for (o, m) in offs.iter_mut().zip(maps) {
                *o -= m[k] * cards[k];
            }
            digits[k] = 0;
        }
    }
}

/// Dense real-valued table over an ordered scope.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<VarId>, cards: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if scope.len() != cards.len() {
            return Err(Error::InvalidNetwork(format!(
                "scope has {} variables but {} cardinalities",
                scope.len(),
                cards.len()
            )));
        }
        for (i, v) in scope.iter().enumerate() {
            if scope[..i].contains(v) {
                return Err(Error::InvalidNetwork(format!("variable {v} repeated in scope")));
            }
        }
        let size: usize = cards.iter().product();
        if size != values.len() {
            return Err(Error::InvalidNetwork(format!(
                "table over {:?} needs {size} entries, got {}",
                scope,
                values.len()
            )));
        }
        Ok(Factor { scope, cards, values })
    }

    pub fn constant(scope: Vec<VarId>, cards: Vec<usize>, value: f64) -> Self {
        let size = cards.iter().product();
        Factor { scope, cards, values: vec![value; size] }
    }

    pub fn scalar(value: f64) -> Self {
        Factor { scope: Vec::new(), cards: Vec::new(), values: vec![value] }
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn card_of(&self, var: VarId) -> Option<usize> {
        self.scope.iter().position(|&v| v == var).map(|p| self.cards[p])
    }

    pub fn index_of(&self, assignment: &[usize]) -> usize {
        debug_assert_eq!(assignment.len(), self.scope.len());
        assignment.iter().zip(&self.cards).fold(0, |acc, (&x, &c)| acc * c + x)
    }

    pub fn assignment_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.cards.len()];
        for k in (0..self.cards.len()).rev() {
            out[k] = index % self.cards[k];
            index /= self.cards[k];
        }
        out
    }

    pub fn get(&self, assignment: &[usize]) -> f64 {
        self.values[self.index_of(assignment)]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Rescales to unit mass. Returns false (leaving the table untouched) when the mass is zero.
    pub fn normalize(&mut self) -> bool {
        let s = self.sum();
        if s > 0.0 {
            for v in &mut self.values {
                *v /= s;
            }
            true
        } else {
            false
        }
    }

    /// Pointwise product; the result scope is `self`'s scope followed by the new variables of `other`.
    pub fn product(&self, other: &Factor) -> Factor {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (v, c) in other.scope.iter().zip(&other.cards) {
            if !scope.contains(v) {
                scope.push(*v);
                cards.push(*c);
            }
        }
        let a = strides_into(&scope, &self.scope, &self.cards);
        let b = strides_into(&scope, &other.scope, &other.cards);
        let mut values = vec![0.0; cards.iter().product()];
        walk(&cards, &[&a, &b], |idx, offs| {
            values[idx] = self.values[offs[0]] * other.values[offs[1]];
        });
        Factor { scope, cards, values }
    }

    /// In-place product with a table whose scope is contained in this one.
    pub fn multiply_in(&mut self, other: &Factor) {
        debug_assert!(other.scope.iter().all(|v| self.scope.contains(v)));
        let b = strides_into(&self.scope, &other.scope, &other.cards);
        let values = &mut self.values;
        walk(&self.cards, &[&b], |idx, offs| {
            values[idx] *= other.values[offs[0]];
        });
    }

    /// Sums out every variable not in `keep`; the result follows `keep`'s order.
    pub fn marginalize(&self, keep: &[VarId]) -> Factor {
        let cards: Vec<usize> = keep
            .iter()
            .map(|v| self.card_of(*v).expect("marginalization target outside scope"))
            .collect();
        let m = strides_into(&self.scope, keep, &cards);
        let mut values = vec![0.0; cards.iter().product()];
        walk(&self.cards, &[&m], |idx, offs| {
            values[offs[0]] += self.values[idx];
        });
        Factor { scope: keep.to_vec(), cards, values }
    }

    /// Fixes observed variables to their values and drops them from the scope. No renormalization.
    pub fn restrict(&self, evidence: &Evidence) -> Factor {
        if !self.scope.iter().any(|v| evidence.get(*v).is_some()) {
            return self.clone();
        }
        let mut base = 0;
        let full = strides(&self.cards);
        let mut scope = Vec::new();
        let mut cards = Vec::new();
        let mut kept_strides = Vec::new();
        for (k, v) in self.scope.iter().enumerate() {
            match evidence.get(*v) {
                Some(x) => base += x * full[k],
                None => {
                    scope.push(*v);
                    cards.push(self.cards[k]);
                    kept_strides.push(full[k]);
                }
            }
        }
        let mut values = vec![0.0; cards.iter().product()];
        walk(&cards, &[&kept_strides], |idx, offs| {
            values[idx] = self.values[base + offs[0]];
        });
        Factor { scope, cards, values }
    }

    /// Same table with the scope permuted into `order`.
    pub fn reorder(&self, order: &[VarId]) -> Factor {
        assert_eq!(order.len(), self.scope.len());
        self.marginalize(order)
    }

    /// Iterates `(assignment, value)` pairs in mixed-radix order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        (0..self.values.len()).map(move |i| (self.assignment_of(i), self.values[i]))
    }
}
