//! Flat constraint networks of Bayesian networks.
//!
//! A CPT becomes the relation of its strictly positive rows; each observed
//! variable becomes a unary relation holding its observed value. Relation
//! `i < n` is the family of variable `i`; evidence relations follow in
//! increasing variable order.

use crate::error::{Error, Result};
use crate::model::{BayesNetwork, ConstraintNetwork, Cpt, Evidence, Factor, Relation, VarId};

/// Largest assignment space enumerated exhaustively.
pub const SOLUTION_LIMIT: f64 = 1e7;

pub fn family_relation(cpt: &Cpt) -> Relation {
    let t = cpt.table();
    let tuples = t.entries().filter(|(_, p)| *p > 0.0).map(|(a, _)| a).collect();
    Relation::new(t.scope().to_vec(), tuples).expect("CPT scope is duplicate-free")
}

pub fn flatten(bn: &BayesNetwork, evidence: &Evidence) -> ConstraintNetwork {
    let mut relations: Vec<Relation> = bn.cpts().iter().map(family_relation).collect();
    for (v, x) in evidence.iter() {
        relations.push(Relation::new(vec![v], vec![vec![x]]).expect("unary relation"));
    }
    ConstraintNetwork::new(bn.variables().to_vec(), relations).expect("flattened relations stay inside the domains")
}

/// Index of the unary relation for observed variable `v` inside `flatten(bn, evidence)`.
pub fn evidence_relation_index(bn: &BayesNetwork, evidence: &Evidence, v: VarId) -> Option<usize> {
    evidence.iter().position(|(w, _)| w == v).map(|k| bn.num_vars() + k)
}

/// Same structure with every CPT column made uniform over its positive rows.
///
/// Columns without a positive row stay all-zero, so `flatten` sees exactly
/// the same relations.
pub fn uniformize(bn: &BayesNetwork) -> BayesNetwork {
    let cpts = bn
        .cpts()
        .iter()
        .map(|c| {
            let t = c.table();
            let k = c.child_card();
            let mut values = t.values().to_vec();
            for col in values.chunks_mut(k) {
                let pos = col.iter().filter(|&&p| p > 0.0).count();
                for p in col.iter_mut() {
                    *p = if *p > 0.0 { 1.0 / pos as f64 } else { 0.0 };
                }
            }
            let table = Factor::new(t.scope().to_vec(), t.cards().to_vec(), values).expect("same shape");
            Cpt::new(c.child(), c.parents().to_vec(), table).expect("same scope")
        })
        .collect();
    BayesNetwork::new(bn.variables().to_vec(), cpts).expect("same variables")
}

fn check_size(domains: &[Vec<usize>]) -> Result<()> {
    let size: f64 = domains.iter().map(|d| d.len() as f64).product();
    if size > SOLUTION_LIMIT {
        return Err(Error::SizeGuard { size, limit: SOLUTION_LIMIT });
    }
    Ok(())
}

/// All full assignments (within the current domains) satisfying every relation.
pub fn solutions(cn: &ConstraintNetwork) -> Result<Vec<Vec<usize>>> {
    let domains = cn.current_domains();
    check_size(domains)?;
    let n = cn.num_vars();
    // each relation is checked once its last variable is assigned
    let mut due: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, r) in cn.relations().iter().enumerate() {
        match r.scope().iter().max() {
            Some(&m) => due[m].push(k),
            None if r.is_empty() => return Ok(Vec::new()),
            None => {}
        }
    }
    let mut out = Vec::new();
    let mut x = vec![0; n];
    let mut buf = Vec::new();
    fn go(
        d: usize,
        x: &mut Vec<usize>,
        cn: &ConstraintNetwork,
        due: &[Vec<usize>],
        buf: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if d == x.len() {
            out.push(x.clone());
            return;
        }
        for &val in &cn.current_domains()[d] {
            x[d] = val;
            let ok = due[d].iter().all(|&k| {
                let r = &cn.relations()[k];
                buf.clear();
                buf.extend(r.scope().iter().map(|&v| x[v]));
                r.contains(buf)
            });
            if ok {
                go(d + 1, x, cn, due, buf, out);
            }
        }
    }
    if n == 0 {
        return Ok(vec![Vec::new()]);
    }
    go(0, &mut x, cn, &due, &mut buf, &mut out);
    Ok(out)
}

/// Checks, tuple by tuple, that positive joint probability coincides with
/// being a solution of the flat network.
pub fn verify_flat_equivalence(bn: &BayesNetwork, evidence: &Evidence) -> Result<bool> {
    bn.check_evidence(evidence)?;
    let cn = flatten(bn, evidence);
    let domains: Vec<Vec<usize>> = bn
        .variables()
        .iter()
        .map(|v| match evidence.get(v.id) {
            Some(x) => vec![x],
            None => (0..v.card()).collect(),
        })
        .collect();
    check_size(&domains)?;
    let all = Relation::universal((0..bn.num_vars()).collect(), &domains);
    Ok(all.tuples().iter().all(|t| (bn.joint_full(t) > 0.0) == cn.satisfies(t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variable;

    fn net() -> BayesNetwork {
        let cards = [2, 3];
        BayesNetwork::new(
            vec![Variable::indexed(0, "A", 2), Variable::indexed(1, "B", 3)],
            vec![
                Cpt::from_fn(0, vec![], &cards, |x, _| [0.4, 0.6][x]),
                Cpt::from_fn(1, vec![0], &cards, |x, pa| [[0.5, 0.5, 0.0], [0.0, 0.0, 1.0]][pa[0]][x]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn relations_hold_positive_rows() {
        let bn = net();
        let cn = flatten(&bn, &Evidence::from_pairs([(1, 2)]));
        assert_eq!(cn.relations().len(), 3);
        assert_eq!(cn.relations()[1].tuples(), &[vec![0, 0], vec![0, 1], vec![1, 2]]);
        assert_eq!(cn.relations()[1].len(), bn.cpt(1).positive_rows());
        assert_eq!(cn.relations()[2].tuples(), &[vec![2]]);
        assert_eq!(solutions(&cn).unwrap(), vec![vec![1, 2]]);
        assert_eq!(evidence_relation_index(&bn, &Evidence::from_pairs([(1, 2)]), 1), Some(2));
    }

    #[test]
    fn equivalence_and_uniformize() {
        let bn = net();
        assert!(verify_flat_equivalence(&bn, &Evidence::new()).unwrap());
        assert!(verify_flat_equivalence(&bn, &Evidence::from_pairs([(0, 1)])).unwrap());
        let u = uniformize(&bn);
        assert_eq!(flatten(&u, &Evidence::new()), flatten(&bn, &Evidence::new()));
    }

    #[test]
    fn empty_relation_has_no_solutions() {
        let vars = vec![Variable::indexed(0, "A", 2)];
        let cn = ConstraintNetwork::new(vars, vec![Relation::new(vec![0], vec![]).unwrap()]).unwrap();
        assert!(solutions(&cn).unwrap().is_empty());
        let vars = vec![Variable::indexed(0, "A", 2)];
        let cn = ConstraintNetwork::new(vars, vec![Relation::new(vec![], vec![]).unwrap()]).unwrap();
        assert!(solutions(&cn).unwrap().is_empty());
    }

    #[test]
    fn size_guard_refuses() {
        let vars = (0..24).map(|i| Variable::indexed(i, format!("X{i}"), 2)).collect();
        let cn = ConstraintNetwork::new(vars, vec![]).unwrap();
        assert!(matches!(solutions(&cn), Err(Error::SizeGuard { .. })));
    }
}
