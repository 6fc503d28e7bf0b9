//! Worked-example fixtures and seeded benchmark generators.
//!
//! All randomness goes through `ChaCha8Rng::seed_from_u64(seed)`, so a
//! `(parameters, seed)` pair always produces the same network.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::dualgraph::{Arc, DualJoinGraph};
use crate::error::{Error, Result};
use crate::model::{BayesNetwork, ConstraintNetwork, Cpt, Evidence, Factor, Relation, VarId, Variable};

pub const FIXTURES: &[&str] = &["ex2.2", "ex2.2-binary", "ex3.1", "ex4.4", "ex4.4-binary", "ex4.6", "fig1"];

#[derive(Debug, Clone)]
pub enum Fixture {
    Bayes { bn: BayesNetwork, evidence: Evidence },
    Constraint { cn: ConstraintNetwork },
}

pub fn fixture(name: &str) -> Result<Fixture> {
    Ok(match name {
        "ex2.2" => Fixture::Constraint { cn: ex22() },
        "ex2.2-binary" => Fixture::Constraint { cn: ex22_binary() },
        "ex3.1" => Fixture::Bayes { bn: ex31(), evidence: Evidence::new() },
        "ex4.4" => {
            let (bn, evidence) = ex44([1.0 / 3.0; 3], 0.0);
            Fixture::Bayes { bn, evidence }
        }
        "ex4.4-binary" => Fixture::Constraint { cn: ex44_binary() },
        "ex4.6" => Fixture::Bayes { bn: ex46(), evidence: Evidence::new() },
        "fig1" => Fixture::Bayes { bn: fig1(), evidence: Evidence::new() },
        other => return Err(Error::UnknownFixture(other.to_string())),
    })
}

fn labeled(id: VarId, name: &str, labels: &[i64]) -> Variable {
    Variable::new(id, name, labels.iter().map(|x| x.to_string()).collect())
}

fn label_values(v: &Variable) -> Vec<i64> {
    v.domain.iter().map(|s| s.parse().expect("numeric label")).collect()
}

fn full_domains(vars: &[Variable], scope: &[VarId]) -> Vec<Vec<usize>> {
    scope.iter().map(|&v| (0..vars[v].card()).collect()).collect()
}

/// Relation over `scope` accepting the tuples whose labels satisfy `pred`.
fn labeled_relation(vars: &[Variable], scope: Vec<VarId>, pred: impl Fn(&[i64]) -> bool) -> Relation {
    let labels: Vec<Vec<i64>> = scope.iter().map(|&v| label_values(&vars[v])).collect();
    let doms = full_domains(vars, &scope);
    Relation::from_predicate(scope, &doms, |t| {
        let x: Vec<i64> = t.iter().zip(&labels).map(|(&i, l)| l[i]).collect();
        pred(&x)
    })
}

fn all_different(x: &[i64]) -> bool {
    (0..x.len()).all(|i| (i + 1..x.len()).all(|j| x[i] != x[j]))
}

const ABC: [&str; 6] = ["A", "B", "C", "D", "F", "G"];

fn ex22_vars() -> Vec<Variable> {
    ABC.iter()
        .enumerate()
        .map(|(i, n)| match *n {
            "C" => labeled(i, n, &[2]),
            "G" => labeled(i, n, &[3]),
            _ => labeled(i, n, &[1, 2, 3]),
        })
        .collect()
}

/// Graph-coloring network on the scopes of the six-variable example
/// (ids A0 B1 C2 D3 F4 G5): all-different on {G,F,D}, {F,C,B}, {D,B,A},
/// not-equal on {B,A} and {C,A}, and the universal unary on {A}.
pub fn ex22() -> ConstraintNetwork {
    let vars = ex22_vars();
    let (a, b, c, d, f, g) = (0, 1, 2, 3, 4, 5);
    let rels = vec![
        labeled_relation(&vars, vec![g, f, d], all_different),
        labeled_relation(&vars, vec![f, c, b], all_different),
        labeled_relation(&vars, vec![d, b, a], all_different),
        labeled_relation(&vars, vec![b, a], all_different),
        labeled_relation(&vars, vec![c, a], all_different),
        labeled_relation(&vars, vec![a], |_| true),
    ];
    ConstraintNetwork::new(vars, rels).expect("fixture is well formed")
}

/// The same coloring problem with every constraint decomposed into pairwise not-equal.
pub fn ex22_binary() -> ConstraintNetwork {
    let vars = ex22_vars();
    let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (1, 4), (2, 4), (3, 4), (3, 5), (4, 5)];
    let rels = edges.iter().map(|&(x, y)| labeled_relation(&vars, vec![x, y], all_different)).collect();
    ConstraintNetwork::new(vars, rels).expect("fixture is well formed")
}

/// Three binary variables A0, B1, C2 with P(A), P(B|A), P(C|A,B); two CPT entries are zero.
pub fn ex31() -> BayesNetwork {
    let cards = [2, 2, 2];
    BayesNetwork::new(
        vec![Variable::indexed(0, "A", 2), Variable::indexed(1, "B", 2), Variable::indexed(2, "C", 2)],
        vec![
            Cpt::from_fn(0, vec![], &cards, |x, _| [0.6, 0.4][x]),
            Cpt::from_fn(1, vec![0], &cards, |x, pa| [[0.7, 0.3], [0.0, 1.0]][pa[0]][x]),
            Cpt::from_fn(2, vec![0, 1], &cards, |x, pa| {
                [[0.9, 0.1], [0.5, 0.5], [0.2, 0.8], [1.0, 0.0]][pa[0] * 2 + pa[1]][x]
            }),
        ],
    )
    .expect("fixture is well formed")
}

/// The join-tree of the three-variable example: P(C|A,B) to P(B|A) over {A,B}, then P(B|A) to P(A) over {A}.
pub fn ex31_join_tree(bn: &BayesNetwork) -> DualJoinGraph {
    DualJoinGraph::from_groups(
        &bn.family_scopes(),
        vec![vec![0], vec![1], vec![2]],
        vec![Arc { u: 2, v: 1, label: vec![0, 1] }, Arc { u: 1, v: 0, label: vec![0] }],
    )
    .expect("fixture graph is well formed")
}

/// The three-hidden-variable coloring example. Ids X1..X3 = 0..2, H1..H3 = 3..5;
/// H1 has parents (X1,X2), H2 (X2,X3), H3 (X1,X3). Evidence sets every H to 1.
pub fn ex44(prior: [f64; 3], epsilon: f64) -> (BayesNetwork, Evidence) {
    gen_coloring_with_parents(&[prior; 3], &[(0, 1), (1, 2), (0, 2)], epsilon)
}

/// The evidence-restricted flat core of the coloring example: X variables
/// with binary constraints allowing (1,2), (2,1), (3,3).
pub fn ex44_binary() -> ConstraintNetwork {
    let vars: Vec<Variable> = (0..3).map(|i| labeled(i, &format!("X{}", i + 1), &[1, 2, 3])).collect();
    let ok = |x: &[i64]| (x[0] != 3 && x[1] != 3 && x[0] != x[1]) || (x[0] == 3 && x[1] == 3);
    let rels = [(0, 1), (1, 2), (0, 2)].iter().map(|&(i, j)| labeled_relation(&vars, vec![i, j], ok)).collect();
    ConstraintNetwork::new(vars, rels).expect("fixture is well formed")
}

/// CPT whose columns are uniform over the child values accepted by `pred`
/// (over labels, in family order parents-then-child). Columns without an
/// accepted value are all zero.
fn uniform_cpt(vars: &[Variable], child: VarId, parents: Vec<VarId>, pred: impl Fn(&[i64]) -> bool) -> Cpt {
    let mut scope = parents.clone();
    scope.push(child);
    let r = labeled_relation(vars, scope.clone(), pred);
    let cards: Vec<usize> = scope.iter().map(|&v| vars[v].card()).collect();
    let k = vars[child].card();
    let mut values = vec![0.0; cards.iter().product()];
    let proto = Factor::constant(scope.clone(), cards.clone(), 0.0);
    for t in r.tuples() {
        values[proto.index_of(t)] = 1.0;
    }
    for col in values.chunks_mut(k) {
        let n = col.iter().filter(|&&p| p > 0.0).count();
        for p in col.iter_mut() {
            if *p > 0.0 {
                *p = 1.0 / n as f64;
            }
        }
    }
    Cpt::new(child, parents, Factor::new(scope, cards, values).expect("shape")).expect("scope")
}

/// The Max-closed example. Ids V0 W1 X2 Y3 Z4; W lacks value 3 and Z lacks 5.
/// Some parent columns admit no child value, so those columns are all zero.
pub fn ex46() -> BayesNetwork {
    let vars = vec![
        labeled(0, "V", &[1, 2, 3, 4, 5]),
        labeled(1, "W", &[1, 2, 4, 5]),
        labeled(2, "X", &[1, 2, 3, 4, 5]),
        labeled(3, "Y", &[1, 2, 3, 4, 5]),
        labeled(4, "Z", &[1, 2, 3, 4]),
    ];
    let (v, w, x, y, z) = (0, 1, 2, 3, 4);
    let cpts = vec![
        // families are (parents..., child)
        uniform_cpt(&vars, v, vec![z], |t| 3 * t[1] <= t[0] + 1),
        uniform_cpt(&vars, w, vec![y, z], |t| t[2] * t[1] >= 2 * t[0]),
        uniform_cpt(&vars, x, vec![z, y, w], |t| 3 * t[3] + t[1] + t[0] > 5 * t[2]),
        uniform_cpt(&vars, y, vec![z], |t| t[1] >= t[0] + 2),
        uniform_cpt(&vars, z, vec![], |_| true),
    ];
    BayesNetwork::new(vars, cpts).expect("fixture is well formed")
}

/// Six binary variables on the structure P(g|f,d) P(f|c,b) P(d|b,a) P(b|a) P(c|a) P(a)
/// (ids A0 B1 C2 D3 F4 G5), with a few zero entries.
pub fn fig1() -> BayesNetwork {
    let vars: Vec<Variable> = ABC.iter().enumerate().map(|(i, n)| Variable::indexed(i, *n, 2)).collect();
    let cards = [2; 6];
    let (a, b, c, d, f, g) = (0, 1, 2, 3, 4, 5);
    let cpts = vec![
        Cpt::from_fn(a, vec![], &cards, |x, _| [0.3, 0.7][x]),
        Cpt::from_fn(b, vec![a], &cards, |x, pa| [[0.0, 1.0], [0.6, 0.4]][pa[0]][x]),
        Cpt::from_fn(c, vec![a], &cards, |x, pa| [[0.5, 0.5], [0.9, 0.1]][pa[0]][x]),
        Cpt::from_fn(d, vec![b, a], &cards, |x, pa| {
            [[0.2, 0.8], [1.0, 0.0], [0.4, 0.6], [0.7, 0.3]][pa[0] * 2 + pa[1]][x]
        }),
        Cpt::from_fn(f, vec![c, b], &cards, |x, pa| {
            [[0.5, 0.5], [0.1, 0.9], [0.0, 1.0], [0.3, 0.7]][pa[0] * 2 + pa[1]][x]
        }),
        Cpt::from_fn(g, vec![f, d], &cards, |x, pa| {
            [[0.6, 0.4], [0.25, 0.75], [1.0, 0.0], [0.45, 0.55]][pa[0] * 2 + pa[1]][x]
        }),
    ];
    BayesNetwork::new(vars, cpts).expect("fixture is well formed")
}

/// Encodes each constraint as a binary hidden child that is 1 exactly on the
/// allowed tuples. Original variables become roots, uniform over their
/// current domains; hidden variable `k` gets id `n + k`. Evidence sets every
/// hidden variable to 1.
pub fn constraint_to_bayes(cn: &ConstraintNetwork) -> (BayesNetwork, Evidence) {
    let n = cn.num_vars();
    let mut vars = cn.variables().to_vec();
    let mut cards = cn.cards();
    for k in 0..cn.relations().len() {
        vars.push(Variable::indexed(n + k, format!("H{k}"), 2));
        cards.push(2);
    }
    let mut cpts = Vec::with_capacity(vars.len());
    for v in 0..n {
        let d = &cn.current_domains()[v];
        cpts.push(Cpt::from_fn(v, vec![], &cards, |x, _| {
            if d.contains(&x) {
                1.0 / d.len() as f64
            } else {
                0.0
            }
        }));
    }
    let mut evidence = Evidence::new();
    for (k, r) in cn.relations().iter().enumerate() {
        cpts.push(Cpt::from_fn(n + k, r.scope().to_vec(), &cards, |x, pa| {
            let allowed = r.contains(pa);
            if (x == 1) == allowed {
                1.0
            } else {
                0.0
            }
        }));
        evidence.insert(n + k, 1);
    }
    (BayesNetwork::new(vars, cpts).expect("well formed"), evidence)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn flat_dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|x| x / s).collect()
}

/// Coloring network with given X priors and H parent pairs: X ids `0..n_x`,
/// H ids follow. `P(h=1|xi,xj)` is `1-ε` on allowed pairs ((1,2), (2,1), (3,3)) and `ε` otherwise.
pub fn gen_coloring_with_parents(priors: &[[f64; 3]], parents: &[(usize, usize)], epsilon: f64) -> (BayesNetwork, Evidence) {
    let n_x = priors.len();
    let mut vars: Vec<Variable> = (0..n_x).map(|i| labeled(i, &format!("X{}", i + 1), &[1, 2, 3])).collect();
    for k in 0..parents.len() {
        vars.push(labeled(n_x + k, &format!("H{}", k + 1), &[0, 1]));
    }
    let cards: Vec<usize> = vars.iter().map(Variable::card).collect();
    let mut cpts: Vec<Cpt> = priors.iter().enumerate().map(|(i, p)| Cpt::from_fn(i, vec![], &cards, |x, _| p[x])).collect();
    let mut evidence = Evidence::new();
    for (k, &(i, j)) in parents.iter().enumerate() {
        cpts.push(Cpt::from_fn(n_x + k, vec![i, j], &cards, |h, pa| {
            // value indices 0,1,2 are labels 1,2,3
            let allowed = (pa[0] != 2 && pa[1] != 2 && pa[0] != pa[1]) || (pa[0] == 2 && pa[1] == 2);
            let p1 = if allowed { 1.0 - epsilon } else { epsilon };
            if h == 1 {
                p1
            } else {
                1.0 - p1
            }
        }));
        evidence.insert(n_x + k, 1);
    }
    (BayesNetwork::new(vars, cpts).expect("well formed"), evidence)
}

/// Coloring-type network: `n_x` three-valued roots with flat-Dirichlet priors,
/// `n_h` binary H nodes with two distinct random X parents each, all H = 1.
pub fn gen_coloring(n_x: usize, n_h: usize, epsilon: f64, seed: u64) -> Result<(BayesNetwork, Evidence)> {
    if n_x < 2 || n_h == 0 || !(0.0..0.5).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "coloring needs n_x >= 2, n_h >= 1 and 0 <= epsilon < 0.5 (got {n_x}, {n_h}, {epsilon})"
        )));
    }
    let mut r = rng(seed);
    let priors: Vec<[f64; 3]> = (0..n_x)
        .map(|_| {
            let p = flat_dirichlet(&mut r, 3);
            [p[0], p[1], p[2]]
        })
        .collect();
    let parents: Vec<(usize, usize)> = (0..n_h)
        .map(|_| {
            let i = r.random_range(0..n_x);
            let mut j = r.random_range(0..n_x - 1);
            if j >= i {
                j += 1;
            }
            (i.min(j), i.max(j))
        })
        .collect();
    Ok(gen_coloring_with_parents(&priors, &parents, epsilon))
}

#[derive(Debug, Clone)]
pub struct CodingInstance {
    pub bn: BayesNetwork,
    pub evidence: Evidence,
    /// Transmitted value of each bit variable `0..truth.len()`.
    pub truth: Vec<usize>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Layered linear block code. Layer 0 holds `width` uniform information bits;
/// each further layer holds `width` code bits, each the XOR of
/// `parents_per_bit` distinct information bits. Every bit `b` (id `k`) has an
/// observed child (id `n_bits + k`) with `P(obs=1|b) ∝ N(y; 2b-1, σ)`, where
/// `y` is the noisy received signal; the evidence sets each observation to 1.
pub fn gen_coding(layers: usize, width: usize, parents_per_bit: usize, sigma: f64, seed: u64) -> Result<CodingInstance> {
    if layers < 1 || width < parents_per_bit || parents_per_bit == 0 || sigma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "coding needs layers >= 1, width >= parents_per_bit >= 1 and sigma > 0 (got {layers}, {width}, {parents_per_bit}, {sigma})"
        )));
    }
    let mut r = rng(seed);
    let n_bits = layers * width;
    let mut vars: Vec<Variable> = (0..n_bits).map(|i| Variable::indexed(i, format!("U{i}"), 2)).collect();
    vars.extend((0..n_bits).map(|i| Variable::indexed(n_bits + i, format!("Y{i}"), 2)));
    let cards = vec![2; 2 * n_bits];
    let info: Vec<usize> = (0..width).collect();
    let mut truth: Vec<usize> = (0..width).map(|_| r.random_range(0..2)).collect();
    let mut cpts: Vec<Cpt> = (0..width).map(|i| Cpt::from_fn(i, vec![], &cards, |_, _| 0.5)).collect();
    for i in width..n_bits {
        let mut pa: Vec<usize> = rand::seq::index::sample(&mut r, info.len(), parents_per_bit).into_iter().map(|k| info[k]).collect();
        pa.sort_unstable();
        truth.push(pa.iter().map(|&p| truth[p]).sum::<usize>() % 2);
        cpts.push(Cpt::from_fn(i, pa, &cards, |x, pv| {
            if x == pv.iter().sum::<usize>() % 2 {
                1.0
            } else {
                0.0
            }
        }));
    }
    let mut evidence = Evidence::new();
    for (i, &bit) in truth.iter().enumerate() {
        let noise: f64 = StandardNormal.sample(&mut r);
        let y = (2.0 * bit as f64 - 1.0) + sigma * noise;
        let z = 2.0 * y / (sigma * sigma);
        // P(obs=1|b=1) = L1/(L0+L1) = sigmoid(z); P(obs=1|b=0) = sigmoid(-z)
        let p1 = [sigmoid(-z), sigmoid(z)];
        let p0 = [sigmoid(z), sigmoid(-z)];
        cpts.push(Cpt::from_fn(n_bits + i, vec![i], &cards, |x, pv| if x == 1 { p1[pv[0]] } else { p0[pv[0]] }));
        evidence.insert(n_bits + i, 1);
    }
    Ok(CodingInstance { bn: BayesNetwork::new(vars, cpts).expect("well formed"), evidence, truth })
}

fn random_column_cpt(r: &mut ChaCha8Rng, child: VarId, parents: Vec<VarId>, cards: &[usize]) -> Cpt {
    let mut scope = parents.clone();
    scope.push(child);
    let fc: Vec<usize> = scope.iter().map(|&v| cards[v]).collect();
    let k = cards[child];
    let mut values: Vec<f64> = (0..fc.iter().product::<usize>()).map(|_| r.random::<f64>()).collect();
    for col in values.chunks_mut(k) {
        let s: f64 = col.iter().sum();
        for p in col.iter_mut() {
            *p /= s;
        }
    }
    Cpt::new(child, parents, Factor::new(scope, fc, values).expect("shape")).expect("scope")
}

/// Draws one full assignment by ancestral sampling.
pub fn forward_sample(bn: &BayesNetwork, r: &mut impl Rng) -> Vec<usize> {
    let order = bn.topological_order().expect("acyclic");
    let mut x = vec![0; bn.num_vars()];
    for v in order {
        let c = bn.cpt(v);
        let pv: Vec<usize> = c.parents().iter().map(|&p| x[p]).collect();
        let col: Vec<f64> = (0..c.child_card()).map(|k| c.prob(k, &pv)).collect();
        let total: f64 = col.iter().sum();
        let mut u = r.random::<f64>() * total;
        x[v] = col.len() - 1;
        for (k, p) in col.iter().enumerate() {
            if u < *p {
                x[v] = k;
                break;
            }
            u -= p;
        }
    }
    x
}

/// Observes `count` variables, leaves first, with values from one forward sample.
fn leaf_evidence(bn: &BayesNetwork, count: usize, r: &mut ChaCha8Rng) -> Evidence {
    let children = bn.children();
    let mut leaves: Vec<VarId> = (0..bn.num_vars()).filter(|&v| children[v].is_empty()).collect();
    let mut inner: Vec<VarId> = (0..bn.num_vars()).filter(|&v| !children[v].is_empty()).collect();
    leaves.shuffle(r);
    inner.shuffle(r);
    let x = forward_sample(bn, r);
    Evidence::from_pairs(leaves.into_iter().chain(inner).take(count).map(|v| (v, x[v])))
}

/// Binary grid with edges right and down; variable `(i, j)` has id `i * cols + j`.
pub fn gen_grid(rows: usize, cols: usize, n_evidence: usize, seed: u64) -> Result<(BayesNetwork, Evidence)> {
    if rows == 0 || cols == 0 || n_evidence > rows * cols {
        return Err(Error::InvalidParameter("grid needs positive sides and at most one observation per cell".into()));
    }
    let mut r = rng(seed);
    let n = rows * cols;
    let vars: Vec<Variable> = (0..n).map(|i| Variable::indexed(i, format!("G{}_{}", i / cols, i % cols), 2)).collect();
    let cards = vec![2; n];
    let cpts = (0..n)
        .map(|v| {
            let (i, j) = (v / cols, v % cols);
            let mut pa = Vec::new();
            if i > 0 {
                pa.push(v - cols);
            }
            if j > 0 {
                pa.push(v - 1);
            }
            random_column_cpt(&mut r, v, pa, &cards)
        })
        .collect();
    let bn = BayesNetwork::new(vars, cpts).expect("well formed");
    let e = leaf_evidence(&bn, n_evidence, &mut r);
    Ok((bn, e))
}

/// Random binary DAG: variable `i` takes up to `max_parents` parents among `0..i`.
pub fn gen_random(n: usize, max_parents: usize, n_evidence: usize, seed: u64) -> Result<(BayesNetwork, Evidence)> {
    if n == 0 || n_evidence > n {
        return Err(Error::InvalidParameter("random network needs n >= 1 and at most n observations".into()));
    }
    let mut r = rng(seed);
    let vars: Vec<Variable> = (0..n).map(|i| Variable::indexed(i, format!("R{i}"), 2)).collect();
    let cards = vec![2; n];
    let cpts = (0..n)
        .map(|v| {
            let k = r.random_range(0..=max_parents.min(v));
            let mut pa: Vec<usize> = rand::seq::index::sample(&mut r, v.max(1), k).into_iter().collect();
            pa.sort_unstable();
            random_column_cpt(&mut r, v, pa, &cards)
        })
        .collect();
    let bn = BayesNetwork::new(vars, cpts).expect("well formed");
    let e = leaf_evidence(&bn, n_evidence, &mut r);
    Ok((bn, e))
}

/// Parameters of the small random networks used for exhaustive checks.
#[derive(Debug, Clone, Copy)]
pub struct SmallNetConfig {
    pub max_vars: usize,
    pub max_card: usize,
    pub max_parents: usize,
    /// Chance that a CPT entry is zeroed (each column keeps one positive entry).
    pub zero_prob: f64,
    /// Chance that each variable is observed.
    pub evidence_prob: f64,
    /// Draw observed values uniformly (possibly impossible evidence) instead of by forward sampling.
    pub uniform_evidence: bool,
    /// Connect variables as a polytree (one undirected tree, random orientations).
    pub polytree: bool,
}

impl Default for SmallNetConfig {
    fn default() -> Self {
        SmallNetConfig {
            max_vars: 10,
            max_card: 3,
            max_parents: 3,
            zero_prob: 0.3,
            evidence_prob: 0.2,
            uniform_evidence: false,
            polytree: false,
        }
    }
}

fn sparse_cpt(r: &mut ChaCha8Rng, child: VarId, parents: Vec<VarId>, cards: &[usize], zero_prob: f64) -> Cpt {
    let mut scope = parents.clone();
    scope.push(child);
    let fc: Vec<usize> = scope.iter().map(|&v| cards[v]).collect();
    let k = cards[child];
    let mut values = vec![0.0; fc.iter().product()];
    for col in values.chunks_mut(k) {
        let keep = r.random_range(0..k);
        for (i, p) in col.iter_mut().enumerate() {
            if i == keep || r.random::<f64>() >= zero_prob {
                *p = 0.05 + r.random::<f64>();
            }
        }
        let s: f64 = col.iter().sum();
        for p in col.iter_mut() {
            *p /= s;
        }
    }
    Cpt::new(child, parents, Factor::new(scope, fc, values).expect("shape")).expect("scope")
}

/// Small random network with random zero patterns and random evidence.
pub fn gen_small(config: &SmallNetConfig, seed: u64) -> (BayesNetwork, Evidence) {
    let mut r = rng(seed);
    let n = r.random_range(1..=config.max_vars.max(1));
    let cards: Vec<usize> = (0..n).map(|_| r.random_range(2..=config.max_card.max(2))).collect();
    let vars: Vec<Variable> = (0..n).map(|i| Variable::indexed(i, format!("S{i}"), cards[i])).collect();
    let mut parents: Vec<Vec<VarId>> = vec![Vec::new(); n];
    if config.polytree {
        for i in 1..n {
            let j = r.random_range(0..i);
            if r.random::<bool>() {
                parents[i].push(j);
            } else {
                parents[j].push(i);
            }
        }
    } else {
        for (i, pa) in parents.iter_mut().enumerate().skip(1) {
            let k = r.random_range(0..=config.max_parents.min(i));
            *pa = rand::seq::index::sample(&mut r, i, k).into_iter().collect();
        }
    }
    let cpts = parents
        .into_iter()
        .enumerate()
        .map(|(v, mut pa)| {
            pa.sort_unstable();
            sparse_cpt(&mut r, v, pa, &cards, config.zero_prob)
        })
        .collect();
    let bn = BayesNetwork::new(vars, cpts).expect("well formed");
    let x = forward_sample(&bn, &mut r);
    let mut e = Evidence::new();
    for v in 0..n {
        if r.random::<f64>() < config.evidence_prob {
            let val = if config.uniform_evidence { r.random_range(0..cards[v]) } else { x[v] };
            e.insert(v, val);
        }
    }
    (bn, e)
}

/// Random binary constraint network (plus some unary constraints) for engine cross-checks.
pub fn gen_binary_cn(n: usize, max_card: usize, density: f64, tightness: f64, seed: u64) -> ConstraintNetwork {
    let mut r = rng(seed);
    let cards: Vec<usize> = (0..n).map(|_| r.random_range(2..=max_card.max(2))).collect();
    let vars: Vec<Variable> = (0..n).map(|i| Variable::indexed(i, format!("C{i}"), cards[i])).collect();
    let mut rels = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random::<f64>() < density {
                let doms = vec![(0..cards[i]).collect(), (0..cards[j]).collect()];
                let u = Relation::universal(vec![i, j], &doms);
                let keep: Vec<Vec<usize>> = u.tuples().iter().filter(|_| r.random::<f64>() >= tightness).cloned().collect();
                rels.push(Relation::new(vec![i, j], keep).expect("binary"));
            }
        }
        if r.random::<f64>() < 0.3 {
            let keep: Vec<Vec<usize>> = (0..cards[i]).filter(|_| r.random::<f64>() >= 0.3).map(|x| vec![x]).collect();
            rels.push(Relation::new(vec![i], keep).expect("unary"));
        }
    }
    ConstraintNetwork::new(vars, rels).expect("well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatten::{flatten, solutions};

    #[test]
    fn every_fixture_builds() {
        for name in FIXTURES {
            fixture(name).unwrap();
        }
        assert!(matches!(fixture("nope"), Err(Error::UnknownFixture(_))));
    }

    #[test]
    fn ex44_rows() {
        let (bn, e) = ex44([1.0 / 3.0; 3], 0.0);
        assert_eq!(bn.cpt(3).prob(1, &[2, 2]), 1.0);
        assert_eq!(bn.cpt(3).prob(1, &[0, 1]), 1.0);
        assert_eq!(bn.cpt(3).prob(1, &[0, 0]), 0.0);
        assert_eq!(e.len(), 3);
        assert!(bn.validate().is_valid());
    }

    #[test]
    fn ex22_has_its_unique_solution() {
        let cn = ex22();
        let sols = solutions(&cn).unwrap();
        assert_eq!(sols.len(), 1);
        let labels: Vec<&str> = sols[0].iter().enumerate().map(|(v, &x)| cn.variables()[v].domain[x].as_str()).collect();
        assert_eq!(labels, ["1", "3", "2", "2", "1", "3"]);
        assert_eq!(solutions(&ex22_binary()).unwrap(), sols);
    }

    #[test]
    fn constraint_to_bayes_keeps_solutions() {
        let cn = ex22();
        let (bn, e) = constraint_to_bayes(&cn);
        let flat = flatten(&bn, &e);
        let projected: Vec<Vec<usize>> = solutions(&flat).unwrap().into_iter().map(|s| s[..cn.num_vars()].to_vec()).collect();
        assert_eq!(projected, solutions(&cn).unwrap());
    }

    #[test]
    fn small_grid_edges() {
        let (bn, e) = gen_grid(2, 2, 0, 1).unwrap();
        assert_eq!(bn.parents(1), &[0]);
        assert_eq!(bn.parents(2), &[0]);
        assert_eq!(bn.parents(3), &[1, 2]);
        assert!(e.is_empty());
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_coloring(20, 40, 0.1, 7).unwrap();
        let b = gen_coloring(20, 40, 0.1, 7).unwrap();
        assert_eq!(a.0, b.0);
        let c = gen_coding(2, 10, 3, 0.4, 3).unwrap();
        let d = gen_coding(2, 10, 3, 0.4, 3).unwrap();
        assert_eq!(c.bn, d.bn);
        assert_eq!(c.truth, d.truth);
        assert_eq!(gen_random(30, 3, 5, 2).unwrap().0, gen_random(30, 3, 5, 2).unwrap().0);
        assert_eq!(gen_small(&SmallNetConfig::default(), 4).0, gen_small(&SmallNetConfig::default(), 4).0);
    }

    #[test]
    fn generated_networks_validate() {
        assert!(gen_coloring(20, 60, 0.2, 1).unwrap().0.validate().is_valid());
        assert!(gen_coding(2, 10, 3, 0.2, 1).unwrap().bn.validate().is_valid());
        assert!(gen_grid(10, 10, 10, 1).unwrap().0.validate().is_valid());
        assert!(gen_random(80, 3, 8, 1).unwrap().0.validate().is_valid());
        for s in 0..20 {
            let cfg = SmallNetConfig { polytree: s % 2 == 0, ..Default::default() };
            assert!(gen_small(&cfg, s).0.validate().is_valid());
        }
    }

    #[test]
    fn coding_xor_rows() {
        let c = gen_coding(2, 10, 3, 0.2, 5).unwrap();
        let cpt = c.bn.cpt(10);
        assert_eq!(cpt.parents().len(), 3);
        assert_eq!(cpt.prob(1, &[1, 0, 0]), 1.0);
        assert_eq!(cpt.prob(0, &[1, 1, 0]), 1.0);
    }
}
