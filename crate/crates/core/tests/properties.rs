use proptest::prelude::*;

use zerobelief::analysis::{exact_zero_sets, ibp_zero_sets, interval_error_report};
use zerobelief::drac::{dual_graph_of, run_binary_ac, run_drac, DracMode};
use zerobelief::dualgraph::{DualJoinGraph, Schedule};
use zerobelief::flatten::{flatten, solutions, uniformize, verify_flat_equivalence};
use zerobelief::generators::{
    constraint_to_bayes, gen_binary_cn, gen_coding, gen_coloring, gen_coloring_with_parents, gen_grid, gen_random,
    gen_small, SmallNetConfig,
};
use zerobelief::ibp::{run_ibp, Ibp, IbpConfig, ZeroProvenance};
use zerobelief::model::uai::{read_bayes, write_bayes};
use zerobelief::model::{BayesNetwork, Evidence, Factor, Relation};
use zerobelief::oracle::{brute_force_posteriors, induced_width, min_degree_order, variable_elimination, Exact};

fn small(seed: u64) -> (BayesNetwork, Evidence) {
    gen_small(&SmallNetConfig { uniform_evidence: seed % 2 == 1, ..Default::default() }, seed)
}

fn factor_strategy() -> impl Strategy<Value = (Factor, Factor)> {
    (prop::collection::vec(0.0f64..1.0, 12), prop::collection::vec(0.0f64..1.0, 6)).prop_map(|(a, b)| {
        (Factor::new(vec![0, 1, 2], vec![2, 3, 2], a).unwrap(), Factor::new(vec![1, 3], vec![3, 2], b).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn factor_product_commutes_and_marginals_keep_mass((f, g) in factor_strategy()) {
        let fg = f.product(&g);
        let gf = g.product(&f).reorder(fg.scope());
        for (a, b) in fg.values().iter().zip(gf.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let m = fg.marginalize(&[1]);
        prop_assert!((m.sum() - fg.sum()).abs() < 1e-9);
        let mut n = fg.clone();
        if n.normalize() {
            prop_assert!((n.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn join_projects_into_operands(a in prop::collection::vec(prop::bool::ANY, 9), b in prop::collection::vec(prop::bool::ANY, 9)) {
        let d = vec![vec![0, 1, 2], vec![0, 1, 2]];
        let ra = Relation::from_predicate(vec![0, 1], &d, |t| a[t[0] * 3 + t[1]]);
        let rb = Relation::from_predicate(vec![1, 2], &d, |t| b[t[0] * 3 + t[1]]);
        let j = ra.join(&rb);
        let back = j.project(&[0, 1]);
        prop_assert!(back.tuples().iter().all(|t| ra.contains(t)));
        prop_assert_eq!(back.intersect(&ra), back.clone());
    }

    #[test]
    fn flat_network_has_the_positive_solutions(seed in any::<u64>()) {
        let (bn, e) = small(seed);
        prop_assert!(verify_flat_equivalence(&bn, &e).unwrap());
    }

    #[test]
    fn flattening_ignores_positive_magnitudes(seed in any::<u64>()) {
        let (bn, e) = small(seed);
        let u = uniformize(&bn);
        prop_assert_eq!(flatten(&u, &e), flatten(&bn, &e));
        prop_assert_eq!(&uniformize(&u), &u);
        let cn = flatten(&bn, &Evidence::new());
        for (r, c) in cn.relations().iter().zip(bn.cpts()) {
            prop_assert_eq!(r.len(), c.positive_rows());
        }
    }

    #[test]
    fn relational_fixpoint_keeps_every_solution(seed in any::<u64>()) {
        let (bn, e) = small(seed);
        let cn = flatten(&bn, &e);
        let g = dual_graph_of(&cn);
        let st = run_drac(&cn, &g, &Evidence::new(), DracMode::AllNeighbors, None).unwrap();
        prop_assert!(st.changing_sweeps <= st.bound.max(1));
        let rows = st.trace_rows();
        prop_assert!(rows.windows(2).all(|w| w[0].0 <= w[1].0));
        prop_assert!(rows.iter().all(|r| r.0 < st.steps));
        let all = solutions(&cn).unwrap();
        if st.is_consistent() {
            let mut reduced = cn.clone();
            reduced.set_domains(st.domains.clone());
            prop_assert_eq!(solutions(&reduced).unwrap(), all);
        } else {
            prop_assert!(all.is_empty());
        }
    }

    #[test]
    fn relational_fixpoint_is_order_and_mode_independent(seed in any::<u64>()) {
        let (bn, e) = small(seed);
        let cn = flatten(&bn, &e);
        let g = dual_graph_of(&cn);
        let fwd = run_drac(&cn, &g, &Evidence::new(), DracMode::AllNeighbors, None).unwrap();
        let rev_order: Vec<usize> = Schedule::by_id(&g).order().iter().rev().copied().collect();
        let rev = Schedule::from_order(&g, rev_order).unwrap();
        let back = run_drac(&cn, &g, &Evidence::new(), DracMode::AllNeighbors, Some(&rev)).unwrap();
        let noecho = run_drac(&cn, &g, &Evidence::new(), DracMode::NoEcho, None).unwrap();
        prop_assert_eq!(&fwd.relations, &back.relations);
        prop_assert_eq!(&fwd.relations, &noecho.relations);
        prop_assert_eq!(&fwd.domains, &noecho.domains);
    }

    #[test]
    fn relational_domains_match_binary_arc_consistency(seed in any::<u64>(), density in 0.2f64..0.9, tight in 0.1f64..0.7) {
        let cn = gen_binary_cn(7, 4, density, tight, seed);
        let g = dual_graph_of(&cn);
        let st = run_drac(&cn, &g, &Evidence::new(), DracMode::AllNeighbors, None).unwrap();
        let ac = run_binary_ac(&cn).unwrap();
        if ac.is_consistent() {
            prop_assert_eq!(st.domains, ac.domains);
        } else {
            prop_assert!(!st.is_consistent());
        }
    }

    #[test]
    fn elimination_agrees_with_enumeration(seed in any::<u64>()) {
        let (bn, e) = small(seed);
        let bf = brute_force_posteriors(&bn, &e).unwrap();
        let ve = variable_elimination(&bn, &e, None).unwrap();
        match (&bf, &ve.exact) {
            (Exact::Posteriors(a), Exact::Posteriors(b)) => {
                for (x, y) in a.variables.iter().flatten().zip(b.variables.iter().flatten()) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
                for (fa, fb) in a.families.iter().zip(&b.families) {
                    for (x, y) in fa.values().iter().zip(fb.values()) {
                        prop_assert!((x - y).abs() < 1e-9);
                    }
                }
                prop_assert!((a.log_evidence - b.log_evidence).abs() < 1e-9);
            }
            (Exact::ImpossibleEvidence, Exact::ImpossibleEvidence) => {}
            _ => prop_assert!(false, "oracles disagree on P(e) = 0"),
        }
    }

    #[test]
    fn one_iteration_is_exact_on_polytrees(seed in any::<u64>()) {
        let (bn, e) = gen_small(&SmallNetConfig { polytree: true, ..Default::default() }, seed);
        let g = DualJoinGraph::singleton_join_graph(&bn);
        prop_assert!(g.is_join_tree());
        let st = run_ibp(&bn, &g, &e, &IbpConfig::with_iterations(1)).unwrap();
        if let Exact::Posteriors(p) = brute_force_posteriors(&bn, &e).unwrap() {
            for v in 0..bn.num_vars() {
                let b = st.variable_beliefs[v].values_or_zeros(bn.variable(v).card());
                for (x, y) in b.iter().zip(&p.variables[v]) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn propagated_zeros_are_exact_without_evidence(seed in any::<u64>()) {
        let (bn, e) = gen_small(&SmallNetConfig { evidence_prob: 0.0, ..Default::default() }, seed);
        let g = DualJoinGraph::singleton_join_graph(&bn);
        let st = run_ibp(&bn, &g, &e, &IbpConfig::default()).unwrap();
        let Exact::Posteriors(p) = brute_force_posteriors(&bn, &e).unwrap() else { unreachable!() };
        let (iv, ifam) = ibp_zero_sets(&st);
        let (ev, efam) = exact_zero_sets(&bn, &e, &p);
        prop_assert!(iv.iter().all(|z| ev.contains(z)));
        prop_assert!(ifam.iter().all(|z| efam.contains(z)));
    }

    #[test]
    fn input_zeros_never_disappear(seed in any::<u64>()) {
        let (bn, e) = small(seed);
        let g = DualJoinGraph::singleton_join_graph(&bn);
        let mut engine = Ibp::new(&bn, &g, &e).unwrap();
        let step = IbpConfig { max_iterations: 1, stop_on_convergence: false, ..Default::default() };
        let mut prev = Vec::new();
        for _ in 0..8 {
            let st = engine.run(&step).unwrap();
            let now = st.zeros.variable_zeros(Some(ZeroProvenance::Input));
            prop_assert!(prev.iter().all(|z| now.contains(z)));
            prev = now;
        }
    }

    #[test]
    fn symmetric_priors_give_symmetric_beliefs(a in 0.05f64..0.45, eps in 0.0f64..0.3) {
        let (bn, e) = gen_coloring_with_parents(&[[a, a, 1.0 - 2.0 * a]; 3], &[(0, 1), (1, 2), (0, 2)], eps);
        let g = DualJoinGraph::singleton_join_graph(&bn);
        let st = run_ibp(&bn, &g, &e, &IbpConfig::default()).unwrap();
        for v in 0..3 {
            let b = st.variable_beliefs[v].values_or_zeros(3);
            prop_assert!((b[0] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn generators_are_valid_and_deterministic(seed in any::<u64>()) {
        let nets = vec![
            gen_coloring(6, 9, 0.1, seed).unwrap(),
            gen_grid(3, 4, 2, seed).unwrap(),
            gen_random(12, 3, 3, seed).unwrap(),
            small(seed),
        ];
        for (bn, e) in &nets {
            prop_assert!(bn.validate().is_valid());
            prop_assert!(bn.check_evidence(e).is_ok());
        }
        let c = gen_coding(2, 4, 3, 0.4, seed).unwrap();
        prop_assert!(c.bn.validate().is_valid());
        prop_assert_eq!(gen_coding(2, 4, 3, 0.4, seed).unwrap().evidence, c.evidence);
        prop_assert_eq!(&gen_grid(3, 4, 2, seed).unwrap().0, &nets[1].0);
        prop_assert_eq!(&gen_random(12, 3, 3, seed).unwrap(), &nets[2]);
    }

    #[test]
    fn constraint_encoding_keeps_solutions(seed in any::<u64>()) {
        let cn = gen_binary_cn(5, 3, 0.5, 0.4, seed);
        let (bn, e) = constraint_to_bayes(&cn);
        prop_assert!(bn.validate().is_valid());
        let n = cn.num_vars();
        let mut lifted: Vec<Vec<usize>> =
            solutions(&flatten(&bn, &e)).unwrap().into_iter().map(|s| s[..n].to_vec()).collect();
        lifted.dedup();
        prop_assert_eq!(lifted, solutions(&cn).unwrap());
    }

    #[test]
    fn interval_counts_cover_every_pair(pairs in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..200)) {
        let (ex, ap): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let r = interval_error_report(&ex, &ap, 0.05).unwrap();
        prop_assert_eq!(r.bins.iter().map(|b| b.exact_count).sum::<usize>(), r.total);
        prop_assert_eq!(r.bins.iter().map(|b| b.approx_count).sum::<usize>(), r.total);
        prop_assert_eq!(r.total, ex.len());
    }

    #[test]
    fn uai_text_round_trips(seed in any::<u64>()) {
        let (bn, _) = small(seed);
        let back = read_bayes(&write_bayes(&bn)).unwrap();
        prop_assert_eq!(back.cards(), bn.cards());
        for (a, b) in back.cpts().iter().zip(bn.cpts()) {
            prop_assert_eq!(a.table(), b.table());
        }
    }
}

fn x_graph(n: usize, edges: &[(usize, usize)]) -> (bool, bool) {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut side = vec![None; n];
    side[0] = Some(false);
    let mut stack = vec![0];
    let mut bipartite = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            match side[v] {
                None => {
                    side[v] = Some(!side[u].unwrap());
                    stack.push(v);
                }
                Some(s) => bipartite &= s != side[u].unwrap(),
            }
        }
    }
    (side.iter().all(Option::is_some), bipartite)
}

#[test]
fn noiseless_coloring_forces_the_third_color() {
    let mut checked = 0;
    for seed in 0..60 {
        let n_x = 4 + (seed as usize % 7);
        let (bn, e) = gen_coloring(n_x, 2 * n_x, 0.0, seed).unwrap();
        let edges: Vec<(usize, usize)> = (n_x..bn.num_vars()).map(|h| (bn.parents(h)[0], bn.parents(h)[1])).collect();
        let (connected, bipartite) = x_graph(n_x, &edges);
        if !connected {
            continue;
        }
        checked += 1;
        let mut cn = flatten(&bn, &e);
        for (h, x) in e.iter() {
            cn.restrict_domain(h, &[x]);
        }
        let sols = solutions(&cn).unwrap();
        if bipartite {
            // the two alternating 1/2 colorings survive as well
            assert_eq!(sols.len(), 3, "seed {seed}");
        } else {
            assert_eq!(sols.len(), 1, "seed {seed}");
        }
        assert!(sols.iter().any(|s| s[..n_x].iter().all(|&x| x == 2)));
    }
    assert!(checked > 20);
}

#[test]
fn grid_elimination_width_stays_small() {
    for seed in 0..5 {
        let (bn, e) = gen_grid(10, 10, 0, seed).unwrap();
        let order = min_degree_order(&bn, &e);
        assert!(induced_width(&bn, &e, &order) <= 15);
    }
}
