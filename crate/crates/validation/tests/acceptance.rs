//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to
//! stderr (unbuffered, so it shows even when output is captured).

use std::io::Write;
use std::time::{Duration, Instant};

use zerobelief::analysis::{
    completeness_gap, lockstep_compare, precision_decay_demo, soundness_audit, zero_bound, ibp_zero_sets,
    exact_zero_sets, Verdict,
};
use zerobelief::drac::{dual_graph_of, max_solution, run_binary_ac, run_drac, DracMode};
use zerobelief::dualgraph::{DualJoinGraph, Schedule};
use zerobelief::experiment::{experiment_intervals, experiment_table1, Family, IntervalParams, Table1Params};
use zerobelief::flatten::flatten;
use zerobelief::generators::{ex22, ex44, ex44_binary, ex22_binary, ex46, gen_binary_cn, gen_small, SmallNetConfig};
use zerobelief::ibp::{run_ibp, IbpConfig, ZeroProvenance};
use zerobelief::model::{ConstraintNetwork, Evidence, Variable};
use zerobelief::oracle::{brute_force_posteriors, Exact};

/// Wall-clock budgets.
const FIXTURE_BUDGET: Duration = Duration::from_secs(1);
const LOCKSTEP_BUDGET: Duration = Duration::from_secs(120);
const AUDIT_BUDGET: Duration = Duration::from_secs(300);
const POLYTREE_BUDGET: Duration = Duration::from_secs(120);
const CODING_BUDGET: Duration = Duration::from_secs(300);
const CROSS_CHECK_BUDGET: Duration = Duration::from_secs(60);

/// Random networks per property sweep.
const RANDOM_NETS: u64 = 500;
const POLYTREES: u64 = 200;

/// One propagation iteration against the oracle on a polytree.
const POLYTREE_TOL: f64 = 1e-9;
/// Mean absolute error targets of the coloring table: (n_h, target, half-width).
const TABLE_TARGETS: [(usize, f64, f64); 3] = [(40, 0.44, 0.05), (60, 0.45, 0.05), (80, 0.41, 0.06)];
/// Noisy coloring error must stay at least this high.
const TABLE_NOISY_FLOOR: f64 = 0.2;
/// Final belief of the decay demo, per component.
const DECAY_TOL: f64 = 1e-12;
/// Extreme-interval recall and precision at the lowest channel noise.
const CODING_EXTREME_TOL: f64 = 1e-4;

fn report(n: usize, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "acceptance {n:02} {verdict} {name}: {detail}");
}

fn labels(vars: &[Variable], v: usize, values: &[usize]) -> Vec<String> {
    values.iter().map(|&x| vars[v].domain[x].clone()).collect()
}

fn lab(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn small_net(seed: u64) -> (zerobelief::model::BayesNetwork, Evidence) {
    let cfg = SmallNetConfig { uniform_evidence: seed % 2 == 1, ..Default::default() };
    gen_small(&cfg, seed)
}

#[test]
fn ac01_unique_solution_by_relational_consistency() {
    let t0 = Instant::now();
    let cn = ex22();
    let g = dual_graph_of(&cn);
    let st = run_drac(&cn, &g, &Evidence::new(), DracMode::AllNeighbors, None).unwrap();
    let elapsed = t0.elapsed();
    let got: Vec<Vec<String>> = (0..cn.num_vars()).map(|v| labels(cn.variables(), v, &st.domains[v])).collect();
    let want: Vec<Vec<String>> = ["1", "3", "2", "2", "1", "3"].iter().map(|s| lab(&[s])).collect();
    let singletons = st.relations.iter().all(|r| r.len() == 1);
    let pass = got == want && singletons && elapsed < FIXTURE_BUDGET;
    report(1, "six-variable coloring", pass, &format!("domains {got:?}, singleton relations {singletons}, {elapsed:?}"));
    assert!(pass);
}

#[test]
fn ac02_zero_set_misses_forced_values() {
    let t0 = Instant::now();
    let (bn, e) = ex44([1.0 / 3.0; 3], 0.0);
    let g = DualJoinGraph::singleton_join_graph(&bn);
    let cfg = IbpConfig { max_iterations: 50, stop_on_convergence: false, ..Default::default() };
    let st = run_ibp(&bn, &g, &e, &cfg).unwrap();
    let Exact::Posteriors(p) = brute_force_posteriors(&bn, &e).unwrap() else { panic!("evidence is possible") };
    let forced = (0..3).all(|x| (p.variables[x][2] - 1.0).abs() < 1e-12);
    let (gap, _) = completeness_gap(&bn, &e, &st, &p);
    let want: Vec<(usize, usize)> = (0..3).flat_map(|x| [(x, 0), (x, 1)]).collect();
    let elapsed = t0.elapsed();
    let pass = st.zeros.is_empty() && forced && gap == want && elapsed < FIXTURE_BUDGET;
    report(
        2,
        "three-variable coloring",
        pass,
        &format!("ibp zeros {}, exact P(X=3)=1 {forced}, gap {gap:?}, {elapsed:?}", st.zeros.len()),
    );
    assert!(pass);
}

#[test]
fn ac03_max_closed_network() {
    let t0 = Instant::now();
    let bn = ex46();
    let cn = flatten(&bn, &Evidence::new());
    let g = dual_graph_of(&cn);
    let st = run_drac(&cn, &g, &Evidence::new(), DracMode::AllNeighbors, None).unwrap();
    let vars = cn.variables();
    let got: Vec<Vec<String>> = (0..5).map(|v| labels(vars, v, &st.domains[v])).collect();
    let want = vec![lab(&["1"]), lab(&["4"]), lab(&["3", "4", "5"]), lab(&["4", "5"]), lab(&["2", "3"])];
    let ms = max_solution(&cn).unwrap();
    let ms_labels: Option<Vec<String>> =
        ms.assignment.as_ref().map(|a| a.iter().enumerate().map(|(v, &x)| vars[v].domain[x].clone()).collect());
    let ms_ok = ms_labels == Some(lab(&["1", "4", "5", "5", "3"])) && ms.satisfies && ms.max_closed;

    let gd = DualJoinGraph::singleton_join_graph(&bn);
    let ibp = run_ibp(&bn, &gd, &Evidence::new(), &IbpConfig::with_iterations(100)).unwrap();
    let Exact::Posteriors(p) = brute_force_posteriors(&bn, &Evidence::new()).unwrap() else { panic!("no evidence") };
    let (gap, _) = completeness_gap(&bn, &Evidence::new(), &ibp, &p);
    let gap_labels: Vec<(String, String)> =
        gap.iter().map(|&(v, x)| (vars[v].name.clone(), vars[v].domain[x].clone())).collect();
    let want_gap = vec![("X".to_string(), "3".to_string()), ("X".to_string(), "4".to_string())];
    let elapsed = t0.elapsed();
    let pass = got == want && ms_ok && gap_labels == want_gap && elapsed < FIXTURE_BUDGET;
    report(
        3,
        "max-closed network",
        pass,
        &format!("domains {got:?}, max solution {ms_labels:?} ok {ms_ok}, ibp misses {gap_labels:?}, {elapsed:?}"),
    );
    assert!(pass, "domains {got:?} (expected {want:?}); ibp misses {gap_labels:?} (expected {want_gap:?})");
}

#[test]
fn ac04_lockstep_on_random_networks() {
    let t0 = Instant::now();
    let (mut mismatched, mut underflow, mut max_sweeps) = (Vec::new(), 0, 0);
    for seed in 0..RANDOM_NETS {
        let (bn, e) = small_net(seed);
        let g = DualJoinGraph::singleton_join_graph(&bn);
        let s = Schedule::topological(&bn, &g);
        let r = lockstep_compare(&bn, &e, &g, &s).unwrap();
        if r.verdict != Verdict::Match {
            mismatched.push(seed);
        }
        underflow += r.underflow_divergences.len();
        max_sweeps = max_sweeps.max(r.sweeps);
    }
    let elapsed = t0.elapsed();
    let pass = mismatched.is_empty() && elapsed < LOCKSTEP_BUDGET;
    report(
        4,
        "lockstep zeros vs removed tuples",
        pass,
        &format!("{RANDOM_NETS} networks, mismatching seeds {mismatched:?}, underflow divergences {underflow}, max sweeps {max_sweeps}, {elapsed:?}"),
    );
    assert!(pass);
}

#[test]
fn ac05_soundness_and_settling() {
    let t0 = Instant::now();
    let (mut failing, mut impossible, mut latest) = (Vec::new(), 0, 0);
    for seed in 0..RANDOM_NETS {
        let (bn, e) = small_net(seed);
        let g = DualJoinGraph::singleton_join_graph(&bn);
        let r = soundness_audit(&bn, &e, &g, zero_bound(&bn) + 1, false).unwrap();
        if !r.passes() {
            failing.push(seed);
        }
        impossible += r.impossible_evidence as usize;
        latest = latest.max(r.last_input_zero_change);
    }
    let elapsed = t0.elapsed();
    let pass = failing.is_empty() && elapsed < AUDIT_BUDGET;
    report(
        5,
        "zero soundness and t*r settling",
        pass,
        &format!("{RANDOM_NETS} networks ({impossible} impossible evidence), failing seeds {failing:?}, latest zero change {latest}, {elapsed:?}"),
    );
    assert!(pass);
}

#[test]
fn ac06_polytrees_exact_and_prior_zeros_complete() {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..POLYTREES {
        let cfg = SmallNetConfig { polytree: true, ..Default::default() };
        let (bn, e) = gen_small(&cfg, seed);
        let g = DualJoinGraph::singleton_join_graph(&bn);
        let st = run_ibp(&bn, &g, &e, &IbpConfig::with_iterations(1)).unwrap();
        let Exact::Posteriors(p) = brute_force_posteriors(&bn, &e).unwrap() else { continue };
        for v in 0..bn.num_vars() {
            let b = st.variable_beliefs[v].values_or_zeros(bn.variable(v).card());
            for (x, y) in b.iter().zip(&p.variables[v]) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    let (mut var_differ, mut fam_differ) = (Vec::new(), Vec::new());
    for seed in 0..POLYTREES {
        let cfg = SmallNetConfig { evidence_prob: 0.0, ..Default::default() };
        let (bn, e) = gen_small(&cfg, 10_000 + seed);
        let g = DualJoinGraph::singleton_join_graph(&bn);
        let st = run_ibp(&bn, &g, &e, &IbpConfig::default()).unwrap();
        let Exact::Posteriors(p) = brute_force_posteriors(&bn, &e).unwrap() else { panic!("no evidence") };
        let (iv, ifam) = ibp_zero_sets(&st);
        let (ev, efam) = exact_zero_sets(&bn, &e, &p);
        if iv != ev {
            var_differ.push(10_000 + seed);
        }
        if ifam != efam {
            fam_differ.push(10_000 + seed);
        }
    }
    let elapsed = t0.elapsed();
    let pass = worst <= POLYTREE_TOL && var_differ.is_empty() && fam_differ.is_empty() && elapsed < POLYTREE_BUDGET;
    report(
        6,
        "polytree exactness and prior zero completeness",
        pass,
        &format!(
            "max polytree error {worst:.2e}; no-evidence zero sets differ on {} networks for values {var_differ:?}, on {} for family tuples; {elapsed:?}",
            var_differ.len() + fam_differ.iter().filter(|s| !var_differ.contains(s)).count(),
            fam_differ.len()
        ),
    );
    assert!(pass);
}

#[test]
fn ac07_coloring_table_errors() {
    let t0 = Instant::now();
    let rows = experiment_table1(&Table1Params::default()).unwrap();
    let mae = |eps: f64, h: usize| rows.iter().find(|r| r.epsilon == eps && r.n_h == h).unwrap().mean_abs_error;
    let mut checks: Vec<(String, f64, bool)> = TABLE_TARGETS
        .iter()
        .map(|&(h, target, tol)| (format!("eps=0 H={h}"), mae(0.0, h), (mae(0.0, h) - target).abs() <= tol))
        .collect();
    for h in [60, 80] {
        checks.push((format!("eps=0.2 H={h}"), mae(0.2, h), mae(0.2, h) >= TABLE_NOISY_FLOOR));
    }
    let pass = checks.iter().all(|c| c.2);
    let detail: Vec<String> = checks.iter().map(|(n, v, ok)| format!("{n} {v:.4} {}", if *ok { "ok" } else { "out" })).collect();
    let widths: Vec<String> = rows.iter().filter(|r| r.epsilon == 0.0).map(|r| format!("{:.1}", r.mean_induced_width)).collect();
    report(
        7,
        "coloring error table (seed 1)",
        pass,
        &format!("{}; mean w* {widths:?}; {:?}", detail.join(", "), t0.elapsed()),
    );
    assert!(pass, "{detail:?}");
}

#[test]
fn ac08_belief_decays_to_underflow() {
    let r = precision_decay_demo([0.45, 0.45, 0.10], 5000).unwrap();
    let fin = &r.final_belief;
    let close = fin.len() == 3 && (fin[0] - 0.5).abs() <= DECAY_TOL && (fin[1] - 0.5).abs() <= DECAY_TOL && fin[2] == 0.0;
    let exact_ok = r.exact == vec![0.0, 0.0, 1.0];
    let pass = r.monotone
        && r.first_zero_iteration.is_some()
        && r.provenance == Some(ZeroProvenance::Underflow)
        && close
        && exact_ok;
    report(
        8,
        "finite-precision decay",
        pass,
        &format!(
            "monotone {}, zero at iteration {:?} ({:?}), final {fin:?}, exact {:?}",
            r.monotone, r.first_zero_iteration, r.provenance, r.exact
        ),
    );
    assert!(pass);
}

#[test]
fn ac09_coding_extreme_interval() {
    let t0 = Instant::now();
    let res = experiment_intervals(&IntervalParams::new(Family::Coding)).unwrap();
    let low = &res[0].report.bins[0];
    let recall = low.recall_error.unwrap_or(0.0);
    let precision = low.precision_error.unwrap_or(0.0);
    let maes: Vec<f64> = res.iter().map(|r| r.report.mean_abs_error).collect();
    let increasing = maes.windows(2).all(|w| w[1] > w[0]);
    let elapsed = t0.elapsed();
    let pass = recall < CODING_EXTREME_TOL && precision < CODING_EXTREME_TOL && increasing && elapsed < CODING_BUDGET;
    report(
        9,
        "coding extreme interval",
        pass,
        &format!("sigma 0.2 [0,0.05) recall {recall:.2e} precision {precision:.2e}; mae by sigma {}; {elapsed:?}", maes.iter().map(|m| format!("{m:.2e}")).collect::<Vec<_>>().join(" < ")),
    );
    assert!(pass);
}

#[test]
fn ac10_relational_matches_binary_consistency() {
    let t0 = Instant::now();
    let mut nets: Vec<(String, ConstraintNetwork)> =
        vec![("ex2.2-binary".into(), ex22_binary()), ("ex4.4-binary".into(), ex44_binary())];
    for seed in 0..100 {
        nets.push((format!("random {seed}"), gen_binary_cn(6, 4, 0.5, 0.4, seed)));
    }
    let mut bad = Vec::new();
    for (name, cn) in &nets {
        let g = dual_graph_of(cn);
        let with_echo = run_drac(cn, &g, &Evidence::new(), DracMode::AllNeighbors, None).unwrap();
        let noecho = run_drac(cn, &g, &Evidence::new(), DracMode::NoEcho, None).unwrap();
        let ac = run_binary_ac(cn).unwrap();
        let same_ac = if ac.is_consistent() { with_echo.domains == ac.domains } else { !with_echo.is_consistent() };
        if !same_ac || with_echo.relations != noecho.relations || with_echo.domains != noecho.domains {
            bad.push(name.clone());
        }
    }
    let elapsed = t0.elapsed();
    let pass = bad.is_empty() && elapsed < CROSS_CHECK_BUDGET;
    report(
        10,
        "relational vs binary arc-consistency",
        pass,
        &format!("{} networks, disagreements {bad:?}, {elapsed:?}", nets.len()),
    );
    assert!(pass);
}
