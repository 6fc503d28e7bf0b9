use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use zerobelief::analysis::{interval_error_report, lockstep_compare, soundness_audit, zero_bound, Verdict, ZeroItem};
use zerobelief::drac::{dual_graph_of, run_drac, DracMode};
use zerobelief::dualgraph::{DualJoinGraph, Schedule};
use zerobelief::experiment::{experiment_intervals, experiment_table1, Family, IntervalParams, Table1Params};
use zerobelief::flatten::flatten;
use zerobelief::generators::{fixture, gen_coding, gen_coloring, gen_grid, gen_random, Fixture};
use zerobelief::ibp::{Belief, Ibp, IbpConfig, Mode};
use zerobelief::model::uai::{read_bayes, write_bayes, write_constraint, write_evidence};
use zerobelief::model::{BayesNetwork, Evidence};
use zerobelief::oracle::{variable_elimination, Exact};

use crate::args::*;
use crate::output::{csv_in, csv_out, load_bayes, load_constraint, load_evidence, read_text, tuple, tuples, write_text};

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// A lockstep mismatch or soundness violation was found.
    Violation,
}

fn bayes_graph(bn: &BayesNetwork, spec: &str) -> Result<DualJoinGraph> {
    Ok(match spec {
        "singleton" => DualJoinGraph::singleton_join_graph(bn),
        "dual" => DualJoinGraph::build_dual_graph(&bn.family_scopes()),
        path => DualJoinGraph::from_text(&read_text(Path::new(path))?).with_context(|| format!("in {path}"))?,
    })
}

pub fn validate(a: &ValidateArgs) -> Result<Outcome> {
    if let Some(cn) = &a.cn {
        let cn = load_constraint(cn)?;
        let e = load_evidence(a.evid.as_deref())?;
        if !e.is_consistent_with(&cn.cards()) {
            bail!("evidence does not fit the network");
        }
        println!("valid constraint network: {} variables, {} relations", cn.num_vars(), cn.relations().len());
        return Ok(Outcome::Ok);
    }
    let net = a.net.as_ref().expect("clap requires --net or --cn");
    let bn = read_bayes(&read_text(net)?).with_context(|| format!("in {}", net.display()))?;
    let e = load_evidence(a.evid.as_deref())?;
    bn.check_evidence(&e).context("evidence does not fit the network")?;
    let report = bn.validate();
    for v in &report.violations {
        println!("{}: {}", v.kind, v.message);
    }
    if !report.is_valid() {
        bail!("{} problem(s) found", report.violations.len());
    }
    println!("valid Bayesian network: {} variables", bn.num_vars());
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct BeliefRow<'a> {
    variable: usize,
    value: usize,
    belief: f64,
    is_zero: bool,
    zero_iteration: Option<usize>,
    zero_provenance: Option<&'a str>,
}

pub fn ibp(a: &IbpArgs) -> Result<Outcome> {
    let (bn, e) = load_bayes(&a.net.net, a.net.evid.as_deref())?;
    let g = bayes_graph(&bn, &a.graph)?;
    let mode = match a.mode {
        ExecMode::Sequential => Mode::Sequential,
        ExecMode::Synchronous => Mode::Synchronous,
    };
    let config = IbpConfig {
        max_iterations: a.iters,
        tolerance: a.tolerance,
        mode,
        stop_on_convergence: !a.no_early_stop,
        ..Default::default()
    };
    let st = Ibp::new(&bn, &g, &e)?.run(&config)?;
    let mut w = csv_out(a.out.as_deref(), "ibp", None)?;
    for v in 0..bn.num_vars() {
        let k = bn.variable(v).card();
        let values = st.variable_beliefs[v].values_or_zeros(k);
        for (x, &b) in values.iter().enumerate() {
            let tag = st.zeros.variables[v].get(&x);
            w.serialize(BeliefRow {
                variable: v,
                value: x,
                belief: b,
                is_zero: b == 0.0,
                zero_iteration: tag.map(|t| t.first_iteration),
                zero_provenance: tag.map(|t| t.provenance.as_str()),
            })?;
        }
    }
    w.flush()?;
    if let Some(path) = &a.log {
        let mut lw = csv_out(Some(path), "ibp", None)?;
        for row in &st.log {
            lw.serialize(row)?;
        }
        lw.flush()?;
    }
    if st.variable_beliefs.iter().any(Belief::is_all_zero) {
        eprintln!("every belief of some variable is zero: the evidence is inconsistent with the zero pattern");
    }
    eprintln!(
        "{} iterations, converged {}, {} zeros (last change at iteration {})",
        st.iteration,
        st.values_converged,
        st.zeros.len(),
        st.last_zero_change
    );
    Ok(Outcome::Ok)
}

pub fn drac(a: &DracArgs) -> Result<Outcome> {
    let cn = load_constraint(&a.cn)?;
    let e = load_evidence(a.evid.as_deref())?;
    let g = match a.graph.as_str() {
        "dual" => dual_graph_of(&cn),
        path => DualJoinGraph::from_text(&read_text(Path::new(path))?).with_context(|| format!("in {path}"))?,
    };
    let mode = match a.mode {
        AcMode::All => DracMode::AllNeighbors,
        AcMode::Noecho => DracMode::NoEcho,
    };
    let st = run_drac(&cn, &g, &e, mode, None)?;
    let mut w = csv_out(a.out.as_deref(), "drac", None)?;
    w.write_record(["variable", "value", "label"])?;
    for (v, d) in st.domains.iter().enumerate() {
        for &x in d {
            w.write_record([v.to_string(), x.to_string(), cn.variables()[v].domain[x].clone()])?;
        }
    }
    w.flush()?;
    if let Some(path) = &a.trace {
        let mut tw = csv_out(Some(path), "drac", None)?;
        tw.write_record(["step", "node", "removed_tuple"])?;
        for (step, node, t) in st.trace_rows() {
            tw.write_record([step.to_string(), node.to_string(), tuple(&t)])?;
        }
        tw.flush()?;
    }
    eprintln!(
        "{} sweeps ({} changing, bound {}), {}",
        st.iterations,
        st.changing_sweeps,
        st.bound,
        if st.is_consistent() { "consistent" } else { "inconsistent: a domain or relation emptied" }
    );
    Ok(Outcome::Ok)
}

pub fn flatten_cmd(a: &FlattenArgs) -> Result<Outcome> {
    let (bn, e) = load_bayes(&a.net.net, a.net.evid.as_deref())?;
    let text = write_constraint(&flatten(&bn, &e));
    match &a.out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(Outcome::Ok)
}

pub fn exact(a: &ExactArgs) -> Result<Outcome> {
    let (bn, e) = load_bayes(&a.net.net, a.net.evid.as_deref())?;
    let order: Option<Vec<usize>> = match &a.order {
        Some(p) => Some(
            read_text(p)?
                .split_whitespace()
                .map(|t| t.parse().with_context(|| format!("bad variable id `{t}` in {}", p.display())))
                .collect::<Result<_>>()?,
        ),
        None => None,
    };
    let ve = variable_elimination(&bn, &e, order.as_deref())?;
    let mut w = csv_out(a.out.as_deref(), "exact", None)?;
    w.write_record(["variable", "value", "belief"])?;
    match &ve.exact {
        Exact::Posteriors(p) => {
            for (v, d) in p.variables.iter().enumerate() {
                for (x, b) in d.iter().enumerate() {
                    w.write_record([v.to_string(), x.to_string(), b.to_string()])?;
                }
            }
            eprintln!("induced width {}, log P(e) = {}", ve.induced_width, p.log_evidence);
        }
        Exact::ImpossibleEvidence => eprintln!("the evidence has probability zero"),
    }
    w.flush()?;
    Ok(Outcome::Ok)
}

pub fn compare(a: &CompareArgs) -> Result<Outcome> {
    let (bn, e) = load_bayes(&a.net.net, a.net.evid.as_deref())?;
    let g = bayes_graph(&bn, &a.graph)?;
    let s = match a.schedule {
        ScheduleKind::Topological => Schedule::topological(&bn, &g),
        ScheduleKind::ById => Schedule::by_id(&g),
    };
    let r = lockstep_compare(&bn, &e, &g, &s)?;
    let mut w = csv_out(a.out.as_deref(), "compare", None)?;
    w.write_record([
        "step",
        "from",
        "to",
        "ibp_message_zeros",
        "drac_message_missing",
        "ibp_node_zeros",
        "drac_node_missing",
    ])?;
    for st in &r.steps {
        w.write_record([
            st.step.to_string(),
            st.from.to_string(),
            st.to.to_string(),
            tuples(&st.ibp_message_zeros),
            tuples(&st.drac_message_missing),
            tuples(&st.ibp_node_zeros),
            tuples(&st.drac_node_missing),
        ])?;
    }
    w.flush()?;
    for m in &r.mismatches {
        eprintln!(
            "mismatch at step {} ({} -> {}, {:?}): propagation only [{}], arc-consistency only [{}]",
            m.step,
            m.from,
            m.to,
            m.target,
            tuples(&m.ibp_only),
            tuples(&m.drac_only)
        );
    }
    eprintln!(
        "{} steps over {} sweeps, {} underflow divergences, verdict {:?}",
        r.steps.len(),
        r.sweeps,
        r.underflow_divergences.len(),
        r.verdict
    );
    Ok(if r.verdict == Verdict::Match { Outcome::Ok } else { Outcome::Violation })
}

pub fn audit(a: &AuditArgs) -> Result<Outcome> {
    let (bn, e) = load_bayes(&a.net.net, a.net.evid.as_deref())?;
    let g = bayes_graph(&bn, &a.graph)?;
    let iters = a.iters.unwrap_or_else(|| zero_bound(&bn) + 1);
    let r = soundness_audit(&bn, &e, &g, iters, a.strict)?;
    let mut w = csv_out(a.out.as_deref(), "audit", None)?;
    w.write_record(["kind", "item", "index", "tuple", "provenance", "exact"])?;
    for v in &r.violations {
        let (item, index, t) = match &v.item {
            ZeroItem::Variable { var, value } => ("variable", *var, vec![*value]),
            ZeroItem::Family { family, tuple } => ("family", *family, tuple.clone()),
        };
        w.write_record([
            "violation".to_string(),
            item.to_string(),
            index.to_string(),
            tuple(&t),
            v.provenance.as_str().to_string(),
            v.exact.to_string(),
        ])?;
    }
    for (var, x) in &r.variable_gap {
        w.write_record(["gap", "variable", &var.to_string(), &x.to_string(), "", "0"])?;
    }
    for (f, t) in &r.family_gap {
        w.write_record(["gap", "family", &f.to_string(), &tuple(t), "", "0"])?;
    }
    w.flush()?;
    eprintln!(
        "{} iterations: {} violations, {} underflow zeros, gap {} values / {} tuples, last zero change {} ({} excluding underflow, bound {}){}",
        r.iterations,
        r.violations.len(),
        r.underflow_zeros,
        r.variable_gap.len(),
        r.family_gap.len(),
        r.last_zero_change,
        r.last_input_zero_change,
        r.bound,
        if r.impossible_evidence { ", evidence impossible" } else { "" }
    );
    Ok(if r.passes() { Outcome::Ok } else { Outcome::Violation })
}

#[derive(Deserialize)]
struct InBelief {
    variable: usize,
    value: usize,
    belief: f64,
}

fn read_beliefs(path: &Path) -> Result<BTreeMap<(usize, usize), f64>> {
    let mut out = BTreeMap::new();
    for row in csv_in(path)?.deserialize() {
        let r: InBelief = row.with_context(|| format!("in {}", path.display()))?;
        out.insert((r.variable, r.value), r.belief);
    }
    Ok(out)
}

pub fn report(a: &ReportArgs) -> Result<Outcome> {
    let e = load_evidence(a.evid.as_deref())?;
    let mut exact = read_beliefs(&a.exact)?;
    let mut approx = read_beliefs(&a.approx)?;
    exact.retain(|(v, _), _| !e.contains(*v));
    approx.retain(|(v, _), _| !e.contains(*v));
    if exact.len() != approx.len() || exact.keys().any(|k| !approx.contains_key(k)) {
        bail!("the two belief files cover different (variable, value) pairs");
    }
    let ex: Vec<f64> = exact.values().copied().collect();
    let ap: Vec<f64> = approx.values().copied().collect();
    let r = interval_error_report(&ex, &ap, a.bin_width)?;
    let bins = if a.half { r.lower_half() } else { r.bins.clone() };
    let mut w = csv_out(a.out.as_deref(), "report", None)?;
    for b in &bins {
        w.serialize(b)?;
    }
    w.flush()?;
    eprintln!("{} pairs, mean absolute error {}", r.total, r.mean_abs_error);
    Ok(Outcome::Ok)
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

#[derive(Serialize)]
struct GenManifest<'a> {
    tool: &'static str,
    version: &'static str,
    params: &'a GenArgs,
    files: Vec<String>,
}

pub fn gen(a: &GenArgs) -> Result<Outcome> {
    let mut files = Vec::new();
    let mut put = |ext: &str, text: String| -> Result<()> {
        let p = with_ext(&a.out, ext);
        write_text(&p, &text)?;
        files.push(p.display().to_string());
        Ok(())
    };
    let bayes = |bn: &BayesNetwork, e: &Evidence, put: &mut dyn FnMut(&str, String) -> Result<()>| -> Result<()> {
        put("uai", format!("# zerobelief gen seed={}\n{}", a.seed, write_bayes(bn)))?;
        put("evid", format!("# zerobelief gen seed={}\n{}", a.seed, write_evidence(e)))
    };
    match a.family {
        GenFamily::Coloring => {
            let (bn, e) = gen_coloring(a.n_x, a.n_h, a.epsilon, a.seed)?;
            bayes(&bn, &e, &mut put)?;
        }
        GenFamily::Coding => {
            let c = gen_coding(a.layers, a.width, a.parents_per_bit, a.sigma, a.seed)?;
            bayes(&c.bn, &c.evidence, &mut put)?;
            let bits: Vec<String> = c.truth.iter().map(|b| b.to_string()).collect();
            put("truth", format!("# zerobelief gen seed={}\n{}\n{}\n", a.seed, bits.len(), bits.join(" ")))?;
        }
        GenFamily::Grid => {
            let (bn, e) = gen_grid(a.rows, a.cols, a.evidence, a.seed)?;
            bayes(&bn, &e, &mut put)?;
        }
        GenFamily::Random => {
            let (bn, e) = gen_random(a.n, a.max_parents, a.evidence, a.seed)?;
            bayes(&bn, &e, &mut put)?;
        }
        GenFamily::Fixture => {
            let name = a.name.as_deref().context("--name is required for fixtures")?;
            match fixture(name)? {
                Fixture::Bayes { bn, evidence } => bayes(&bn, &evidence, &mut put)?,
                Fixture::Constraint { cn } => put("cn", format!("# zerobelief gen seed={}\n{}", a.seed, write_constraint(&cn)))?,
            }
        }
    }
    let json_path = with_ext(&a.out, "json");
    files.push(json_path.display().to_string());
    let m = GenManifest { tool: "zerobelief", version: env!("CARGO_PKG_VERSION"), params: a, files };
    write_text(&json_path, &serde_json::to_string_pretty(&m)?)?;
    for f in &m.files {
        eprintln!("wrote {f}");
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct BinRow {
    family: Family,
    level: f64,
    lo: f64,
    hi: f64,
    exact_count: usize,
    approx_count: usize,
    recall_error: Option<f64>,
    precision_error: Option<f64>,
}

#[derive(Serialize)]
struct SummaryRow {
    family: Family,
    level: f64,
    instances: usize,
    skipped: usize,
    total: usize,
    mean_abs_error: f64,
    ibp_ber: Option<f64>,
    exact_ber: Option<f64>,
}

pub fn experiment(a: &ExperimentArgs) -> Result<Outcome> {
    match &a.which {
        Experiment::Table1(t) => {
            let p = Table1Params {
                n_x: t.n_x,
                n_h: t.n_h.clone(),
                epsilons: t.epsilons.clone(),
                instances: t.instances,
                iterations: t.iterations,
                seed: t.seed,
            };
            let rows = experiment_table1(&p)?;
            let mut w = csv_out(t.out.as_deref(), "experiment table1", Some(t.seed))?;
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Experiment::Intervals(t) => {
            let family = match t.family {
                IntervalFamily::Coding => Family::Coding,
                IntervalFamily::Grid => Family::Grid,
                IntervalFamily::Random => Family::Random,
            };
            let mut p = IntervalParams::new(family);
            if let Some(l) = &t.levels {
                p.levels = l.clone();
            }
            p.instances = t.instances;
            p.iterations = t.iterations;
            p.bin_width = t.bin_width;
            p.seed = t.seed;
            p.coding_layers = t.layers;
            p.coding_width = t.width;
            p.grid_side = t.grid_side;
            p.random_n = t.random_n;
            let res = experiment_intervals(&p)?;
            let mut w = csv_out(t.out.as_deref(), "experiment intervals", Some(t.seed))?;
            for r in &res {
                for b in &r.report.bins {
                    w.serialize(BinRow {
                        family,
                        level: r.level,
                        lo: b.lo,
                        hi: b.hi,
                        exact_count: b.exact_count,
                        approx_count: b.approx_count,
                        recall_error: b.recall_error,
                        precision_error: b.precision_error,
                    })?;
                }
            }
            w.flush()?;
            let summary: Vec<SummaryRow> = res
                .iter()
                .map(|r| SummaryRow {
                    family,
                    level: r.level,
                    instances: r.instances,
                    skipped: r.skipped,
                    total: r.report.total,
                    mean_abs_error: r.report.mean_abs_error,
                    ibp_ber: r.ibp_ber.as_ref().map(|b| b.rate),
                    exact_ber: r.exact_ber.as_ref().map(|b| b.rate),
                })
                .collect();
            if let Some(path) = &t.summary {
                let mut sw = csv_out(Some(path), "experiment intervals", Some(t.seed))?;
                for s in &summary {
                    sw.serialize(s)?;
                }
                sw.flush()?;
            }
            for s in &summary {
                eprintln!(
                    "level {}: {} instances ({} skipped), mean absolute error {}",
                    s.level, s.instances, s.skipped, s.mean_abs_error
                );
            }
        }
    }
    Ok(Outcome::Ok)
}
