use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use zerobelief::generators::ex44;
use zerobelief::model::uai::{write_bayes, write_evidence};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zerobelief")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

fn gen_fixture(dir: &TempDir, name: &str) -> String {
    let prefix = p(dir, name);
    let o = run(&["gen", "--family", "fixture", "--name", name, "--out", &prefix]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    prefix
}

fn data_lines(path: &str) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["ibp"])), 1);
    assert_eq!(code(&run(&["ibp", "--net", "/nonexistent/file.uai"])), 1);
}

#[test]
fn beliefs_csv_has_the_documented_columns() {
    let dir = TempDir::new().unwrap();
    let pre = gen_fixture(&dir, "ex4.4");
    let out = p(&dir, "b.csv");
    let log = p(&dir, "log.csv");
    let o = run(&["ibp", "--net", &format!("{pre}.uai"), "--evid", &format!("{pre}.evid"), "--iters", "50", "-o", &out, "--log", &log]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# zerobelief ibp seed="));
    let lines = data_lines(&out);
    assert_eq!(lines[0], "variable,value,belief,is_zero,zero_iteration,zero_provenance");
    assert_eq!(lines.len(), 1 + 3 * 3 + 3 * 2);
    assert!(lines[1..10].iter().all(|l| l.contains(",false,")));
    assert!(data_lines(&log).len() > 1);
}

#[test]
fn audit_reports_the_gap_and_passes() {
    let dir = TempDir::new().unwrap();
    let pre = gen_fixture(&dir, "ex4.4");
    let out = p(&dir, "a.csv");
    let o = run(&["audit", "--net", &format!("{pre}.uai"), "--evid", &format!("{pre}.evid"), "-o", &out]);
    assert_eq!(code(&o), 0);
    let gaps = data_lines(&out).iter().filter(|l| l.starts_with("gap,variable")).count();
    assert_eq!(gaps, 6);
}

#[test]
fn strict_audit_flags_underflow_zeros() {
    let dir = TempDir::new().unwrap();
    let (bn, e) = ex44([0.45, 0.45, 0.10], 0.0);
    let net = p(&dir, "decay.uai");
    let evid = p(&dir, "decay.evid");
    fs::write(&net, write_bayes(&bn)).unwrap();
    fs::write(&evid, write_evidence(&e)).unwrap();
    let base = ["audit", "--net", &net, "--evid", &evid, "--iters", "400", "-o", &p(&dir, "x.csv")];
    assert_eq!(code(&run(&base)), 0);
    let mut strict = base.to_vec();
    strict.push("--strict");
    assert_eq!(code(&run(&strict)), 2);
}

#[test]
fn lockstep_compare_matches() {
    let dir = TempDir::new().unwrap();
    let pre = gen_fixture(&dir, "ex3.1");
    let out = p(&dir, "c.csv");
    let o = run(&["compare", "--net", &format!("{pre}.uai"), "-o", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(data_lines(&out)[0].starts_with("step,from,to,"));
}

#[test]
fn drac_trace_and_domains() {
    let dir = TempDir::new().unwrap();
    let pre = gen_fixture(&dir, "ex2.2");
    let (out, trace) = (p(&dir, "d.csv"), p(&dir, "t.csv"));
    let o = run(&["drac", "--cn", &format!("{pre}.cn"), "--mode", "noecho", "-o", &out, "--trace", &trace]);
    assert_eq!(code(&o), 0);
    assert_eq!(data_lines(&out).len(), 1 + 6);
    let t = data_lines(&trace);
    assert_eq!(t[0], "step,node,removed_tuple");
    assert!(t.len() > 1);
}

#[test]
fn flatten_then_exact_then_report() {
    let dir = TempDir::new().unwrap();
    let pre = gen_fixture(&dir, "ex4.4");
    let (net, evid) = (format!("{pre}.uai"), format!("{pre}.evid"));
    let cn = p(&dir, "f.cn");
    assert_eq!(code(&run(&["flatten", "--net", &net, "--evid", &evid, "-o", &cn])), 0);
    assert_eq!(code(&run(&["validate", "--cn", &cn])), 0);
    let (ex, ap, rep) = (p(&dir, "e.csv"), p(&dir, "i.csv"), p(&dir, "r.csv"));
    assert_eq!(code(&run(&["exact", "--net", &net, "--evid", &evid, "-o", &ex])), 0);
    assert_eq!(code(&run(&["ibp", "--net", &net, "--evid", &evid, "-o", &ap])), 0);
    let o = run(&["report", "--exact", &ex, "--approx", &ap, "--evid", &evid, "-o", &rep]);
    assert_eq!(code(&o), 0);
    let lines = data_lines(&rep);
    assert_eq!(lines.len(), 1 + 20);
    // six exact zeros land in the lowest bin, the three certain values in the top bin
    assert!(lines[1].starts_with("0.0,0.05,6,0,"));
}

#[test]
fn size_guard_exit_code() {
    let dir = TempDir::new().unwrap();
    let pre = p(&dir, "grid");
    assert_eq!(code(&run(&["gen", "--family", "grid", "--rows", "30", "--cols", "30", "--out", &pre])), 0);
    assert_eq!(code(&run(&["exact", "--net", &format!("{pre}.uai")])), 3);
}

#[test]
fn generation_is_reproducible_and_documented() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a"), p(&dir, "b"));
    for pre in [&a, &b] {
        let o = run(&["gen", "--family", "coding", "--width", "5", "--seed", "9", "--out", pre]);
        assert_eq!(code(&o), 0);
    }
    for ext in ["uai", "evid", "truth"] {
        assert_eq!(fs::read(format!("{a}.{ext}")).unwrap(), fs::read(format!("{b}.{ext}")).unwrap());
    }
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(format!("{a}.json")).unwrap()).unwrap();
    assert_eq!(m["params"]["seed"], 9);
    assert_eq!(m["params"]["family"], "coding");
}

#[test]
fn empty_experiment_and_manifest() {
    let dir = TempDir::new().unwrap();
    let (out, man) = (p(&dir, "x.csv"), p(&dir, "m.json"));
    let o = run(&["--manifest", &man, "experiment", "intervals", "--family", "coding", "--instances", "0", "-o", &out]);
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(&out).unwrap().starts_with("# zerobelief experiment intervals seed=1"));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&man).unwrap()).unwrap();
    assert_eq!(m["config"]["command"]["which"]["instances"], 0);
    assert!(Path::new(&man).exists());
}

#[test]
fn small_table_experiment_runs() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "t.csv");
    let args = [
        "experiment", "table1", "--n-x", "6", "--n-h", "8,10", "--epsilons", "0", "--instances", "3", "--iterations", "20",
        "--seed", "4", "-o", &out,
    ];
    assert_eq!(code(&run(&args)), 0);
    let lines = data_lines(&out);
    assert!(lines[0].starts_with("engine,epsilon,n_h,"));
    assert_eq!(lines.len(), 3);
    assert!(fs::read_to_string(&out).unwrap().starts_with("# zerobelief experiment table1 seed=4"));
}
