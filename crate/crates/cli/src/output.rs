use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};

use zerobelief::model::uai::{read_bayes, read_constraint, read_evidence};
use zerobelief::model::{BayesNetwork, ConstraintNetwork, Evidence};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn load_evidence(path: Option<&Path>) -> Result<Evidence> {
    match path {
        Some(p) => Ok(read_evidence(&read_text(p)?).with_context(|| format!("in {}", p.display()))?),
        None => Ok(Evidence::new()),
    }
}

pub fn load_bayes(net: &Path, evid: Option<&Path>) -> Result<(BayesNetwork, Evidence)> {
    let bn = read_bayes(&read_text(net)?).with_context(|| format!("in {}", net.display()))?;
    let e = load_evidence(evid)?;
    bn.check_evidence(&e).with_context(|| "evidence does not fit the network")?;
    Ok((bn, e))
}

pub fn load_constraint(path: &Path) -> Result<ConstraintNetwork> {
    read_constraint(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

/// CSV writer to `path` (stdout when `None`) whose first line is a
/// `# command seed=...` comment.
pub fn csv_out(path: Option<&Path>, command: &str, seed: Option<u64>) -> Result<csv::Writer<Box<dyn Write>>> {
    let mut w: Box<dyn Write> = match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    writeln!(w, "# zerobelief {command} seed={seed}")?;
    Ok(csv::Writer::from_writer(w))
}

pub fn csv_in(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))
}

pub fn tuple(t: &[usize]) -> String {
    t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn tuples(ts: &[Vec<usize>]) -> String {
    ts.iter().map(|t| tuple(t)).collect::<Vec<_>>().join(";")
}
