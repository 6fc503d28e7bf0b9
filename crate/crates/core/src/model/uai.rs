//! UAI-style text formats.
//!
//! ```text
//! BAYES                 (or CONSTRAINT)
//! 3                     variable count
//! 2 2 3                 cardinalities
//! 3                     function count
//! 1 0                   scopes: arity then variable ids (child last for BAYES)
//! 2 0 1
//! 3 0 1 2
//!
//! 2                     per function: entry count, then entries
//!  0.4 0.6
//! ...
//! ```
//!
//! Entries are listed in row-major mixed-radix order over the scope. For
//! `CONSTRAINT` files an entry is `1` for an allowed tuple and `0` otherwise.
//! Lines starting with `#` are comments. Evidence files hold a count followed
//! by `var value` pairs.
//!
//! Numbers are written in Rust's shortest round-trip form, so reading a
//! written file and writing it again reproduces it byte for byte.

use std::fmt::Write as _;

use super::{BayesNetwork, ConstraintNetwork, Cpt, Evidence, Factor, Relation, Variable};
use crate::error::{Error, Result};

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim_start().starts_with('#'))
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Tokens { items, pos: 0 }
    }

    fn line(&self) -> usize {
        self.items.get(self.pos).or(self.items.last()).map_or(0, |t| t.0)
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line(), message: message.into() }
    }

    fn next_str(&mut self) -> Result<&'a str> {
        let t = self.items.get(self.pos).map(|t| t.1).ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn next_usize(&mut self) -> Result<usize> {
        let t = self.next_str()?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("expected a non-negative integer, found `{t}`"))
        })
    }

    fn next_f64(&mut self) -> Result<f64> {
        let t = self.next_str()?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("expected a number, found `{t}`"))
        })
    }

    fn finished(&self) -> bool {
        self.pos >= self.items.len()
    }
}

/// Formats a float so that parsing it back yields the same bits.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

struct Header {
    kind: String,
    cards: Vec<usize>,
    scopes: Vec<Vec<usize>>,
}

fn read_header(tok: &mut Tokens<'_>) -> Result<Header> {
    let kind = tok.next_str()?.to_string();
    let n = tok.next_usize()?;
    let cards = (0..n).map(|_| tok.next_usize()).collect::<Result<Vec<_>>>()?;
    if let Some(v) = cards.iter().position(|&c| c == 0) {
        return Err(tok.err(format!("variable {v} has cardinality 0")));
    }
    let m = tok.next_usize()?;
    let mut scopes = Vec::with_capacity(m);
    for _ in 0..m {
        let k = tok.next_usize()?;
        let scope = (0..k).map(|_| tok.next_usize()).collect::<Result<Vec<_>>>()?;
        if let Some(&v) = scope.iter().find(|&&v| v >= n) {
            return Err(tok.err(format!("scope mentions unknown variable {v}")));
        }
        scopes.push(scope);
    }
    Ok(Header { kind, cards, scopes })
}

fn read_table(tok: &mut Tokens<'_>, scope: &[usize], cards: &[usize]) -> Result<Vec<f64>> {
    let expected: usize = scope.iter().map(|&v| cards[v]).product();
    let count = tok.next_usize()?;
    if count != expected {
        return Err(tok.err(format!("table over {scope:?} needs {expected} entries, header says {count}")));
    }
    (0..count).map(|_| tok.next_f64()).collect()
}

fn default_variables(cards: &[usize]) -> Vec<Variable> {
    cards.iter().enumerate().map(|(i, &c)| Variable::indexed(i, format!("X{i}"), c)).collect()
}

pub fn read_bayes(text: &str) -> Result<BayesNetwork> {
    let mut tok = Tokens::new(text);
    let h = read_header(&mut tok)?;
    if h.kind != "BAYES" {
        return Err(Error::Parse { line: 1, message: format!("expected BAYES preamble, found `{}`", h.kind) });
    }
    let n = h.cards.len();
    let mut slots: Vec<Option<Cpt>> = vec![None; n];
    for scope in &h.scopes {
        let values = read_table(&mut tok, scope, &h.cards)?;
        let (&child, parents) = scope.split_last().ok_or_else(|| tok.err("BAYES function with empty scope"))?;
        let table = Factor::new(scope.clone(), scope.iter().map(|&v| h.cards[v]).collect(), values)?;
        if slots[child].is_some() {
            return Err(tok.err(format!("variable {child} has two CPTs")));
        }
        slots[child] = Some(Cpt::new(child, parents.to_vec(), table)?);
    }
    if !tok.finished() {
        return Err(tok.err("trailing tokens after the last table"));
    }
    let cpts = slots
        .into_iter()
        .enumerate()
        .map(|(v, c)| c.ok_or_else(|| Error::Parse { line: 0, message: format!("variable {v} has no CPT") }))
        .collect::<Result<Vec<_>>>()?;
    BayesNetwork::new(default_variables(&h.cards), cpts)
}

fn write_preamble(out: &mut String, kind: &str, cards: &[usize], scopes: &[&[usize]]) {
    writeln!(out, "{kind}").unwrap();
    writeln!(out, "{}", cards.len()).unwrap();
    writeln!(out, "{}", cards.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")).unwrap();
    writeln!(out, "{}", scopes.len()).unwrap();
    for s in scopes {
        let mut line = s.len().to_string();
        for v in *s {
            write!(line, " {v}").unwrap();
        }
        writeln!(out, "{line}").unwrap();
    }
}

fn write_values(out: &mut String, values: impl ExactSizeIterator<Item = String>) {
    writeln!(out).unwrap();
    writeln!(out, "{}", values.len()).unwrap();
    let v: Vec<String> = values.collect();
    writeln!(out, " {}", v.join(" ")).unwrap();
}

pub fn write_bayes(bn: &BayesNetwork) -> String {
    let mut out = String::new();
    let scopes: Vec<&[usize]> = bn.cpts().iter().map(|c| c.family()).collect();
    write_preamble(&mut out, "BAYES", &bn.cards(), &scopes);
    for cpt in bn.cpts() {
        write_values(&mut out, cpt.table().values().iter().map(|&p| format_f64(p)));
    }
    out
}

pub fn read_constraint(text: &str) -> Result<ConstraintNetwork> {
    let mut tok = Tokens::new(text);
    let h = read_header(&mut tok)?;
    if h.kind != "CONSTRAINT" {
        return Err(Error::Parse { line: 1, message: format!("expected CONSTRAINT preamble, found `{}`", h.kind) });
    }
    let mut relations = Vec::with_capacity(h.scopes.len());
    for scope in &h.scopes {
        let values = read_table(&mut tok, scope, &h.cards)?;
        let cards: Vec<usize> = scope.iter().map(|&v| h.cards[v]).collect();
        let f = Factor::new(scope.clone(), cards, values)?;
        let mut tuples = Vec::new();
        for (a, x) in f.entries() {
            match x {
                1.0 => tuples.push(a),
                0.0 => {}
                other => return Err(tok.err(format!("constraint entries must be 0 or 1, found {other}"))),
            }
        }
        relations.push(Relation::new(scope.clone(), tuples)?);
    }
    if !tok.finished() {
        return Err(tok.err("trailing tokens after the last table"));
    }
    ConstraintNetwork::new(default_variables(&h.cards), relations)
}

pub fn write_constraint(cn: &ConstraintNetwork) -> String {
    let mut out = String::new();
    let cards = cn.cards();
    let scopes: Vec<&[usize]> = cn.relations().iter().map(|r| r.scope()).collect();
    write_preamble(&mut out, "CONSTRAINT", &cards, &scopes);
    for r in cn.relations() {
        let rc: Vec<usize> = r.scope().iter().map(|&v| cards[v]).collect();
        let size: usize = rc.iter().product();
        let mut mask = vec![false; size];
        for t in r.tuples() {
            let idx = t.iter().zip(&rc).fold(0, |acc, (&x, &c)| acc * c + x);
            mask[idx] = true;
        }
        write_values(&mut out, mask.into_iter().map(|b| if b { "1".into() } else { "0".into() }));
    }
    out
}

pub fn read_evidence(text: &str) -> Result<Evidence> {
    let mut tok = Tokens::new(text);
    if tok.finished() {
        return Ok(Evidence::new());
    }
    let total = tok.items.len();
    let mut count = tok.next_usize()?;
    // Older UAI evidence files prefix a sample count of 1.
    if count == 1 && total != 3 && total >= 2 {
        count = tok.next_usize()?;
    }
    let mut e = Evidence::new();
    for _ in 0..count {
        let v = tok.next_usize()?;
        let x = tok.next_usize()?;
        if e.contains(v) {
            return Err(tok.err(format!("variable {v} observed twice")));
        }
        e.insert(v, x);
    }
    if !tok.finished() {
        return Err(tok.err("trailing tokens in evidence"));
    }
    Ok(e)
}

pub fn write_evidence(e: &Evidence) -> String {
    let mut s = e.len().to_string();
    for (v, x) in e.iter() {
        write!(s, " {v} {x}").unwrap();
    }
    s.push('\n');
    s
}
