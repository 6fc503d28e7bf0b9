//! End-to-end experiments: the coloring-type error table and the binned
//! error reports of the coding, grid and random families.

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{belief_pairs, bit_error_rate, interval_error_report, BitErrorReport, IntervalErrorReport};
use crate::dualgraph::DualJoinGraph;
use crate::error::{Error, Result};
use crate::generators::{gen_coding, gen_coloring, gen_grid, gen_random};
use crate::ibp::{run_ibp, IbpConfig};
use crate::model::{BayesNetwork, Evidence};
use crate::oracle::{variable_elimination, Exact};

/// Seed of instance `index` in the cell identified by `cell`.
pub fn instance_seed(base: u64, cell: u64, index: u64) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(cell.wrapping_mul(10_007)).wrapping_add(index)
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Params {
    pub n_x: usize,
    pub n_h: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub instances: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for Table1Params {
    fn default() -> Self {
        Table1Params {
            n_x: 20,
            n_h: vec![40, 60, 80],
            epsilons: vec![0.0, 0.1, 0.2],
            instances: 50,
            iterations: 100,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Row {
    pub engine: String,
    pub epsilon: f64,
    pub n_h: usize,
    pub instances: usize,
    pub skipped: usize,
    pub mean_abs_error: f64,
    pub mean_induced_width: f64,
}

/// Mean absolute error of propagation against elimination for one network.
pub fn instance_error(bn: &BayesNetwork, evidence: &Evidence, iterations: usize) -> Result<Option<(f64, usize)>> {
    let ve = variable_elimination(bn, evidence, None)?;
    let Exact::Posteriors(exact) = &ve.exact else { return Ok(None) };
    let g = DualJoinGraph::singleton_join_graph(bn);
    let st = run_ibp(bn, &g, evidence, &IbpConfig::with_iterations(iterations))?;
    let (e, a) = belief_pairs(bn, evidence, exact, &st.variable_beliefs);
    let mae = e.iter().zip(&a).map(|(x, y)| (x - y).abs()).sum::<f64>() / e.len().max(1) as f64;
    Ok(Some((mae, ve.induced_width)))
}

type CellResult = Result<Option<(f64, usize)>>;

/// Rows ordered by epsilon, then by number of H nodes.
pub fn experiment_table1(p: &Table1Params) -> Result<Vec<Table1Row>> {
    let mut rows = Vec::new();
    for &eps in &p.epsilons {
        for &n_h in &p.n_h {
            let (mut sum, mut width, mut used, mut skipped) = (0.0, 0usize, 0usize, 0usize);
            let results: Vec<(u64, CellResult)> = (0..p.instances)
                .into_par_iter()
                .map(|i| {
                    let seed = instance_seed(p.seed, n_h as u64, i as u64);
                    let r = gen_coloring(p.n_x, n_h, eps, seed).and_then(|(bn, e)| instance_error(&bn, &e, p.iterations));
                    (seed, r)
                })
                .collect();
            for (i, (seed, r)) in results.into_iter().enumerate() {
                match r {
                    Ok(Some((mae, w))) => {
                        sum += mae;
                        width += w;
                        used += 1;
                    }
                    Ok(None) => {
                        warn!("instance {i} (seed {seed}) has impossible evidence; skipped");
                        skipped += 1;
                    }
                    Err(Error::WidthGuard { .. }) => {
                        warn!("instance {i} (seed {seed}) exceeds the elimination limit; skipped");
                        skipped += 1;
                    }
                    Err(err) => return Err(err),
                }
            }
            let n = used.max(1) as f64;
            rows.push(Table1Row {
                engine: "IBP".into(),
                epsilon: eps,
                n_h,
                instances: used,
                skipped,
                mean_abs_error: if used == 0 { f64::NAN } else { sum / n },
                mean_induced_width: width as f64 / n,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Coding,
    Grid,
    Random,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coding" => Ok(Family::Coding),
            "grid" => Ok(Family::Grid),
            "random" => Ok(Family::Random),
            other => Err(Error::InvalidParameter(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalParams {
    pub family: Family,
    /// Channel noise levels (coding) or evidence fractions (grid, random).
    pub levels: Vec<f64>,
    pub instances: usize,
    pub iterations: usize,
    pub bin_width: f64,
    pub seed: u64,
    pub coding_layers: usize,
    pub coding_width: usize,
    pub grid_side: usize,
    pub random_n: usize,
}

impl IntervalParams {
    pub fn new(family: Family) -> Self {
        let levels = match family {
            Family::Coding => vec![0.2, 0.4, 0.6],
            _ => vec![0.0, 0.1, 0.2],
        };
        IntervalParams {
            family,
            levels,
            instances: 100,
            iterations: 100,
            bin_width: 0.05,
            seed: 1,
            coding_layers: 2,
            coding_width: 10,
            grid_side: 10,
            random_n: 80,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalResult {
    pub family: Family,
    pub level: f64,
    pub instances: usize,
    pub skipped: usize,
    pub report: IntervalErrorReport,
    /// Coding only: bit error rates of propagation and of the exact posteriors.
    pub ibp_ber: Option<BitErrorReport>,
    pub exact_ber: Option<BitErrorReport>,
}

struct Solved {
    exact: Vec<f64>,
    approx: Vec<f64>,
    truth: Vec<usize>,
    ibp_bits: Vec<Vec<f64>>,
    exact_bits: Vec<Vec<f64>>,
}

fn solve_instance(p: &IntervalParams, level: f64, seed: u64) -> Result<Option<Solved>> {
    let (bn, e, truth) = match p.family {
        Family::Coding => {
            let c = gen_coding(p.coding_layers, p.coding_width, 3, level, seed)?;
            (c.bn, c.evidence, c.truth)
        }
        Family::Grid => {
            let n = p.grid_side * p.grid_side;
            let (bn, e) = gen_grid(p.grid_side, p.grid_side, (level * n as f64).round() as usize, seed)?;
            (bn, e, Vec::new())
        }
        Family::Random => {
            let (bn, e) = gen_random(p.random_n, 3, (level * p.random_n as f64).round() as usize, seed)?;
            (bn, e, Vec::new())
        }
    };
    let ve = variable_elimination(&bn, &e, None)?;
    let Exact::Posteriors(exact) = &ve.exact else { return Ok(None) };
    let g = DualJoinGraph::singleton_join_graph(&bn);
    let st = run_ibp(&bn, &g, &e, &IbpConfig::with_iterations(p.iterations))?;
    let (ex, ap) = belief_pairs(&bn, &e, exact, &st.variable_beliefs);
    let ibp_bits = (0..truth.len()).map(|k| st.variable_beliefs[k].values_or_zeros(2)).collect();
    let exact_bits = (0..truth.len()).map(|k| exact.variables[k].clone()).collect();
    Ok(Some(Solved { exact: ex, approx: ap, truth, ibp_bits, exact_bits }))
}

/// One pooled report per level, over all instances of that level.
pub fn experiment_intervals(p: &IntervalParams) -> Result<Vec<IntervalResult>> {
    let mut out = Vec::new();
    for (li, &level) in p.levels.iter().enumerate() {
        let (mut exact_all, mut approx_all) = (Vec::new(), Vec::new());
        let (mut truth_all, mut ibp_bits, mut exact_bits) = (Vec::new(), Vec::new(), Vec::new());
        let (mut used, mut skipped) = (0, 0);
        let results: Vec<(u64, Result<Option<Solved>>)> = (0..p.instances)
            .into_par_iter()
            .map(|i| {
                let seed = instance_seed(p.seed, li as u64, i as u64);
                (seed, solve_instance(p, level, seed))
            })
            .collect();
        for (i, (seed, r)) in results.into_iter().enumerate() {
            match r {
                Ok(Some(s)) => {
                    exact_all.extend(s.exact);
                    approx_all.extend(s.approx);
                    truth_all.extend(s.truth);
                    ibp_bits.extend(s.ibp_bits);
                    exact_bits.extend(s.exact_bits);
                    used += 1;
                }
                Ok(None) => {
                    warn!("instance {i} (seed {seed}) has impossible evidence; skipped");
                    skipped += 1;
                }
                Err(Error::WidthGuard { .. }) => {
                    warn!("instance {i} (seed {seed}) exceeds the elimination limit; skipped");
                    skipped += 1;
                }
                Err(err) => return Err(err),
            }
        }
        let report = interval_error_report(&exact_all, &approx_all, p.bin_width)?;
        let (ibp_ber, exact_ber) = if p.family == Family::Coding && !truth_all.is_empty() {
            (Some(bit_error_rate(&truth_all, &ibp_bits)?), Some(bit_error_rate(&truth_all, &exact_bits)?))
        } else {
            (None, None)
        };
        out.push(IntervalResult { family: p.family, level, instances: used, skipped, report, ibp_ber, exact_ber });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_instances_give_an_empty_report() {
        let mut p = IntervalParams::new(Family::Grid);
        p.instances = 0;
        let r = experiment_intervals(&p).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|x| x.report.total == 0 && x.instances == 0));
    }

    #[test]
    fn runs_are_reproducible() {
        let p = Table1Params { n_x: 6, n_h: vec![8], epsilons: vec![0.0], instances: 4, iterations: 20, seed: 7 };
        let a = experiment_table1(&p).unwrap();
        let b = experiment_table1(&p).unwrap();
        assert_eq!(a[0].mean_abs_error.to_bits(), b[0].mean_abs_error.to_bits());
        let mut q = IntervalParams::new(Family::Coding);
        q.instances = 3;
        q.coding_width = 4;
        let x = experiment_intervals(&q).unwrap();
        let y = experiment_intervals(&q).unwrap();
        assert_eq!(x[2].report.mean_abs_error.to_bits(), y[2].report.mean_abs_error.to_bits());
    }
}
