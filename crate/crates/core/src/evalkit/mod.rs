//! Experiment support: generators, an exhaustive optimum for tiny graphs,
//! budget-matched virtual instances, and performance-profile normalization.

mod generators;

pub use generators::{er_default_probability, gen_er, gen_grid, gen_rgg, rgg_default_radius};

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BlockId, Graph, NodeId, Weight};
use crate::partition::block_weight_bound;
use crate::util::rng;

/// Value assigned to imbalanced results in a performance profile.
pub const IMBALANCED_PROFILE_VALUE: f64 = 1.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub instance: String,
    pub rep: usize,
    pub cut: Weight,
    pub time: f64,
    pub imbalanced: bool,
}

pub fn write_run_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_run_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct VirtualInstance {
    /// Algorithm whose first sample was slower; its label.
    pub algorithm_a: String,
    pub quality_a: Weight,
    /// Best cut over the accepted samples of the other algorithm.
    pub quality_b: Option<Weight>,
    /// Time budget, the running time of the A sample.
    pub time_a: f64,
    pub accepted_time_b: f64,
    pub accepted_b: usize,
    /// The B pool ran dry and was refilled before the budget was spent.
    pub resampled: bool,
}

/// Samples `count` virtual instances from the repetitions of two algorithms
/// on one graph.
///
/// Per instance one repetition of each algorithm is drawn; the slower one is
/// A. Further repetitions of B are drawn without replacement while their
/// running times fit in A's time. The sample that overshoots the remaining
/// budget `t` is accepted with probability `t / time`, which makes the
/// expected accepted B time equal A's time.
pub fn virtual_instances(runs_a: &[RunRecord], runs_b: &[RunRecord], count: usize, seed: u64) -> Result<Vec<VirtualInstance>> {
    if runs_a.is_empty() || runs_b.is_empty() || count == 0 {
        return Err(Error::InvalidConfig("virtual instances need runs of both algorithms".into()));
    }
    if runs_a.iter().chain(runs_b).any(|r| !(r.time > 0.0)) {
        return Err(Error::InvalidConfig("running times must be positive".into()));
    }
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let ia = r.random_range(0..runs_a.len());
        let ib = r.random_range(0..runs_b.len());
        let (a, pool, first) = if runs_b[ib].time > runs_a[ia].time {
            // B's sample is slower: swap roles
            (&runs_b[ib], runs_a, ia)
        } else {
            (&runs_a[ia], runs_b, ib)
        };
        out.push(budget_match(a, pool, first, &mut r));
    }
    Ok(out)
}

fn budget_match(a: &RunRecord, pool: &[RunRecord], first: usize, r: &mut impl Rng) -> VirtualInstance {
    let mut remaining: Vec<usize> = (0..pool.len()).filter(|&i| i != first).collect();
    let mut next = Some(first);
    let mut spent = 0.0;
    let mut best: Option<Weight> = None;
    let mut accepted = 0;
    let mut resampled = false;
    loop {
        let i = match next.take() {
            Some(i) => i,
            None => {
                if remaining.is_empty() {
                    remaining = (0..pool.len()).collect();
                    resampled = true;
                }
                remaining.swap_remove(r.random_range(0..remaining.len()))
            }
        };
        let s = &pool[i];
        let fits = spent + s.time <= a.time;
        let accept = fits || r.random_bool(((a.time - spent) / s.time).clamp(0.0, 1.0));
        if accept {
            spent += s.time;
            accepted += 1;
            best = Some(best.map_or(s.cut, |b: Weight| b.min(s.cut)));
        }
        if !fits {
            break;
        }
    }
    VirtualInstance {
        algorithm_a: a.algorithm.clone(),
        quality_a: a.cut,
        quality_b: best,
        time_a: a.time,
        accepted_time_b: spent,
        accepted_b: accepted,
        resampled,
    }
}

/// `1 - best / cut` per algorithm and instance, each list sorted ascending.
///
/// `best` is the smallest balanced cut on the instance. Several records of
/// one algorithm on one instance are reduced to their best balanced cut.
/// Imbalanced results (and algorithms without a balanced record) map to
/// [`IMBALANCED_PROFILE_VALUE`].
pub fn performance_profile(records: &[RunRecord]) -> BTreeMap<String, Vec<f64>> {
    // instance -> algorithm -> best balanced cut, None if only imbalanced
    let mut table: BTreeMap<&str, BTreeMap<&str, Option<Weight>>> = BTreeMap::new();
    for rec in records {
        let slot = table
            .entry(&rec.instance)
            .or_default()
            .entry(&rec.algorithm)
            .or_insert(None);
        if !rec.imbalanced {
            *slot = Some(slot.map_or(rec.cut, |c| c.min(rec.cut)));
        }
    }
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for per_alg in table.values() {
        let best = per_alg.values().flatten().min().copied();
        for (&alg, cut) in per_alg {
            let v = match (cut, best) {
                (Some(c), Some(b)) => {
                    if *c == 0 {
                        0.0
                    } else {
                        1.0 - b as f64 / *c as f64
                    }
                }
                _ => IMBALANCED_PROFILE_VALUE,
            };
            out.entry(alg.to_string()).or_default().push(v);
        }
    }
    for v in out.values_mut() {
        v.sort_by(f64::total_cmp);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Optimum {
    pub cut: Weight,
    pub witness: Vec<BlockId>,
}

/// Largest `k^n` accepted by [`brute_force_optimal`].
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// Minimum cut over all balanced assignments by exhaustive search.
pub fn brute_force_optimal(g: &Graph, k: usize, epsilon: f64) -> Result<Optimum> {
    if k == 0 {
        return Err(Error::InvalidBlockCount { k, n: g.n() });
    }
    let space = (k as f64).powi(g.n() as i32);
    if space > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge(space));
    }
    let bound = block_weight_bound(g.total_vertex_weight(), k, epsilon)?;
    let mut search = Search {
        g,
        k,
        bound,
        assignment: vec![0; g.n()],
        weights: vec![0; k],
        best: None,
    };
    search.descend(0, 0);
    search.best.ok_or(Error::NoBalancedPartition)
}

struct Search<'a> {
    g: &'a Graph,
    k: usize,
    bound: Weight,
    assignment: Vec<BlockId>,
    weights: Vec<Weight>,
    best: Option<Optimum>,
}

impl Search<'_> {
    fn descend(&mut self, v: usize, cut: Weight) {
        if self.best.as_ref().is_some_and(|b| cut >= b.cut) {
            return;
        }
        if v == self.g.n() {
            self.best = Some(Optimum {
                cut,
                witness: self.assignment.clone(),
            });
            return;
        }
        let w = self.g.vertex_weight(v as NodeId);
        for b in 0..self.k {
            if self.weights[b] + w > self.bound {
                continue;
            }
            let added: Weight = self
                .g
                .adjacent(v as NodeId)
                .filter(|&(u, _)| (u as usize) < v && self.assignment[u as usize] != b as BlockId)
                .map(|(_, ew)| ew)
                .sum();
            self.assignment[v] = b as BlockId;
            self.weights[b] += w;
            self.descend(v + 1, cut + added);
            self.weights[b] -= w;
        }
        self.assignment[v] = 0;
    }
}
