//! Two-way partitioning: greedy graph growing followed by Fiduccia-Mattheyses
//! refinement with rollback to the best prefix of every pass.

use std::collections::VecDeque;

use rand::seq::SliceRandom;

use crate::graph::{BlockId, Graph, NodeId, Weight};
use crate::util::{rng, Rng as StdRng};

use super::bucket::BucketQueue;

const GROWING_TRIES: usize = 3;
const FM_PASSES: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bisection {
    pub side: Vec<BlockId>,
    pub weights: [Weight; 2],
    pub cut: Weight,
    /// Both sides within their bounds.
    pub feasible: bool,
}

impl Bisection {
    fn overload(&self, max: [Weight; 2]) -> Weight {
        (self.weights[0] - max[0]).max(0) + (self.weights[1] - max[1]).max(0)
    }
}

/// Equal-halves bisection with each side at most
/// `(1 + epsilon) * ceil(c(V) / 2)`.
pub fn bisect(g: &Graph, epsilon: f64, seed: u64) -> Bisection {
    let half = (g.total_vertex_weight() as u64).div_ceil(2) as f64;
    let bound = ((1.0 + epsilon) * half * (1.0 + 1e-12) + 1e-9).floor() as Weight;
    let target = g.total_vertex_weight() as f64 / 2.0;
    bisect_weighted(g, target, [bound, bound], seed)
}

/// Bisection growing side 0 towards `target0` under per-side bounds `max`.
pub fn bisect_weighted(g: &Graph, target0: f64, max: [Weight; 2], seed: u64) -> Bisection {
    let n = g.n();
    let total = g.total_vertex_weight();
    if n < 2 {
        let b = Bisection {
            side: vec![0; n],
            weights: [total, 0],
            cut: 0,
            feasible: total <= max[0],
        };
        return b;
    }
    let mut rng = rng(seed);
    let mut best: Option<Bisection> = None;
    for _ in 0..GROWING_TRIES {
        let mut side = grow(g, target0, max[0], &mut rng);
        let (weights, cut) = fm_refine(g, &mut side, max, &mut rng);
        let candidate = Bisection {
            feasible: weights[0] <= max[0] && weights[1] <= max[1],
            side,
            weights,
            cut,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                (candidate.overload(max), candidate.cut) < (b.overload(max), b.cut)
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    best.unwrap()
}

/// BFS region growing of side 0 from a random vertex; restarts from a random
/// unvisited vertex when a component is exhausted.
fn grow(g: &Graph, target0: f64, max0: Weight, rng: &mut StdRng) -> Vec<BlockId> {
    let n = g.n();
    let mut side = vec![1 as BlockId; n];
    let mut visited = vec![false; n];
    let mut unvisited: Vec<NodeId> = (0..n as NodeId).collect();
    unvisited.shuffle(rng);
    let mut weight0: Weight = 0;
    let mut queue = VecDeque::new();
    while (weight0 as f64) < target0 {
        let v = match queue.pop_front() {
            Some(v) => v,
            None => match unvisited.iter().rposition(|&u| !visited[u as usize]) {
                Some(i) => {
                    let v = unvisited[i];
                    unvisited.truncate(i);
                    visited[v as usize] = true;
                    v
                }
                None => break,
            },
        };
        let w = g.vertex_weight(v);
        if weight0 + w > max0 {
            continue;
        }
        side[v as usize] = 0;
        weight0 += w;
        let mut nb: Vec<NodeId> = g
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&u| !visited[u as usize])
            .collect();
        nb.shuffle(rng);
        for u in nb {
            visited[u as usize] = true;
            queue.push_back(u);
        }
    }
    side
}

fn side_weights(g: &Graph, side: &[BlockId]) -> [Weight; 2] {
    let mut w = [0; 2];
    for (v, &s) in side.iter().enumerate() {
        w[s as usize] += g.vertex_weight(v as NodeId);
    }
    w
}

fn vertex_gain(g: &Graph, side: &[BlockId], v: NodeId) -> Weight {
    let s = side[v as usize];
    g.adjacent(v)
        .map(|(u, w)| if side[u as usize] == s { -w } else { w })
        .sum()
}

/// FM refinement. Returns final side weights and cut.
pub fn fm_refine(
    g: &Graph,
    side: &mut [BlockId],
    max: [Weight; 2],
    rng: &mut StdRng,
) -> ([Weight; 2], Weight) {
    let n = g.n();
    let mut weights = side_weights(g, side);
    let mut cut: Weight = g
        .edges()
        .filter(|&(u, v, _)| side[u as usize] != side[v as usize])
        .map(|(_, _, w)| w)
        .sum();
    let overload = |w: &[Weight; 2]| (w[0] - max[0]).max(0) + (w[1] - max[1]).max(0);
    let mut queues = [BucketQueue::new(n), BucketQueue::new(n)];
    let mut locked = vec![false; n];
    let mut order: Vec<NodeId> = (0..n as NodeId).collect();
    let mut log: Vec<NodeId> = Vec::new();
    let slack = g.max_vertex_weight();

    for _ in 0..FM_PASSES {
        let start = (overload(&weights), cut);
        let mut best = start;
        let mut best_len = 0;
        log.clear();
        locked.iter_mut().for_each(|l| *l = false);
        order.shuffle(rng);
        for &v in &order {
            queues[side[v as usize] as usize].insert(v, vertex_gain(g, side, v));
        }
        for _ in 0..2 * n {
            let Some(v) = pick_move(g, &queues, &weights, max, slack) else { break };
            let from = side[v as usize] as usize;
            let to = 1 - from;
            let gain = queues[from].key(v).unwrap();
            queues[from].remove(v);
            locked[v as usize] = true;
            side[v as usize] = to as BlockId;
            let w = g.vertex_weight(v);
            weights[from] -= w;
            weights[to] += w;
            cut -= gain;
            log.push(v);
            for (u, ew) in g.adjacent(v) {
                if locked[u as usize] {
                    continue;
                }
                let su = side[u as usize] as usize;
                // u's edge to v flipped between internal and external
                let delta = if su == to { -2 * ew } else { 2 * ew };
                let k = queues[su].key(u).unwrap();
                queues[su].update(u, k + delta);
            }
            let state = (overload(&weights), cut);
            if state < best {
                best = state;
                best_len = log.len();
            }
        }
        for &v in log[best_len..].iter().rev() {
            let from = side[v as usize] as usize;
            let w = g.vertex_weight(v);
            let gain = vertex_gain(g, side, v);
            side[v as usize] = (1 - from) as BlockId;
            weights[from] -= w;
            weights[1 - from] += w;
            cut -= gain;
        }
        queues[0].clear();
        queues[1].clear();
        if best >= start {
            break;
        }
    }
    (weights, cut)
}

/// Highest-gain admissible move. A move is admissible when the target side
/// stays within its bound plus `slack` (so a pass can swap vertices through
/// a temporarily infeasible state), or when it strictly reduces an
/// overloaded source side. Moves out of an overloaded side take precedence.
fn pick_move(
    g: &Graph,
    queues: &[BucketQueue; 2],
    weights: &[Weight; 2],
    max: [Weight; 2],
    slack: Weight,
) -> Option<NodeId> {
    let mut best: Option<((bool, Weight), NodeId)> = None;
    for from in 0..2 {
        let to = 1 - from;
        let Some((v, gain)) = queues[from].peek_max() else { continue };
        let w = g.vertex_weight(v);
        let overloaded = weights[from] > max[from];
        let fits = weights[to] + w <= max[to] + slack && weights[to] <= max[to];
        let relieves = overloaded && weights[to] + w < weights[from];
        if !(fits || relieves) {
            continue;
        }
        let key = (overloaded, gain);
        if best.is_none_or(|(k, _)| key > k) {
            best = Some((key, v));
        }
    }
    best.map(|(_, v)| v)
}
