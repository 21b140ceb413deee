//! Initial partitioning of the coarsest graph.
//!
//! Each attempt runs recursive bisection with its own derived seed on a
//! private copy of the graph; attempts execute in parallel and the best
//! result wins (balanced first, then smallest cut, then attempt index, so
//! the choice is independent of scheduling).

mod bisect;
mod bucket;

pub use bisect::{bisect, bisect_weighted, fm_refine, Bisection};
pub use bucket::BucketQueue;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::graph::{BlockId, Graph, NodeId, Weight};
use crate::partition::{block_weight_bound, Partition};
use crate::util::derive_seed;

/// Per-level imbalance so that the product over `ceil(log2 k)` levels of
/// `1 + eps_level` equals `1 + epsilon`.
pub fn adapted_epsilon(epsilon: f64, k: usize) -> f64 {
    if k <= 1 {
        return epsilon;
    }
    let depth = (k as f64).log2().ceil();
    (1.0 + epsilon).powf(1.0 / depth) - 1.0
}

/// Recursive bisection into `k` blocks. The flag is false when some
/// bisection could not meet its adapted bound.
pub fn recursive_bisection(g: &Graph, k: usize, epsilon: f64, seed: u64) -> Result<(Vec<BlockId>, bool)> {
    if k == 0 {
        return Err(Error::InvalidBlockCount { k, n: g.n() });
    }
    let eps_level = adapted_epsilon(epsilon, k);
    let mut assignment = vec![0 as BlockId; g.n()];
    let all: Vec<NodeId> = (0..g.n() as NodeId).collect();
    let mut feasible = true;
    split(g, &all, k, 0, eps_level, seed, &mut assignment, &mut feasible);
    Ok((assignment, feasible))
}

#[allow(clippy::too_many_arguments)]
fn split(
    g: &Graph,
    vertices: &[NodeId],
    k: usize,
    first_block: BlockId,
    eps_level: f64,
    seed: u64,
    assignment: &mut [BlockId],
    feasible: &mut bool,
) {
    if k == 1 || vertices.is_empty() {
        for &v in vertices {
            assignment[v as usize] = first_block;
        }
        return;
    }
    let sub = if vertices.len() == g.n() {
        g.clone()
    } else {
        g.induced_subgraph(vertices)
    };
    let k0 = k.div_ceil(2);
    let k1 = k / 2;
    let total = sub.total_vertex_weight();
    let share = |ki: usize| total as f64 * ki as f64 / k as f64;
    let bound = |ki: usize| ((1.0 + eps_level) * share(ki).ceil() * (1.0 + 1e-12) + 1e-9).floor() as Weight;
    let b = bisect_weighted(&sub, share(k0), [bound(k0), bound(k1)], seed);
    *feasible &= b.feasible;
    let mut parts: [Vec<NodeId>; 2] = [Vec::new(), Vec::new()];
    for (i, &s) in b.side.iter().enumerate() {
        parts[s as usize].push(vertices[i]);
    }
    split(g, &parts[0], k0, first_block, eps_level, derive_seed(seed, &[0]), assignment, feasible);
    split(
        g,
        &parts[1],
        k1,
        first_block + k0 as BlockId,
        eps_level,
        derive_seed(seed, &[1]),
        assignment,
        feasible,
    );
}

/// Greedily moves vertices out of blocks heavier than `bound`, always taking
/// the move with the least cut increase into a block with room. Returns
/// whether the partition ends within `bound`.
pub fn rebalance(g: &Graph, part: &mut Partition, bound: Weight) -> bool {
    let mut conn = vec![0 as Weight; part.k()];
    let mut heap: BinaryHeap<(Weight, Reverse<NodeId>)> = BinaryHeap::new();
    for v in 0..g.n() as NodeId {
        if part.block_weight(part.block(v)) > bound {
            if let Some((_, gain)) = best_target(g, part, v, bound, &mut conn) {
                heap.push((gain, Reverse(v)));
            }
        }
    }
    while let Some((gain, Reverse(v))) = heap.pop() {
        let from = part.block(v);
        if part.block_weight(from) <= bound {
            continue;
        }
        let Some((to, current)) = best_target(g, part, v, bound, &mut conn) else { continue };
        if current != gain {
            heap.push((current, Reverse(v)));
            continue;
        }
        part.move_vertex(g, v, to);
        for &u in g.neighbors(v) {
            if part.block(u) == from {
                if let Some((_, gu)) = best_target(g, part, u, bound, &mut conn) {
                    heap.push((gu, Reverse(u)));
                }
            }
        }
    }
    part.max_block_weight() <= bound
}

fn best_target(
    g: &Graph,
    part: &Partition,
    v: NodeId,
    bound: Weight,
    conn: &mut [Weight],
) -> Option<(BlockId, Weight)> {
    let own = part.block(v);
    let w = g.vertex_weight(v);
    for (u, ew) in g.adjacent(v) {
        conn[part.block(u) as usize] += ew;
    }
    let mut best: Option<(BlockId, Weight)> = None;
    for b in 0..part.k() as BlockId {
        if b == own || part.block_weight(b) + w > bound {
            continue;
        }
        let gain = conn[b as usize] - conn[own as usize];
        if best.is_none_or(|(_, bg)| gain > bg) {
            best = Some((b, gain));
        }
    }
    for (u, _) in g.adjacent(v) {
        conn[part.block(u) as usize] = 0;
    }
    best
}

#[derive(Clone, Debug)]
pub struct InitialPartition {
    pub partition: Partition,
    pub attempts: usize,
    pub balanced: bool,
}

/// One attempt: recursive bisection followed by rebalancing if needed.
pub fn partition_attempt(g: &Graph, k: usize, epsilon: f64, seed: u64) -> Result<Partition> {
    let (assignment, _) = recursive_bisection(g, k, epsilon, seed)?;
    let mut part = Partition::new(g, k, epsilon, assignment)?;
    if !part.is_balanced() {
        let bound = block_weight_bound(g.total_vertex_weight(), k, epsilon)?;
        rebalance(g, &mut part, bound);
    }
    Ok(part)
}

/// Runs `max(workers, attempts)` seeded attempts and keeps the best.
pub fn initial_partition(
    g: &Graph,
    k: usize,
    epsilon: f64,
    attempts: usize,
    workers: usize,
    seed: u64,
) -> Result<InitialPartition> {
    if k == 0 || k > g.n().max(1) {
        return Err(Error::InvalidBlockCount { k, n: g.n() });
    }
    if k == 1 {
        let partition = Partition::single_block(g, 1, epsilon)?;
        return Ok(InitialPartition {
            balanced: partition.is_balanced(),
            partition,
            attempts: 1,
        });
    }
    let total = workers.max(attempts).max(1);
    let threads = workers.clamp(1, total);
    let next = AtomicUsize::new(0);
    let best: Mutex<Option<((Weight, Weight, usize), Partition)>> = Mutex::new(None);
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let run = || {
        let local = g.clone();
        loop {
            let i = next.fetch_add(1, Ordering::Relaxed);
            if i >= total {
                break;
            }
            match partition_attempt(&local, k, epsilon, derive_seed(seed, &[i as u64])) {
                Ok(p) => {
                    let key = (p.overload(), p.cut(), i);
                    let mut cell = best.lock().unwrap();
                    if cell.as_ref().is_none_or(|(bk, _)| key < *bk) {
                        *cell = Some((key, p));
                    }
                }
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                }
            }
        }
    };
    if threads == 1 {
        run();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(run);
            }
        });
    }
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let (_, partition) = best.into_inner().unwrap().expect("at least one attempt");
    Ok(InitialPartition {
        balanced: partition.is_balanced(),
        partition,
        attempts: total,
    })
}
