//! Size-constrained label propagation over work packets.
//!
//! One engine serves both clustering (labels are cluster IDs in `0..n`) and
//! partition refinement (labels are block IDs in `0..k`). Workers pull
//! packets of vertices from a shared queue, move each vertex to the
//! eligible label with the strongest connection, and reserve label weight
//! with a compare-and-swap loop so the size bound is never exceeded, even
//! transiently. Neighbors of moved vertices form the packets of the next
//! round.

use std::sync::atomic::{AtomicI64, AtomicU32, AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::Rng;

use crate::graph::{Graph, NodeId, Weight};
use crate::util::rng_for;

/// Work bound per packet: `max(1000, sqrt(m))` total degree.
pub fn packet_bound(m: usize) -> usize {
    ((m as f64).sqrt() as usize).max(1000)
}

/// Vertices whose summed degree stays within the packet bound, except for a
/// single vertex that alone exceeds it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WorkPacket {
    pub vertices: Vec<NodeId>,
    pub degree_sum: usize,
}

pub(crate) struct PacketBuilder {
    bound: usize,
    current: WorkPacket,
}

impl PacketBuilder {
    pub(crate) fn new(bound: usize) -> Self {
        PacketBuilder {
            bound,
            current: WorkPacket::default(),
        }
    }

    /// Adds `v`; returns a finished packet when `v` does not fit.
    pub(crate) fn push(&mut self, v: NodeId, degree: usize) -> Option<WorkPacket> {
        let mut done = None;
        if !self.current.vertices.is_empty() && self.current.degree_sum + degree > self.bound {
            done = Some(std::mem::take(&mut self.current));
        }
        self.current.vertices.push(v);
        self.current.degree_sum += degree;
        done
    }

    pub(crate) fn finish(self) -> Option<WorkPacket> {
        (!self.current.vertices.is_empty()).then_some(self.current)
    }
}

/// Splits `order` into packets, preserving order within and across packets.
pub fn build_packets(order: &[NodeId], g: &Graph) -> Vec<WorkPacket> {
    let mut builder = PacketBuilder::new(packet_bound(g.m()));
    let mut out = Vec::new();
    for &v in order {
        out.extend(builder.push(v, g.degree(v)));
    }
    out.extend(builder.finish());
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Own label competes; ties are broken uniformly at random.
    Clustering,
    /// Moves only to a strictly stronger label.
    Refinement,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct LpParams {
    pub bound: Weight,
    pub iterations: usize,
    pub workers: usize,
    pub seed: u64,
    pub mode: Mode,
}

/// Per-round counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RoundStats {
    pub active: usize,
    pub moved: usize,
    pub touched_edges: usize,
    /// Set when a parallel refinement round increased the cut and was
    /// replayed sequentially.
    pub replayed: bool,
}

struct Shared<'a> {
    g: &'a Graph,
    labels: &'a [AtomicU32],
    weights: &'a [AtomicI64],
    params: LpParams,
    queued_round: Vec<AtomicU32>,
    scratch_pool: Mutex<Vec<WorkerScratch>>,
}

struct WorkerScratch {
    conn: Vec<Weight>,
    touched: Vec<u32>,
}

#[derive(Default)]
struct WorkerResult {
    moves: Vec<(NodeId, u32, u32)>,
    next: Vec<WorkPacket>,
    touched_edges: usize,
}

/// Runs up to `params.iterations` rounds starting from `initial` packets.
/// Returns statistics per executed round.
pub(crate) fn run(
    g: &Graph,
    labels: &[AtomicU32],
    weights: &[AtomicI64],
    initial: Vec<WorkPacket>,
    params: LpParams,
) -> Vec<RoundStats> {
    let shared = Shared {
        g,
        labels,
        weights,
        params,
        queued_round: (0..g.n()).map(|_| AtomicU32::new(u32::MAX)).collect(),
        scratch_pool: Mutex::new(Vec::new()),
    };
    let mut stats = Vec::new();
    let mut packets = initial;
    for round in 0..params.iterations {
        if packets.is_empty() {
            break;
        }
        let active = packets.iter().map(|p| p.vertices.len()).sum();
        let results = run_round(&shared, &packets, round, params.workers);
        let mut moves: Vec<(NodeId, u32, u32)> = Vec::new();
        let mut next = Vec::new();
        let mut touched = 0;
        for r in results {
            moves.extend(r.moves);
            next.extend(r.next);
            touched += r.touched_edges;
        }
        let mut replayed = false;
        if params.mode == Mode::Refinement && params.workers > 1 && cut_delta(g, labels, &moves) > 0 {
            // concurrent decisions on stale neighbor labels raised the cut:
            // undo the round and redo it on a single worker
            for &(v, from, to) in moves.iter().rev() {
                let w = g.vertex_weight(v);
                weights[to as usize].fetch_sub(w, Ordering::Relaxed);
                weights[from as usize].fetch_add(w, Ordering::Relaxed);
                labels[v as usize].store(from, Ordering::Relaxed);
            }
            for p in &packets {
                for &v in &p.vertices {
                    // allow re-queueing during the replay
                    shared.queued_round[v as usize].store(u32::MAX, Ordering::Relaxed);
                }
            }
            for p in &next {
                for &v in &p.vertices {
                    shared.queued_round[v as usize].store(u32::MAX, Ordering::Relaxed);
                }
            }
            let results = run_round(&shared, &packets, round, 1);
            moves.clear();
            next.clear();
            for r in results {
                moves.extend(r.moves);
                next.extend(r.next);
                touched += r.touched_edges;
            }
            replayed = true;
        }
        stats.push(RoundStats {
            active,
            moved: moves.len(),
            touched_edges: touched,
            replayed,
        });
        if moves.is_empty() {
            break;
        }
        packets = next;
    }
    stats
}

/// Cut change caused by `moves` (each vertex at most once), given that the
/// labels already reflect them.
fn cut_delta(g: &Graph, labels: &[AtomicU32], moves: &[(NodeId, u32, u32)]) -> Weight {
    if moves.is_empty() {
        return 0;
    }
    let mut from_of = std::collections::HashMap::with_capacity(moves.len());
    for &(v, from, _) in moves {
        from_of.insert(v, from);
    }
    let label = |v: NodeId| labels[v as usize].load(Ordering::Relaxed);
    let before = |v: NodeId| from_of.get(&v).copied().unwrap_or_else(|| label(v));
    let mut delta = 0;
    for &(v, _, _) in moves {
        for (u, w) in g.adjacent(v) {
            if from_of.contains_key(&u) && u < v {
                continue;
            }
            let was_cut = before(v) != before(u);
            let is_cut = label(v) != label(u);
            delta += w * (is_cut as Weight - was_cut as Weight);
        }
    }
    delta
}

fn run_round(
    shared: &Shared<'_>,
    packets: &[WorkPacket],
    round: usize,
    workers: usize,
) -> Vec<WorkerResult> {
    let cursor = AtomicUsize::new(0);
    let next_packets = Mutex::new(Vec::new());
    let work = |_worker: usize| -> WorkerResult {
        let pooled = shared.scratch_pool.lock().unwrap().pop();
        let mut scratch = pooled.unwrap_or_else(|| WorkerScratch {
            conn: vec![0; shared.weights.len()],
            touched: Vec::new(),
        });
        let mut result = WorkerResult::default();
        let mut builder = PacketBuilder::new(packet_bound(shared.g.m()));
        loop {
            let idx = cursor.fetch_add(1, Ordering::Relaxed);
            let Some(packet) = packets.get(idx) else { break };
            let mut rng = rng_for(shared.params.seed, &[round as u64, idx as u64]);
            for &v in &packet.vertices {
                result.touched_edges += shared.g.degree(v);
                if let Some((from, to)) = process_vertex(shared, &mut scratch, &mut rng, v) {
                    result.moves.push((v, from, to));
                    for &u in shared.g.neighbors(v) {
                        let prev = shared.queued_round[u as usize].swap(round as u32, Ordering::Relaxed);
                        if prev != round as u32 {
                            if let Some(done) = builder.push(u, shared.g.degree(u)) {
                                if workers == 1 {
                                    result.next.push(done);
                                } else {
                                    next_packets.lock().unwrap().push(done);
                                }
                            }
                        }
                    }
                }
            }
        }
        if let Some(done) = builder.finish() {
            result.next.push(done);
        }
        shared.scratch_pool.lock().unwrap().push(scratch);
        result
    };
    if workers <= 1 {
        return vec![work(0)];
    }
    let mut results: Vec<WorkerResult> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers).map(|w| s.spawn(move || work(w))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    results.push(WorkerResult {
        next: next_packets.into_inner().unwrap(),
        ..Default::default()
    });
    results
}

fn process_vertex(
    shared: &Shared<'_>,
    scratch: &mut WorkerScratch,
    rng: &mut impl Rng,
    v: NodeId,
) -> Option<(u32, u32)> {
    let g = shared.g;
    let labels = shared.labels;
    let weights = shared.weights;
    let bound = shared.params.bound;
    let own = labels[v as usize].load(Ordering::Relaxed);
    let vw = g.vertex_weight(v);

    for (u, w) in g.adjacent(v) {
        let l = labels[u as usize].load(Ordering::Relaxed);
        if scratch.conn[l as usize] == 0 {
            scratch.touched.push(l);
        }
        scratch.conn[l as usize] += w;
    }
    let own_conn = scratch.conn[own as usize];

    let mut best: Option<u32> = None;
    let mut best_conn = Weight::MIN;
    let mut ties = 0u32;
    if shared.params.mode == Mode::Clustering {
        best = Some(own);
        best_conn = own_conn;
        ties = 1;
    }
    for &l in &scratch.touched {
        if l == own {
            continue;
        }
        let c = scratch.conn[l as usize];
        if c < best_conn {
            continue;
        }
        if weights[l as usize].load(Ordering::Relaxed) + vw > bound {
            continue;
        }
        if c > best_conn {
            best = Some(l);
            best_conn = c;
            ties = 1;
        } else {
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                best = Some(l);
            }
        }
    }
    for &l in &scratch.touched {
        scratch.conn[l as usize] = 0;
    }
    scratch.touched.clear();

    let target = best?;
    if target == own {
        return None;
    }
    if shared.params.mode == Mode::Refinement && best_conn <= own_conn {
        return None;
    }
    if !try_reserve(&weights[target as usize], vw, bound) {
        return None;
    }
    weights[own as usize].fetch_sub(vw, Ordering::AcqRel);
    labels[v as usize].store(target, Ordering::Relaxed);
    Some((own, target))
}

/// Adds `amount` to `cell` unless that would exceed `bound`.
#[inline]
pub(crate) fn try_reserve(cell: &AtomicI64, amount: Weight, bound: Weight) -> bool {
    let mut cur = cell.load(Ordering::Acquire);
    loop {
        if cur + amount > bound {
            return false;
        }
        match cell.compare_exchange_weak(cur, cur + amount, Ordering::AcqRel, Ordering::Acquire) {
            Ok(_) => return true,
            Err(actual) => cur = actual,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(leaves: usize) -> Graph {
        let e: Vec<_> = (1..=leaves).map(|i| (0, i, 1)).collect();
        Graph::from_edges(leaves + 1, &e, None).unwrap()
    }

    #[test]
    fn bound_formula() {
        assert_eq!(packet_bound(4_000_000), 2000);
        assert_eq!(packet_bound(100), 1000);
    }

    #[test]
    fn heavy_vertex_is_singleton_packet() {
        let g = star(5000);
        let mut order: Vec<NodeId> = (1..=5000).collect();
        order.insert(2500, 0);
        let packets = build_packets(&order, &g);
        let center = packets.iter().find(|p| p.vertices.contains(&0)).unwrap();
        assert_eq!(center.vertices, vec![0]);
        for p in &packets {
            assert!(p.degree_sum <= 1000 || p.vertices.len() == 1);
        }
        let flat: Vec<NodeId> = packets.iter().flat_map(|p| p.vertices.clone()).collect();
        assert_eq!(flat, order);
    }

    #[test]
    fn reserve_respects_bound() {
        let cell = AtomicI64::new(3);
        assert!(try_reserve(&cell, 2, 5));
        assert!(!try_reserve(&cell, 1, 5));
        assert_eq!(cell.load(Ordering::Relaxed), 5);
    }
}
