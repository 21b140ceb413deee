//! Parallel multi-try k-way local search.
//!
//! Workers run many small FM-style searches, each grown from one boundary
//! vertex. A search sees the global partition through a private overlay of
//! speculative block IDs and private block weights, so the global state does
//! not change while searches run. Vertices are claimed with a global mark at
//! move time. Afterwards a single agent replays every sequence against the
//! real partition, recomputing gains, and keeps the best prefix of each.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::{BlockId, Graph, NodeId, Weight};
use crate::hashcache::CacheAwareMap;
use crate::partition::Partition;
use crate::util::{chunk_ranges, derive_seed, rng_for};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlsConfig {
    pub global_iterations: usize,
    /// Local iterations repeat while the last one gained more than this
    /// fraction of the global iteration's total.
    pub threshold: f64,
    pub alpha: f64,
    /// Defaults to `ln n`.
    pub beta: Option<f64>,
}

impl Default for MlsConfig {
    fn default() -> Self {
        MlsConfig {
            global_iterations: 3,
            threshold: 0.1,
            alpha: 3.0,
            beta: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub vertex: NodeId,
    pub from: BlockId,
    pub to: BlockId,
    /// Gain as seen by the search that made the move.
    pub gain: Weight,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MoveSequence {
    pub moves: Vec<Move>,
    /// Length of the prefix with the best local cut.
    pub claimed_best_prefix: usize,
    /// (worker, search index on that worker)
    pub origin: (usize, usize),
}

impl MoveSequence {
    pub fn claimed_gain(&self) -> Weight {
        self.moves[..self.claimed_best_prefix].iter().map(|m| m.gain).sum()
    }
}

/// Random-walk statistics of the gains observed since the last improvement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingStats {
    pub steps: usize,
    mean: f64,
    m2: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl StoppingStats {
    pub fn new(alpha: f64, beta: f64) -> Self {
        StoppingStats {
            steps: 0,
            mean: 0.0,
            m2: 0.0,
            alpha,
            beta,
        }
    }

    /// Stats as if `steps` gains with the given mean and variance were seen.
    pub fn from_moments(steps: usize, mean: f64, variance: f64, alpha: f64, beta: f64) -> Self {
        StoppingStats {
            steps,
            mean,
            m2: variance * steps as f64,
            alpha,
            beta,
        }
    }

    pub fn push(&mut self, gain: Weight) {
        self.steps += 1;
        let x = gain as f64;
        let d = x - self.mean;
        self.mean += d / self.steps as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn reset(&mut self) {
        self.steps = 0;
        self.mean = 0.0;
        self.m2 = 0.0;
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.m2 / self.steps as f64
        }
    }
}

/// `x * mean^2 > alpha * variance + beta`, never right after an improvement.
pub fn should_stop(s: &StoppingStats) -> bool {
    if s.steps == 0 {
        return false;
    }
    s.steps as f64 * s.mean * s.mean > s.alpha * s.variance() + s.beta
}

/// Per-worker state of one localized search. Reused across searches; every
/// search starts from a cleared view.
pub struct LocalSearchView {
    overlay: CacheAwareMap<BlockId>,
    local_block_weight: Vec<Weight>,
    pq: BinaryHeap<(Weight, Reverse<NodeId>)>,
    move_log: Vec<Move>,
    stats: StoppingStats,
    conn: Vec<Weight>,
    touched: Vec<BlockId>,
}

impl LocalSearchView {
    pub fn new(n: usize, k: usize, alpha: f64, beta: f64, seed: u64) -> Self {
        LocalSearchView {
            overlay: CacheAwareMap::for_keys_below(n as u64, 0, seed),
            local_block_weight: vec![0; k],
            pq: BinaryHeap::new(),
            move_log: Vec::new(),
            stats: StoppingStats::new(alpha, beta),
            conn: vec![0; k],
            touched: Vec::new(),
        }
    }

    /// Clears the view and queues `start` plus its unmarked neighbors.
    pub fn start(&mut self, g: &Graph, part: &Partition, marks: &[AtomicBool], start: NodeId, bound: Weight) {
        self.overlay.clear();
        self.local_block_weight.copy_from_slice(part.block_weights());
        self.pq.clear();
        self.move_log.clear();
        self.stats.reset();
        for v in std::iter::once(start).chain(g.neighbors(start).iter().copied()) {
            if marks[v as usize].load(Ordering::Relaxed) {
                continue;
            }
            if let Some((_, gain)) = self.best_move(g, part, v, bound) {
                self.pq.push((gain, Reverse(v)));
            }
        }
    }

    #[inline]
    pub fn block(&self, part: &Partition, v: NodeId) -> BlockId {
        if self.overlay.is_empty() {
            return part.block(v);
        }
        self.overlay.get(v as u64).unwrap_or_else(|| part.block(v))
    }

    pub fn local_block_weights(&self) -> &[Weight] {
        &self.local_block_weight
    }

    /// Best adjacent target with room under `bound`; ties go to the smaller
    /// block ID.
    fn best_move(&mut self, g: &Graph, part: &Partition, v: NodeId, bound: Weight) -> Option<(BlockId, Weight)> {
        let own = self.block(part, v);
        for (u, w) in g.adjacent(v) {
            let b = self.block(part, u);
            if self.conn[b as usize] == 0 {
                self.touched.push(b);
            }
            self.conn[b as usize] += w;
        }
        let internal = self.conn[own as usize];
        let vw = g.vertex_weight(v);
        let mut best: Option<(BlockId, Weight)> = None;
        for &b in &self.touched {
            if b == own || self.local_block_weight[b as usize] + vw > bound {
                continue;
            }
            let gain = self.conn[b as usize] - internal;
            if best.is_none_or(|(bb, bg)| gain > bg || (gain == bg && b < bb)) {
                best = Some((b, gain));
            }
        }
        for &b in &self.touched {
            self.conn[b as usize] = 0;
        }
        self.touched.clear();
        best
    }
}

/// One localized search from the queued start set of `view`. Moves only
/// touch the view; the returned sequence is cut back to its best prefix.
pub fn perform_moves(
    view: &mut LocalSearchView,
    g: &Graph,
    part: &Partition,
    marks: &[AtomicBool],
    bound: Weight,
) -> MoveSequence {
    let mut gained: Weight = 0;
    let mut best: Weight = 0;
    let mut best_len = 0;
    while let Some((key, Reverse(v))) = view.pq.pop() {
        if view.overlay.contains_key(v as u64) || marks[v as usize].load(Ordering::Relaxed) {
            continue;
        }
        let Some((to, gain)) = view.best_move(g, part, v, bound) else { continue };
        if gain != key {
            view.pq.push((gain, Reverse(v)));
            continue;
        }
        if marks[v as usize]
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Relaxed)
            .is_err()
        {
            continue;
        }
        let from = view.block(part, v);
        let w = g.vertex_weight(v);
        view.overlay.insert(v as u64, to);
        view.local_block_weight[from as usize] -= w;
        view.local_block_weight[to as usize] += w;
        view.move_log.push(Move {
            vertex: v,
            from,
            to,
            gain,
        });
        gained += gain;
        view.stats.push(gain);
        if gained > best {
            best = gained;
            best_len = view.move_log.len();
            view.stats.reset();
        } else if should_stop(&view.stats) {
            break;
        }
        for &u in g.neighbors(v) {
            if marks[u as usize].load(Ordering::Relaxed) || view.overlay.contains_key(u as u64) {
                continue;
            }
            if let Some((_, gu)) = view.best_move(g, part, u, bound) {
                view.pq.push((gu, Reverse(u)));
            }
        }
    }
    view.move_log.truncate(best_len);
    MoveSequence {
        moves: std::mem::take(&mut view.move_log),
        claimed_best_prefix: best_len,
        origin: (0, 0),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ApplyReport {
    /// Cut decrease over all sequences.
    pub gain: Weight,
    /// Applied prefix length per sequence.
    pub applied: Vec<usize>,
    pub moved: Vec<NodeId>,
}

/// Replays `sequences` in order against `part`. Each sequence is replayed
/// until a move would push its target above `bound`; of the replayed moves
/// the prefix with the smallest cut (shortest on ties) is kept.
pub fn apply_moves(g: &Graph, part: &mut Partition, sequences: &[MoveSequence], bound: Weight) -> Result<ApplyReport> {
    let mut seen = HashSet::new();
    for m in sequences.iter().flat_map(|s| &s.moves) {
        if !seen.insert(m.vertex) || part.block(m.vertex) != m.from {
            return Err(Error::StaleMove(m.vertex));
        }
    }
    let start_cut = part.cut();
    let mut report = ApplyReport::default();
    for seq in sequences {
        let mut best_cut = part.cut();
        let mut best_len = 0;
        let mut done = 0;
        for (i, m) in seq.moves.iter().enumerate() {
            if part.block_weight(m.to) + g.vertex_weight(m.vertex) > bound {
                break;
            }
            part.move_vertex(g, m.vertex, m.to);
            done = i + 1;
            if part.cut() < best_cut {
                best_cut = part.cut();
                best_len = done;
            }
        }
        for m in seq.moves[best_len..done].iter().rev() {
            part.move_vertex(g, m.vertex, m.from);
        }
        report.applied.push(best_len);
        report.moved.extend(seq.moves[..best_len].iter().map(|m| m.vertex));
    }
    report.gain = start_cut - part.cut();
    Ok(report)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MlsStats {
    pub global_iterations: usize,
    pub local_iterations: usize,
    pub searches: usize,
    pub total_gain: Weight,
    /// Cut after every replay step.
    pub cuts_after_apply: Vec<Weight>,
}

/// Multi-try k-way local search. Never increases the cut and never pushes a
/// block above `bound`.
pub fn mls(
    g: &Graph,
    part: &mut Partition,
    config: &MlsConfig,
    workers: usize,
    seed: u64,
    bound: Weight,
) -> Result<MlsStats> {
    let mut stats = MlsStats::default();
    let n = g.n();
    let k = part.k();
    if k < 2 || n == 0 {
        return Ok(stats);
    }
    let workers = workers.max(1);
    let beta = config.beta.unwrap_or((n as f64).ln().max(0.0));
    let marks: Vec<AtomicBool> = (0..n).map(|_| AtomicBool::new(false)).collect();
    let mut views: Vec<LocalSearchView> = (0..workers)
        .map(|w| LocalSearchView::new(n, k, config.alpha, beta, derive_seed(seed, &[0x71e, w as u64])))
        .collect();

    for gi in 0..config.global_iterations {
        stats.global_iterations += 1;
        let mut queue = fill_queue(part.boundary_vertices(g), workers, derive_seed(seed, &[gi as u64]));
        let mut total_gain: Weight = 0;
        let mut li = 0u64;
        while !queue.is_empty() {
            marks.iter().for_each(|m| m.store(false, Ordering::Relaxed));
            let (gain, moved, searches) = if workers == 1 {
                local_iteration_sequential(g, part, &marks, &queue, &mut views[0], bound, &mut stats)?
            } else {
                let (sequences, searches) = local_iteration_parallel(g, part, &marks, &queue, &mut views, bound);
                let report = apply_moves(g, part, &sequences, bound)?;
                stats.cuts_after_apply.push(part.cut());
                (report.gain, report.moved, searches)
            };
            stats.local_iterations += 1;
            stats.searches += searches;
            total_gain += gain;
            queue = moved;
            queue.shuffle(&mut rng_for(seed, &[gi as u64, li, 0x9e]));
            li += 1;
            if gain as f64 <= config.threshold * total_gain as f64 {
                break;
            }
        }
        stats.total_gain += total_gain;
    }
    Ok(stats)
}

/// Each worker shuffles its share of the vertices into a bucket; buckets are
/// then concatenated in random order.
fn fill_queue(vertices: Vec<NodeId>, workers: usize, seed: u64) -> Vec<NodeId> {
    let mut buckets: Vec<Vec<NodeId>> = chunk_ranges(vertices.len(), workers)
        .into_iter()
        .enumerate()
        .map(|(w, r)| {
            let mut b = vertices[r].to_vec();
            b.shuffle(&mut rng_for(seed, &[w as u64]));
            b
        })
        .collect();
    buckets.shuffle(&mut rng_for(seed, &[u64::MAX]));
    buckets.concat()
}

/// With one worker every search sees the moves of the ones before it, so each
/// sequence is replayed right after it is found.
fn local_iteration_sequential(
    g: &Graph,
    part: &mut Partition,
    marks: &[AtomicBool],
    queue: &[NodeId],
    view: &mut LocalSearchView,
    bound: Weight,
    stats: &mut MlsStats,
) -> Result<(Weight, Vec<NodeId>, usize)> {
    let mut gain = 0;
    let mut moved = Vec::new();
    let mut searches = 0;
    for (j, &v) in queue.iter().enumerate() {
        if marks[v as usize].load(Ordering::Relaxed) {
            continue;
        }
        searches += 1;
        view.start(g, part, marks, v, bound);
        let mut seq = perform_moves(view, g, part, marks, bound);
        if seq.moves.is_empty() {
            continue;
        }
        seq.origin = (0, j);
        let report = apply_moves(g, part, std::slice::from_ref(&seq), bound)?;
        gain += report.gain;
        moved.extend(report.moved);
    }
    stats.cuts_after_apply.push(part.cut());
    Ok((gain, moved, searches))
}

fn local_iteration_parallel(
    g: &Graph,
    part: &Partition,
    marks: &[AtomicBool],
    queue: &[NodeId],
    views: &mut [LocalSearchView],
    bound: Weight,
) -> (Vec<MoveSequence>, usize) {
    let cursor = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let per_worker: Vec<(Vec<MoveSequence>, usize)> = std::thread::scope(|s| {
        let handles: Vec<_> = views
            .iter_mut()
            .enumerate()
            .map(|(w, view)| {
                let cursor = &cursor;
                let stop = &stop;
                s.spawn(move || {
                    let mut out = Vec::new();
                    let mut searches = 0;
                    while !stop.load(Ordering::Relaxed) {
                        let i = cursor.fetch_add(1, Ordering::Relaxed);
                        let Some(&v) = queue.get(i) else {
                            stop.store(true, Ordering::Relaxed);
                            break;
                        };
                        if marks[v as usize].load(Ordering::Relaxed) {
                            continue;
                        }
                        view.start(g, part, marks, v, bound);
                        let mut seq = perform_moves(view, g, part, marks, bound);
                        if !seq.moves.is_empty() {
                            seq.origin = (w, searches);
                            out.push(seq);
                        }
                        searches += 1;
                    }
                    (out, searches)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let searches = per_worker.iter().map(|(_, s)| s).sum();
    (per_worker.into_iter().flat_map(|(seqs, _)| seqs).collect(), searches)
}
