use std::sync::atomic::{AtomicBool, AtomicI64, Ordering};

use crate::graph::{Graph, NodeId, Weight};
use crate::hashcache::CacheAwareMap;
use crate::util::chunk_ranges;

use super::{ClusterAssignment, ConcurrentAccumulator, HierarchyLevel};

/// Inclusive prefix sum, computed blockwise on `workers` threads.
pub fn prefix_sum(values: &[u32], workers: usize) -> Vec<u32> {
    let mut out = values.to_vec();
    let ranges = chunk_ranges(out.len(), workers);
    if workers <= 1 || out.len() < 4096 {
        for i in 1..out.len() {
            out[i] += out[i - 1];
        }
        return out;
    }
    let mut slices: Vec<&mut [u32]> = Vec::with_capacity(ranges.len());
    let mut rest: &mut [u32] = &mut out;
    for r in &ranges {
        let (head, tail) = rest.split_at_mut(r.len());
        slices.push(head);
        rest = tail;
    }
    let totals: Vec<u32> = std::thread::scope(|s| {
        let handles: Vec<_> = slices
            .iter_mut()
            .map(|slice| {
                s.spawn(move || {
                    for i in 1..slice.len() {
                        slice[i] += slice[i - 1];
                    }
                    slice.last().copied().unwrap_or(0)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut offsets = Vec::with_capacity(totals.len());
    let mut acc = 0;
    for t in totals {
        offsets.push(acc);
        acc += t;
    }
    std::thread::scope(|s| {
        for (slice, off) in slices.into_iter().zip(offsets) {
            if off != 0 {
                s.spawn(move || slice.iter_mut().for_each(|x| *x += off));
            }
        }
    });
    out
}

fn run_chunks<T: Send>(len: usize, workers: usize, f: impl Fn(std::ops::Range<usize>) -> T + Sync) -> Vec<T> {
    let ranges = chunk_ranges(len, workers);
    if workers <= 1 {
        return ranges.into_iter().map(f).collect();
    }
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = ranges.into_iter().map(|r| s.spawn(move || f(r))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

/// Contracts each cluster into one vertex.
///
/// Cluster IDs are remapped densely with a prefix sum, inter-cluster edge
/// weights are accumulated in parallel into a shared striped map, and the
/// coarse adjacency is assembled sequentially with sorted neighbor lists.
pub fn contract(g: &Graph, clusters: &ClusterAssignment, workers: usize) -> HierarchyLevel {
    let n = g.n();
    let workers = workers.max(1);

    // remap
    let used: Vec<AtomicBool> = (0..n).map(|_| AtomicBool::new(false)).collect();
    run_chunks(n, workers, |r| {
        for v in r {
            used[clusters.cluster[v] as usize].store(true, Ordering::Relaxed);
        }
    });
    let indicator: Vec<u32> = used.iter().map(|b| b.load(Ordering::Relaxed) as u32).collect();
    let prefix = prefix_sum(&indicator, workers);
    let coarse_n = prefix.last().copied().unwrap_or(0) as usize;
    let map_to_coarse: Vec<NodeId> = run_chunks(n, workers, |r| {
        r.map(|v| prefix[clusters.cluster[v] as usize] - 1)
            .collect::<Vec<_>>()
    })
    .concat();

    // edge weight accumulation
    let avg_deg = if n == 0 { 0.0 } else { 2.0 * g.m() as f64 / n as f64 };
    let hint = ((avg_deg * coarse_n as f64) as usize).min(g.m() / 10);
    let key_bits = 64 - ((coarse_n as u64).saturating_mul(coarse_n as u64)).leading_zeros();
    let shared = ConcurrentAccumulator::new(workers, key_bits, hint, 0x5eed);
    let coarse_vwgt: Vec<AtomicI64> = (0..coarse_n).map(|_| AtomicI64::new(0)).collect();
    run_chunks(n, workers, |r| {
        let mut local =
            CacheAwareMap::<Weight>::for_keys_below((coarse_n as u64).saturating_mul(coarse_n as u64), 0, 0x10ca1);
        for v in r {
            let cv = map_to_coarse[v];
            coarse_vwgt[cv as usize].fetch_add(g.vertex_weight(v as NodeId), Ordering::Relaxed);
            for (u, w) in g.adjacent(v as NodeId) {
                let cu = map_to_coarse[u as usize];
                if cv < cu {
                    local.upsert(cv as u64 * coarse_n as u64 + cu as u64, w, |a, b| a + b);
                }
            }
        }
        shared.add_batch(local.iter());
    });

    // assembly
    let entries = shared.into_entries();
    let mut degree = vec![0usize; coarse_n + 1];
    for &(key, _) in &entries {
        degree[(key / coarse_n as u64) as usize + 1] += 1;
        degree[(key % coarse_n as u64) as usize + 1] += 1;
    }
    for i in 0..coarse_n {
        degree[i + 1] += degree[i];
    }
    let xadj = degree.clone();
    let mut fill = degree;
    let mut adjncy = vec![0 as NodeId; 2 * entries.len()];
    let mut adjwgt = vec![0 as Weight; 2 * entries.len()];
    for &(key, w) in &entries {
        let a = (key / coarse_n as u64) as usize;
        let b = (key % coarse_n as u64) as usize;
        adjncy[fill[a]] = b as NodeId;
        adjwgt[fill[a]] = w;
        fill[a] += 1;
        adjncy[fill[b]] = a as NodeId;
        adjwgt[fill[b]] = w;
        fill[b] += 1;
    }
    let mut pairs = Vec::new();
    for v in 0..coarse_n {
        let r = xadj[v]..xadj[v + 1];
        pairs.clear();
        pairs.extend(adjncy[r.clone()].iter().copied().zip(adjwgt[r.clone()].iter().copied()));
        pairs.sort_unstable_by_key(|p| p.0);
        for (i, &(u, w)) in pairs.iter().enumerate() {
            adjncy[r.start + i] = u;
            adjwgt[r.start + i] = w;
        }
    }
    let vwgt = coarse_vwgt.into_iter().map(|w| w.into_inner()).collect();
    HierarchyLevel {
        coarse_graph: Graph::from_parts(xadj, adjncy, adjwgt, vwgt),
        map_to_coarse,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clusters_of(g: &Graph, cluster: Vec<NodeId>) -> ClusterAssignment {
        let mut w = vec![0; g.n()];
        for (v, &c) in cluster.iter().enumerate() {
            w[c as usize] += g.vertex_weight(v as NodeId);
        }
        ClusterAssignment {
            cluster,
            cluster_weight: w,
            bound: Weight::MAX,
        }
    }

    fn cycle4() -> Graph {
        Graph::from_edges(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)], None).unwrap()
    }

    #[test]
    fn prefix_sum_matches_sequential() {
        let v: Vec<u32> = (0..10_000).map(|i| (i % 3 == 0) as u32).collect();
        let seq = prefix_sum(&v, 1);
        assert_eq!(prefix_sum(&v, 4), seq);
        assert_eq!(*seq.last().unwrap(), 3334);
    }

    #[test]
    fn cycle_pairs() {
        let g = cycle4();
        let l = contract(&g, &clusters_of(&g, vec![0, 0, 2, 2]), 1);
        let c = &l.coarse_graph;
        assert_eq!(c.n(), 2);
        assert_eq!(c.vertex_weights(), &[2, 2]);
        assert_eq!(c.m(), 1);
        assert_eq!(c.edge_weights(0), &[2]);
        assert!(c.check_invariants());
    }

    #[test]
    fn identity_is_isomorphic() {
        let g = cycle4();
        let l = contract(&g, &ClusterAssignment::identity(&g, 1), 2);
        assert_eq!(l.coarse_graph, g);
    }

    #[test]
    fn single_cluster() {
        let g = cycle4();
        let l = contract(&g, &clusters_of(&g, vec![1, 1, 1, 1]), 3);
        assert_eq!(l.coarse_graph.n(), 1);
        assert_eq!(l.coarse_graph.m(), 0);
        assert_eq!(l.coarse_graph.vertex_weights(), &[4]);
    }
}
