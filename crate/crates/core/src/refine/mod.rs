//! Local search during uncoarsening: size-constrained label propagation over
//! blocks, then parallel multi-try k-way local search.

mod mls;

pub use mls::{
    apply_moves, mls, perform_moves, should_stop, ApplyReport, LocalSearchView, MlsConfig, MlsStats,
    Move, MoveSequence, StoppingStats,
};

use std::sync::atomic::{AtomicI64, AtomicU32};

use rand::seq::SliceRandom;

use crate::error::Result;
use crate::graph::{BlockId, Graph, Weight};
use crate::label_propagation::{self, build_packets, LpParams, Mode, RoundStats};
use crate::partition::Partition;
use crate::util::{derive_seed, rng_for};

/// Label propagation refinement under the block bound `bound`. Vertices only
/// move to a strictly better connected block, so the cut never increases.
pub fn lp_refine(
    g: &Graph,
    part: &mut Partition,
    iterations: usize,
    workers: usize,
    seed: u64,
    bound: Weight,
) -> Result<Vec<RoundStats>> {
    if iterations == 0 || part.k() < 2 {
        return Ok(Vec::new());
    }
    let mut order = part.boundary_vertices(g);
    order.shuffle(&mut rng_for(seed, &[0x1b]));
    order.sort_by_key(|&v| g.degree(v));
    let labels: Vec<AtomicU32> = part.assignment().iter().map(|&b| AtomicU32::new(b)).collect();
    let weights: Vec<AtomicI64> = part.block_weights().iter().map(|&w| AtomicI64::new(w)).collect();
    let stats = label_propagation::run(
        g,
        &labels,
        &weights,
        build_packets(&order, g),
        LpParams {
            bound,
            iterations,
            workers: workers.max(1),
            seed: derive_seed(seed, &[0x2f]),
            mode: Mode::Refinement,
        },
    );
    let assignment: Vec<BlockId> = labels.into_iter().map(|l| l.into_inner()).collect();
    *part = Partition::new(g, part.k(), part.epsilon(), assignment)?;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::rng;
    use rand::Rng;

    fn path4() -> Graph {
        Graph::from_edges(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1)], None).unwrap()
    }

    #[test]
    fn path_improves_with_room() {
        let g = path4();
        for seed in 0..20 {
            let mut p = Partition::new(&g, 2, 0.5, vec![0, 1, 0, 1]).unwrap();
            let bound = p.bound();
            lp_refine(&g, &mut p, 25, 1, seed, bound).unwrap();
            assert!(p.is_balanced());
            assert!(p.cut() <= 2, "seed {seed}: cut {}", p.cut());
        }
    }

    #[test]
    fn tight_bound_blocks_every_move() {
        // with eps = 0.03 both blocks sit at the bound of 2
        let g = path4();
        let mut p = Partition::new(&g, 2, 0.03, vec![0, 1, 0, 1]).unwrap();
        let bound = p.bound();
        lp_refine(&g, &mut p, 25, 1, 0, bound).unwrap();
        assert_eq!(p.assignment(), &[0, 1, 0, 1]);
        assert_eq!(p.cut(), 3);
    }

    #[test]
    fn local_optimum_is_kept() {
        let e = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)];
        let e: Vec<_> = e.iter().map(|&(u, v)| (u, v, 1)).collect();
        let g = Graph::from_edges(6, &e, None).unwrap();
        let mut p = Partition::new(&g, 2, 0.03, vec![0, 0, 0, 1, 1, 1]).unwrap();
        let before = p.clone();
        let bound = p.bound();
        lp_refine(&g, &mut p, 25, 2, 3, bound).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn never_worsens() {
        let mut r = rng(21);
        for trial in 0..30 {
            let n = 200;
            let mut e = Vec::new();
            for u in 0..n {
                for _ in 0..3 {
                    let v = r.random_range(0..n);
                    if u != v {
                        e.push((u, v, r.random_range(1..5)));
                    }
                }
            }
            let g = Graph::from_edges(n, &e, None).unwrap();
            let k = [2, 4, 8][trial % 3];
            let a: Vec<BlockId> = (0..n).map(|v| (v % k) as BlockId).collect();
            let mut p = Partition::new(&g, k, 0.03, a).unwrap();
            let before = p.cut();
            let bound = p.bound();
            lp_refine(&g, &mut p, 25, 1 + trial % 4, trial as u64, bound).unwrap();
            assert!(p.cut() <= before);
            assert!(p.is_balanced());
        }
    }
}
