//! Block assignment bookkeeping plus the cut, balance and gain arithmetic.

use crate::error::{Error, Result};
use crate::graph::{BlockId, Graph, NodeId, Weight};

/// `(1 + epsilon) * ceil(total_weight / k)`.
pub fn l_max(total_weight: Weight, k: usize, epsilon: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidBlockCount { k, n: 0 });
    }
    let per_block = (total_weight as u64).div_ceil(k as u64) as f64;
    Ok((1.0 + epsilon) * per_block)
}

/// Largest integral block weight that satisfies the balance constraint.
///
/// The tiny slack absorbs products such as `1.15 * 100` evaluating to
/// `114.999...`.
pub fn block_weight_bound(total_weight: Weight, k: usize, epsilon: f64) -> Result<Weight> {
    let lmax = l_max(total_weight, k, epsilon)?;
    Ok((lmax * (1.0 + 1e-12) + 1e-9).floor() as Weight)
}

/// Total weight of edges whose endpoints lie in different blocks.
pub fn cut_size(g: &Graph, assignment: &[BlockId]) -> Weight {
    g.edges()
        .filter(|&(u, v, _)| assignment[u as usize] != assignment[v as usize])
        .map(|(_, _, w)| w)
        .sum()
}

/// Best target block for `v` and the cut decrease of moving there.
///
/// Ties go to the smallest block ID. For an isolated vertex this is the
/// smallest other block with gain 0.
pub fn gain(g: &Graph, assignment: &[BlockId], k: usize, v: NodeId) -> (BlockId, Weight) {
    assert!(k >= 2, "gain needs at least two blocks");
    let own = assignment[v as usize];
    let mut conn = vec![0 as Weight; k];
    for (u, w) in g.adjacent(v) {
        conn[assignment[u as usize] as usize] += w;
    }
    let internal = conn[own as usize];
    let mut best: Option<(BlockId, Weight)> = None;
    for (b, &c) in conn.iter().enumerate() {
        if b as BlockId == own {
            continue;
        }
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((b as BlockId, c));
        }
    }
    let (target, external) = best.unwrap();
    (target, external - internal)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub balanced: bool,
    pub cut: Weight,
    pub max_block_weight: Weight,
    pub overloaded: Vec<BlockId>,
    pub l_max: f64,
}

/// Recomputes cut and block weights from scratch and flags overloaded blocks.
pub fn validate_partition(
    g: &Graph,
    assignment: &[BlockId],
    k: usize,
    epsilon: f64,
) -> Result<ValidationReport> {
    if assignment.len() != g.n() {
        return Err(Error::AssignmentLength {
            expected: g.n(),
            got: assignment.len(),
        });
    }
    let weights = block_weights(g, assignment, k)?;
    let bound = block_weight_bound(g.total_vertex_weight(), k, epsilon)?;
    let overloaded: Vec<BlockId> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > bound)
        .map(|(b, _)| b as BlockId)
        .collect();
    Ok(ValidationReport {
        balanced: overloaded.is_empty(),
        cut: cut_size(g, assignment),
        max_block_weight: weights.iter().copied().max().unwrap_or(0),
        overloaded,
        l_max: l_max(g.total_vertex_weight(), k, epsilon)?,
    })
}

fn block_weights(g: &Graph, assignment: &[BlockId], k: usize) -> Result<Vec<Weight>> {
    let mut weights = vec![0; k];
    for (v, &b) in assignment.iter().enumerate() {
        if b as usize >= k {
            return Err(Error::BlockOutOfRange {
                vertex: v,
                block: b,
                k,
            });
        }
        weights[b as usize] += g.vertex_weight(v as NodeId);
    }
    Ok(weights)
}

/// A k-way partition with cached block weights and cut.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    k: usize,
    epsilon: f64,
    assignment: Vec<BlockId>,
    block_weight: Vec<Weight>,
    cut: Weight,
    total_weight: Weight,
}

impl Partition {
    pub fn new(g: &Graph, k: usize, epsilon: f64, assignment: Vec<BlockId>) -> Result<Partition> {
        if k == 0 {
            return Err(Error::InvalidBlockCount { k, n: g.n() });
        }
        if assignment.len() != g.n() {
            return Err(Error::AssignmentLength {
                expected: g.n(),
                got: assignment.len(),
            });
        }
        let block_weight = block_weights(g, &assignment, k)?;
        Ok(Partition {
            k,
            epsilon,
            cut: cut_size(g, &assignment),
            assignment,
            block_weight,
            total_weight: g.total_vertex_weight(),
        })
    }

    /// Assembles a partition from already known weights and cut.
    pub(crate) fn from_parts(
        k: usize,
        epsilon: f64,
        assignment: Vec<BlockId>,
        block_weight: Vec<Weight>,
        cut: Weight,
        total_weight: Weight,
    ) -> Partition {
        Partition {
            k,
            epsilon,
            assignment,
            block_weight,
            cut,
            total_weight,
        }
    }

    /// Everything in block 0.
    pub fn single_block(g: &Graph, k: usize, epsilon: f64) -> Result<Partition> {
        Partition::new(g, k, epsilon, vec![0; g.n()])
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn block(&self, v: NodeId) -> BlockId {
        self.assignment[v as usize]
    }

    pub fn assignment(&self) -> &[BlockId] {
        &self.assignment
    }

    pub fn into_assignment(self) -> Vec<BlockId> {
        self.assignment
    }

    #[inline]
    pub fn block_weight(&self, b: BlockId) -> Weight {
        self.block_weight[b as usize]
    }

    pub fn block_weights(&self) -> &[Weight] {
        &self.block_weight
    }

    #[inline]
    pub fn cut(&self) -> Weight {
        self.cut
    }

    pub fn total_weight(&self) -> Weight {
        self.total_weight
    }

    pub fn l_max(&self) -> f64 {
        l_max(self.total_weight, self.k, self.epsilon).expect("k >= 1")
    }

    /// Integral form of [`Partition::l_max`].
    pub fn bound(&self) -> Weight {
        block_weight_bound(self.total_weight, self.k, self.epsilon).expect("k >= 1")
    }

    pub fn max_block_weight(&self) -> Weight {
        self.block_weight.iter().copied().max().unwrap_or(0)
    }

    pub fn is_balanced(&self) -> bool {
        self.max_block_weight() <= self.bound()
    }

    /// Sum of weight above the bound over all blocks.
    pub fn overload(&self) -> Weight {
        let bound = self.bound();
        self.block_weight.iter().map(|&w| (w - bound).max(0)).sum()
    }

    /// Connection weight of `v` to block `b`.
    pub fn connection(&self, g: &Graph, v: NodeId, b: BlockId) -> Weight {
        g.adjacent(v)
            .filter(|&(u, _)| self.assignment[u as usize] == b)
            .map(|(_, w)| w)
            .sum()
    }

    /// Gain of moving `v` to `to` against the current assignment.
    pub fn move_gain(&self, g: &Graph, v: NodeId, to: BlockId) -> Weight {
        let from = self.block(v);
        if from == to {
            return 0;
        }
        let mut gain = 0;
        for (u, w) in g.adjacent(v) {
            let b = self.assignment[u as usize];
            if b == to {
                gain += w;
            } else if b == from {
                gain -= w;
            }
        }
        gain
    }

    /// Moves `v` to `to`, updating the cached cut and block weights.
    /// Returns the cut decrease.
    pub fn move_vertex(&mut self, g: &Graph, v: NodeId, to: BlockId) -> Weight {
        let from = self.block(v);
        if from == to {
            return 0;
        }
        let gain = self.move_gain(g, v, to);
        let w = g.vertex_weight(v);
        self.block_weight[from as usize] -= w;
        self.block_weight[to as usize] += w;
        self.assignment[v as usize] = to;
        self.cut -= gain;
        gain
    }

    /// Whether the cached cut and block weights match a full recount.
    pub fn is_consistent(&self, g: &Graph) -> bool {
        block_weights(g, &self.assignment, self.k).ok().as_ref() == Some(&self.block_weight)
            && cut_size(g, &self.assignment) == self.cut
    }

    pub fn boundary_vertices(&self, g: &Graph) -> Vec<NodeId> {
        (0..g.n() as NodeId)
            .filter(|&v| self.is_boundary(g, v))
            .collect()
    }

    #[inline]
    pub fn is_boundary(&self, g: &Graph, v: NodeId) -> bool {
        let b = self.block(v);
        g.neighbors(v).iter().any(|&u| self.assignment[u as usize] != b)
    }
}
