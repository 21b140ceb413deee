//! Immutable weighted undirected graph in compressed adjacency form.
//!
//! Every undirected edge is stored twice, once per endpoint, with the same
//! weight. Neighbor lists are sorted by vertex ID, which makes the layout
//! canonical for a given edge set.

use crate::error::{Error, Result};

pub type NodeId = u32;
pub type BlockId = u32;
pub type Weight = i64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    xadj: Vec<usize>,
    adjncy: Vec<NodeId>,
    adjwgt: Vec<Weight>,
    vwgt: Vec<Weight>,
    total_vertex_weight: Weight,
}

impl Graph {
    /// Builds a graph from an undirected edge list.
    ///
    /// Parallel edges are merged by summing their weights. Vertex weights
    /// default to 1.
    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize, Weight)],
        vertex_weights: Option<&[Weight]>,
    ) -> Result<Graph> {
        if n > NodeId::MAX as usize {
            return Err(Error::VertexOutOfRange {
                vertex: n,
                n: NodeId::MAX as usize,
            });
        }
        let vwgt = match vertex_weights {
            Some(w) => {
                if w.len() != n {
                    return Err(Error::VertexWeightCount {
                        expected: n,
                        got: w.len(),
                    });
                }
                if let Some(&bad) = w.iter().find(|&&x| x <= 0) {
                    return Err(Error::NonPositiveWeight(bad));
                }
                w.to_vec()
            }
            None => vec![1; n],
        };

        let mut half = Vec::with_capacity(edges.len() * 2);
        for &(u, v, w) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if w <= 0 {
                return Err(Error::NonPositiveWeight(w));
            }
            half.push((u as NodeId, v as NodeId, w));
            half.push((v as NodeId, u as NodeId, w));
        }
        half.sort_unstable_by_key(|&(u, v, _)| (u, v));

        let mut xadj = vec![0usize; n + 1];
        let mut adjncy = Vec::with_capacity(half.len());
        let mut adjwgt: Vec<Weight> = Vec::with_capacity(half.len());
        let mut last: Option<(NodeId, NodeId)> = None;
        for (u, v, w) in half {
            if last == Some((u, v)) {
                *adjwgt.last_mut().unwrap() += w;
                continue;
            }
            last = Some((u, v));
            adjncy.push(v);
            adjwgt.push(w);
            xadj[u as usize + 1] += 1;
        }
        for i in 0..n {
            xadj[i + 1] += xadj[i];
        }
        Ok(Graph::from_parts(xadj, adjncy, adjwgt, vwgt))
    }

    /// Assembles a graph from raw CSR arrays that are already symmetric,
    /// loop-free and deduplicated.
    pub(crate) fn from_parts(
        xadj: Vec<usize>,
        adjncy: Vec<NodeId>,
        adjwgt: Vec<Weight>,
        vwgt: Vec<Weight>,
    ) -> Graph {
        debug_assert_eq!(xadj.len(), vwgt.len() + 1);
        debug_assert_eq!(adjncy.len(), adjwgt.len());
        debug_assert_eq!(*xadj.last().unwrap(), adjncy.len());
        let total_vertex_weight = vwgt.iter().sum();
        Graph {
            xadj,
            adjncy,
            adjwgt,
            vwgt,
            total_vertex_weight,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.vwgt.len()
    }

    /// Number of undirected edges.
    #[inline]
    pub fn m(&self) -> usize {
        self.adjncy.len() / 2
    }

    #[inline]
    pub fn degree(&self, v: NodeId) -> usize {
        self.xadj[v as usize + 1] - self.xadj[v as usize]
    }

    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjncy[self.xadj[v as usize]..self.xadj[v as usize + 1]]
    }

    #[inline]
    pub fn edge_weights(&self, v: NodeId) -> &[Weight] {
        &self.adjwgt[self.xadj[v as usize]..self.xadj[v as usize + 1]]
    }

    /// Neighbors of `v` paired with the connecting edge weight.
    #[inline]
    pub fn adjacent(&self, v: NodeId) -> impl Iterator<Item = (NodeId, Weight)> + '_ {
        self.neighbors(v)
            .iter()
            .copied()
            .zip(self.edge_weights(v).iter().copied())
    }

    #[inline]
    pub fn vertex_weight(&self, v: NodeId) -> Weight {
        self.vwgt[v as usize]
    }

    pub fn vertex_weights(&self) -> &[Weight] {
        &self.vwgt
    }

    pub fn total_vertex_weight(&self) -> Weight {
        self.total_vertex_weight
    }

    pub fn total_edge_weight(&self) -> Weight {
        self.adjwgt.iter().sum::<Weight>() / 2
    }

    pub fn max_vertex_weight(&self) -> Weight {
        self.vwgt.iter().copied().max().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n() as NodeId).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_unit_vertex_weights(&self) -> bool {
        self.vwgt.iter().all(|&w| w == 1)
    }

    pub fn has_unit_edge_weights(&self) -> bool {
        self.adjwgt.iter().all(|&w| w == 1)
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, Weight)> + '_ {
        (0..self.n() as NodeId).flat_map(move |u| {
            self.adjacent(u)
                .filter(move |&(v, _)| u < v)
                .map(move |(v, w)| (u, v, w))
        })
    }

    /// Subgraph induced by `vertices`; vertex `i` of the result is
    /// `vertices[i]` of `self`.
    pub fn induced_subgraph(&self, vertices: &[NodeId]) -> Graph {
        let mut local = vec![NodeId::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            local[v as usize] = i as NodeId;
        }
        let mut xadj = Vec::with_capacity(vertices.len() + 1);
        let mut adjncy = Vec::new();
        let mut adjwgt = Vec::new();
        let mut vwgt = Vec::with_capacity(vertices.len());
        xadj.push(0);
        for &v in vertices {
            // neighbor order is preserved under the monotone relabeling only
            // when `vertices` is sorted, so sort each list explicitly
            let start = adjncy.len();
            for (u, w) in self.adjacent(v) {
                let lu = local[u as usize];
                if lu != NodeId::MAX {
                    adjncy.push(lu);
                    adjwgt.push(w);
                }
            }
            let mut pairs: Vec<(NodeId, Weight)> = adjncy[start..]
                .iter()
                .copied()
                .zip(adjwgt[start..].iter().copied())
                .collect();
            pairs.sort_unstable_by_key(|p| p.0);
            for (i, (u, w)) in pairs.into_iter().enumerate() {
                adjncy[start + i] = u;
                adjwgt[start + i] = w;
            }
            xadj.push(adjncy.len());
            vwgt.push(self.vertex_weight(v));
        }
        Graph::from_parts(xadj, adjncy, adjwgt, vwgt)
    }

    /// Checks the structural invariants: symmetry, no self-loops, no
    /// duplicates, positive weights.
    pub fn check_invariants(&self) -> bool {
        for v in 0..self.n() as NodeId {
            let nb = self.neighbors(v);
            if nb.windows(2).any(|p| p[0] >= p[1]) {
                return false;
            }
            for (u, w) in self.adjacent(v) {
                if u == v || w <= 0 {
                    return false;
                }
                let back = self.neighbors(u).binary_search(&v);
                match back {
                    Ok(i) if self.edge_weights(u)[i] == w => {}
                    _ => return false,
                }
            }
        }
        self.vwgt.iter().all(|&w| w > 0)
    }
}
