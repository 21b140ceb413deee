//! Seeded unit-weight instance generators.

use rand::Rng;

use crate::graph::{Graph, NodeId};
use crate::util::rng;

/// `1.5 ln n / n`.
pub fn er_default_probability(n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    (1.5 * (n as f64).ln() / n as f64).min(1.0)
}

/// `0.55 sqrt(ln n / n)`.
pub fn rgg_default_radius(n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    0.55 * ((n as f64).ln() / n as f64).sqrt()
}

/// G(n, p). Skips over absent pairs with geometrically distributed jumps, so
/// the cost is proportional to the number of edges.
pub fn gen_er(n: usize, prob: f64, seed: u64) -> Graph {
    assert!((0.0..=1.0).contains(&prob), "probability out of range: {prob}");
    let mut edges = Vec::new();
    if prob > 0.0 && n > 1 {
        let mut r = rng(seed);
        let log_q = (1.0 - prob).ln();
        // pairs (v, w) with w < v, visited in lexicographic order
        let mut v: usize = 1;
        let mut w: i64 = -1;
        while v < n {
            let skip = if prob >= 1.0 {
                0
            } else {
                let u: f64 = 1.0 - r.random::<f64>();
                (u.ln() / log_q).floor() as i64
            };
            w += 1 + skip;
            while w >= v as i64 && v < n {
                w -= v as i64;
                v += 1;
            }
            if v < n {
                edges.push((v, w as usize, 1));
            }
        }
    }
    Graph::from_edges(n, &edges, None).expect("generated edges are valid")
}

/// Random geometric graph on the unit square: points closer than `radius`
/// are adjacent.
pub fn gen_rgg(n: usize, radius: f64, seed: u64) -> Graph {
    let mut r = rng(seed);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (r.random::<f64>(), r.random::<f64>())).collect();
    let cells = if radius > 0.0 { ((1.0 / radius).floor() as usize).clamp(1, 1 << 12) } else { 1 };
    let cell_of = |x: f64| ((x * cells as f64) as usize).min(cells - 1);
    let mut grid: Vec<Vec<NodeId>> = vec![Vec::new(); cells * cells];
    for (i, &(x, y)) in pts.iter().enumerate() {
        grid[cell_of(y) * cells + cell_of(x)].push(i as NodeId);
    }
    let r2 = radius * radius;
    let mut edges = Vec::new();
    for cy in 0..cells {
        for cx in 0..cells {
            for &a in &grid[cy * cells + cx] {
                let (ax, ay) = pts[a as usize];
                for ny in cy.saturating_sub(1)..(cy + 2).min(cells) {
                    for nx in cx.saturating_sub(1)..(cx + 2).min(cells) {
                        for &b in &grid[ny * cells + nx] {
                            if b <= a {
                                continue;
                            }
                            let (bx, by) = pts[b as usize];
                            let d2 = (ax - bx).powi(2) + (ay - by).powi(2);
                            if d2 < r2 {
                                edges.push((a as usize, b as usize, 1));
                            }
                        }
                    }
                }
            }
        }
    }
    Graph::from_edges(n, &edges, None).expect("generated edges are valid")
}

/// 4-neighbor lattice; with `wrap`, a torus along every dimension of length
/// at least 3.
pub fn gen_grid(rows: usize, cols: usize, wrap: bool) -> Graph {
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1), 1));
            } else if wrap && cols >= 3 {
                edges.push((id(r, c), id(r, 0), 1));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c), 1));
            } else if wrap && rows >= 3 {
                edges.push((id(r, c), id(0, c), 1));
            }
        }
    }
    Graph::from_edges(rows * cols, &edges, None).expect("generated edges are valid")
}
