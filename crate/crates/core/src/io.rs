//! Metis adjacency format and partition files.
//!
//! Header: `n m [fmt]` where `fmt` is one of `0`, `1`, `10`, `11` (edge
//! weights in the ones digit, vertex weights in the tens digit). Line `i`
//! after the header lists the neighbors of vertex `i`, 1-based, optionally
//! preceded by the vertex weight and each followed by its edge weight.
//! Lines starting with `%` are comments. A vertex without neighbors is an
//! empty line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{BlockId, Graph, NodeId, Weight};

pub fn read_metis(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_metis(&text, path)
}

pub fn write_metis(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_metis(g)).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    path: &'a Path,
    line_no: usize,
    line: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, column: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line_no,
            column,
            message: message.into(),
        }
    }

    /// Next whitespace-separated integer, with its 1-based column.
    fn next_int(&mut self) -> Option<std::result::Result<(i64, usize), Error>> {
        let bytes = self.line.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < bytes.len() && !bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let tok = &self.line[start..self.pos];
        Some(
            tok.parse::<i64>()
                .map(|x| (x, start + 1))
                .map_err(|_| self.err(start + 1, format!("expected an integer, found `{tok}`"))),
        )
    }
}

pub fn parse_metis(text: &str, path: &Path) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.starts_with('%'));

    let (hline, header) = loop {
        match lines.next() {
            Some((i, l)) if l.trim().is_empty() => {
                let _ = i;
                continue;
            }
            Some(x) => break x,
            None => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    column: 1,
                    message: "missing header line".into(),
                })
            }
        }
    };
    let mut cur = Cursor {
        path,
        line_no: hline,
        line: header,
        pos: 0,
    };
    let mut fields = Vec::new();
    while let Some(tok) = cur.next_int() {
        fields.push(tok?);
    }
    if fields.len() < 2 || fields.len() > 4 {
        return Err(cur.err(1, "header must be `n m [fmt [ncon]]`"));
    }
    let (n, ncol) = fields[0];
    let (m, mcol) = fields[1];
    if n < 0 {
        return Err(cur.err(ncol, "negative vertex count"));
    }
    if m < 0 {
        return Err(cur.err(mcol, "negative edge count"));
    }
    let (has_vwgt, has_ewgt) = match fields.get(2) {
        None => (false, false),
        Some(&(fmt, col)) => match fmt {
            0 => (false, false),
            1 => (false, true),
            10 => (true, false),
            11 => (true, true),
            _ => return Err(cur.err(col, format!("unsupported fmt code {fmt}"))),
        },
    };
    if let Some(&(ncon, col)) = fields.get(3) {
        if ncon != 1 {
            return Err(cur.err(col, "only a single vertex weight is supported"));
        }
    }
    let n = n as usize;

    let mut vwgt = Vec::with_capacity(n);
    let mut xadj = Vec::with_capacity(n + 1);
    let mut adjncy: Vec<NodeId> = Vec::new();
    let mut adjwgt: Vec<Weight> = Vec::new();
    xadj.push(0usize);
    let mut last_line = hline;
    for v in 0..n {
        let (line_no, line) = lines.next().unwrap_or((last_line + 1, ""));
        last_line = line_no;
        let mut cur = Cursor {
            path,
            line_no,
            line,
            pos: 0,
        };
        if has_vwgt {
            match cur.next_int() {
                Some(Ok((w, col))) => {
                    if w <= 0 {
                        return Err(cur.err(col, "vertex weight must be positive"));
                    }
                    vwgt.push(w);
                }
                Some(Err(e)) => return Err(e),
                None => return Err(cur.err(1, "missing vertex weight")),
            }
        } else {
            vwgt.push(1);
        }
        let start = adjncy.len();
        while let Some(tok) = cur.next_int() {
            let (u, col) = tok?;
            if u < 1 || u as usize > n {
                return Err(cur.err(col, format!("neighbor {u} out of range 1..={n}")));
            }
            let u = (u - 1) as usize;
            if u == v {
                return Err(cur.err(col, "self-loop"));
            }
            let w = if has_ewgt {
                match cur.next_int() {
                    Some(Ok((w, col))) => {
                        if w <= 0 {
                            return Err(cur.err(col, "edge weight must be positive"));
                        }
                        w
                    }
                    Some(Err(e)) => return Err(e),
                    None => return Err(cur.err(line.len() + 1, "missing edge weight")),
                }
            } else {
                1
            };
            adjncy.push(u as NodeId);
            adjwgt.push(w);
        }
        let mut pairs: Vec<(NodeId, Weight)> = adjncy[start..]
            .iter()
            .copied()
            .zip(adjwgt[start..].iter().copied())
            .collect();
        pairs.sort_unstable_by_key(|p| p.0);
        if pairs.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(cur.err(1, format!("duplicate neighbor in list of vertex {}", v + 1)));
        }
        for (i, (u, w)) in pairs.into_iter().enumerate() {
            adjncy[start + i] = u;
            adjwgt[start + i] = w;
        }
        xadj.push(adjncy.len());
    }
    if let Some((line_no, l)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        let _ = l;
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            column: 1,
            message: format!("more than {n} adjacency lines"),
        });
    }
    if adjncy.len() != 2 * m as usize {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: hline,
            column: mcol,
            message: format!(
                "header declares {m} edges but adjacency lists hold {} half-edges",
                adjncy.len()
            ),
        });
    }
    let g = Graph::from_parts(xadj, adjncy, adjwgt, vwgt);
    if !g.check_invariants() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: hline,
            column: 1,
            message: "adjacency is not symmetric".into(),
        });
    }
    Ok(g)
}

/// Canonical Metis text: `fmt` only when some weight differs from 1,
/// ascending neighbor lists, single spaces, trailing newline.
pub fn format_metis(g: &Graph) -> String {
    let vw = !g.has_unit_vertex_weights();
    let ew = !g.has_unit_edge_weights();
    let mut out = String::with_capacity(16 * (g.n() + 2 * g.m()));
    let _ = write!(out, "{} {}", g.n(), g.m());
    match (vw, ew) {
        (false, false) => {}
        (false, true) => out.push_str(" 1"),
        (true, false) => out.push_str(" 10"),
        (true, true) => out.push_str(" 11"),
    }
    out.push('\n');
    for v in 0..g.n() as NodeId {
        let mut first = true;
        let mut sep = |out: &mut String| {
            if !first {
                out.push(' ');
            }
            first = false;
        };
        if vw {
            sep(&mut out);
            let _ = write!(out, "{}", g.vertex_weight(v));
        }
        for (u, w) in g.adjacent(v) {
            sep(&mut out);
            let _ = write!(out, "{}", u + 1);
            if ew {
                let _ = write!(out, " {w}");
            }
        }
        out.push('\n');
    }
    out
}

pub fn format_partition(assignment: &[BlockId]) -> String {
    let mut out = String::with_capacity(assignment.len() * 3);
    for b in assignment {
        let _ = writeln!(out, "{b}");
    }
    out
}

pub fn write_partition(assignment: &[BlockId], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_partition(assignment)).map_err(|e| Error::io(path, e))
}

pub fn read_partition(path: impl AsRef<Path>) -> Result<Vec<BlockId>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            l.trim().parse::<BlockId>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: 1,
                message: format!("expected a block ID, found `{}`", l.trim()),
            })
        })
        .collect()
}
