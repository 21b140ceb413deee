//! Python bindings.

use mlpart_core::evalkit;
use mlpart_core::hashcache::TabularHasher;
use mlpart_core::{BlockId, Error, NodeId, PartitionerConfig, Weight};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Graph", frozen)]
struct PyGraph {
    inner: mlpart_core::Graph,
}

#[pymethods]
impl PyGraph {
    /// `edges` holds `(u, v)` or `(u, v, weight)` tuples.
    #[new]
    #[pyo3(signature = (n, edges, vertex_weights=None))]
    fn new(n: usize, edges: Vec<Bound<'_, PyAny>>, vertex_weights: Option<Vec<Weight>>) -> PyResult<Self> {
        let mut list = Vec::with_capacity(edges.len());
        for e in edges {
            let triple = match e.extract::<(usize, usize, Weight)>() {
                Ok(t) => t,
                Err(_) => {
                    let (u, v) = e.extract::<(usize, usize)>()?;
                    (u, v, 1)
                }
            };
            list.push(triple);
        }
        let inner = mlpart_core::Graph::from_edges(n, &list, vertex_weights.as_deref()).map_err(to_py)?;
        Ok(PyGraph { inner })
    }

    #[staticmethod]
    fn read_metis(path: &str) -> PyResult<Self> {
        Ok(PyGraph {
            inner: mlpart_core::io::read_metis(path).map_err(to_py)?,
        })
    }

    fn write_metis(&self, path: &str) -> PyResult<()> {
        mlpart_core::io::write_metis(&self.inner, path).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn total_vertex_weight(&self) -> Weight {
        self.inner.total_vertex_weight()
    }

    fn neighbors(&self, v: NodeId) -> PyResult<Vec<NodeId>> {
        self.check(v)?;
        Ok(self.inner.neighbors(v).to_vec())
    }

    fn vertex_weight(&self, v: NodeId) -> PyResult<Weight> {
        self.check(v)?;
        Ok(self.inner.vertex_weight(v))
    }

    fn edges(&self) -> Vec<(NodeId, NodeId, Weight)> {
        self.inner.edges().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.inner.n(), self.inner.m())
    }
}

impl PyGraph {
    fn check(&self, v: NodeId) -> PyResult<()> {
        if (v as usize) < self.inner.n() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("vertex {v} out of range")))
        }
    }
}

#[pyclass(name = "PartitionResult", frozen, get_all)]
struct PyPartitionResult {
    assignment: Vec<BlockId>,
    cut: Weight,
    block_weights: Vec<Weight>,
    bound: Weight,
    levels: usize,
    /// `(phase, level, cut, time)` rows.
    metrics: Vec<(String, usize, Option<Weight>, f64)>,
}

#[pymethods]
impl PyPartitionResult {
    #[getter]
    fn balanced(&self) -> bool {
        self.block_weights.iter().all(|&w| w <= self.bound)
    }

    fn __repr__(&self) -> String {
        format!(
            "PartitionResult(cut={}, k={}, balanced={})",
            self.cut,
            self.block_weights.len(),
            if self.balanced() { "True" } else { "False" }
        )
    }
}

#[pyfunction]
#[pyo3(signature = (graph, k, epsilon=0.03, workers=1, seed=0, fast=false))]
fn partition(
    py: Python<'_>,
    graph: &PyGraph,
    k: usize,
    epsilon: f64,
    workers: usize,
    seed: u64,
    fast: bool,
) -> PyResult<PyPartitionResult> {
    let base = if fast { PartitionerConfig::fast(k) } else { PartitionerConfig::new(k) };
    let config = PartitionerConfig {
        epsilon,
        workers,
        seed,
        ..base
    };
    let (part, report) = py.detach(|| mlpart_core::partition(&graph.inner, &config)).map_err(to_py)?;
    Ok(PyPartitionResult {
        cut: part.cut(),
        block_weights: part.block_weights().to_vec(),
        bound: report.bound,
        levels: report.levels,
        metrics: report.rows.iter().map(|r| (r.phase.as_str().to_string(), r.level, r.cut, r.time)).collect(),
        assignment: part.into_assignment(),
    })
}

#[pyfunction]
fn cut_size(graph: &PyGraph, assignment: Vec<BlockId>) -> PyResult<Weight> {
    if assignment.len() != graph.inner.n() {
        return Err(PyValueError::new_err("assignment length differs from n"));
    }
    Ok(mlpart_core::cut_size(&graph.inner, &assignment))
}

#[pyfunction]
fn l_max(total_weight: Weight, k: usize, epsilon: f64) -> PyResult<f64> {
    mlpart_core::l_max(total_weight, k, epsilon).map_err(to_py)
}

/// Returns `(cut, witness)`.
#[pyfunction]
fn brute_force_optimal(graph: &PyGraph, k: usize, epsilon: f64) -> PyResult<(Weight, Vec<BlockId>)> {
    let opt = evalkit::brute_force_optimal(&graph.inner, k, epsilon).map_err(to_py)?;
    Ok((opt.cut, opt.witness))
}

#[pyfunction]
#[pyo3(signature = (n, probability=None, seed=0))]
fn gen_er(n: usize, probability: Option<f64>, seed: u64) -> PyResult<PyGraph> {
    let p = probability.unwrap_or_else(|| evalkit::er_default_probability(n));
    if !(0.0..=1.0).contains(&p) {
        return Err(PyValueError::new_err("probability must lie in [0, 1]"));
    }
    Ok(PyGraph {
        inner: evalkit::gen_er(n, p, seed),
    })
}

#[pyfunction]
#[pyo3(signature = (n, radius=None, seed=0))]
fn gen_rgg(n: usize, radius: Option<f64>, seed: u64) -> PyGraph {
    let r = radius.unwrap_or_else(|| evalkit::rgg_default_radius(n));
    PyGraph {
        inner: evalkit::gen_rgg(n, r, seed),
    }
}

#[pyfunction]
#[pyo3(signature = (rows, cols, wrap=false))]
fn gen_grid(rows: usize, cols: usize, wrap: bool) -> PyGraph {
    PyGraph {
        inner: evalkit::gen_grid(rows, cols, wrap),
    }
}

#[pyclass(name = "TabularHasher", frozen)]
struct PyTabularHasher {
    inner: TabularHasher,
}

#[pymethods]
impl PyTabularHasher {
    #[new]
    #[pyo3(signature = (seed=0, chunk_bits=10, low_bits=5, chunks=3))]
    fn new(seed: u64, chunk_bits: u32, low_bits: u32, chunks: u32) -> PyResult<Self> {
        if !(1..=16).contains(&chunk_bits) || low_bits >= 32 || chunks < 2 {
            return Err(PyValueError::new_err("need 1 <= chunk_bits <= 16, low_bits < 32, chunks >= 2"));
        }
        Ok(PyTabularHasher {
            inner: TabularHasher::new(chunk_bits, low_bits, chunks, seed),
        })
    }

    #[getter]
    fn low_bits(&self) -> u32 {
        self.inner.low_bits()
    }

    fn hash(&self, key: u64) -> u32 {
        self.inner.hash(key)
    }
}

#[pymodule]
fn mlpart(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyPartitionResult>()?;
    m.add_class::<PyTabularHasher>()?;
    m.add_function(wrap_pyfunction!(partition, m)?)?;
    m.add_function(wrap_pyfunction!(cut_size, m)?)?;
    m.add_function(wrap_pyfunction!(l_max, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_optimal, m)?)?;
    m.add_function(wrap_pyfunction!(gen_er, m)?)?;
    m.add_function(wrap_pyfunction!(gen_rgg, m)?)?;
    m.add_function(wrap_pyfunction!(gen_grid, m)?)?;
    Ok(())
}
