//! Shared-memory parallel multilevel graph partitioning.
//!
//! The pipeline coarsens the input with size-constrained label propagation,
//! partitions the coarsest graph with several independent recursive
//! bisection attempts, and then projects the partition back level by level,
//! improving it with label propagation followed by parallel multi-try
//! k-way local search. Final partitions never exceed the balance bound
//! whenever the initial partition respects it.

pub mod cli;
pub mod coarsening;
pub mod driver;
pub mod error;
pub mod evalkit;
pub mod graph;
pub mod hashcache;
pub mod initpart;
pub mod io;
pub mod label_propagation;
pub mod partition;
pub mod refine;
pub mod util;

pub use driver::{partition, MetricsReport, PartitionerConfig};
pub use error::{Error, Result};
pub use graph::{BlockId, Graph, NodeId, Weight};
pub use partition::{cut_size, gain, l_max, validate_partition, Partition, ValidationReport};
