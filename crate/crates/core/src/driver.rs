//! The multilevel pipeline: coarsen, partition the coarsest graph, then
//! project and refine level by level.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coarsening::{build_hierarchy, CoarseningConfig, HierarchyLevel};
use crate::error::{Error, Result};
use crate::graph::{Graph, Weight};
use crate::initpart::{initial_partition, rebalance};
use crate::partition::{block_weight_bound, Partition};
use crate::refine::{lp_refine, mls, MlsConfig};
use crate::util::derive_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionerConfig {
    pub k: usize,
    pub epsilon: f64,
    pub workers: usize,
    pub seed: u64,
    pub coarsening_iterations: usize,
    pub refinement_iterations: usize,
    pub initial_attempts: usize,
    pub mls_global_iterations: usize,
    pub mls_threshold: f64,
    pub cluster_factor: usize,
    pub stopping_alpha: f64,
    /// Defaults to `ln n` of the graph being refined.
    pub stopping_beta: Option<f64>,
}

impl PartitionerConfig {
    pub fn new(k: usize) -> Self {
        PartitionerConfig {
            k,
            epsilon: 0.03,
            workers: 1,
            seed: 0,
            coarsening_iterations: 10,
            refinement_iterations: 25,
            initial_attempts: 4,
            mls_global_iterations: 3,
            mls_threshold: 0.1,
            cluster_factor: 16,
            stopping_alpha: 3.0,
            stopping_beta: None,
        }
    }

    /// Fewer iterations everywhere.
    pub fn fast(k: usize) -> Self {
        PartitionerConfig {
            coarsening_iterations: 3,
            refinement_iterations: 5,
            initial_attempts: 1,
            mls_global_iterations: 1,
            ..Self::new(k)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("k", self.k),
            ("workers", self.workers),
            ("coarsening_iterations", self.coarsening_iterations),
            ("refinement_iterations", self.refinement_iterations),
            ("initial_attempts", self.initial_attempts),
            ("mls_global_iterations", self.mls_global_iterations),
            ("cluster_factor", self.cluster_factor),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        if !(self.mls_threshold > 0.0 && self.mls_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "mls_threshold must lie in (0, 1), got {}",
                self.mls_threshold
            )));
        }
        if !(self.stopping_alpha >= 0.0) || self.stopping_beta.is_some_and(|b| !(b >= 0.0)) {
            return Err(Error::InvalidConfig("stopping parameters must be >= 0".into()));
        }
        Ok(())
    }

    fn mls_config(&self) -> MlsConfig {
        MlsConfig {
            global_iterations: self.mls_global_iterations,
            threshold: self.mls_threshold,
            alpha: self.stopping_alpha,
            beta: self.stopping_beta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Coarsen,
    Initial,
    Project,
    Rebalance,
    LpRefine,
    MlsApply,
    Total,
}

impl Phase {
    /// Name as written in the metrics CSV.
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Coarsen => "coarsen",
            Phase::Initial => "initial",
            Phase::Project => "project",
            Phase::Rebalance => "rebalance",
            Phase::LpRefine => "lp_refine",
            Phase::MlsApply => "mls_apply",
            Phase::Total => "total",
        }
    }
}

/// One CSV row. Level 0 is the input graph; `cut` is empty for coarsening.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub phase: Phase,
    pub level: usize,
    pub cut: Option<Weight>,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    pub levels: usize,
    pub final_cut: Weight,
    pub max_block_weight: Weight,
    pub bound: Weight,
    pub imbalanced: bool,
    pub initial_attempts: usize,
}

impl MetricsReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(["phase", "level", "cut", "time"])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv(path: &Path) -> Result<Vec<MetricsRow>> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::Reader::from_reader(file);
        r.deserialize().map(|row| row.map_err(Error::from)).collect()
    }

    /// Sum of times of rows with the given phase.
    pub fn phase_time(&self, phase: Phase) -> f64 {
        self.rows.iter().filter(|r| r.phase == phase).map(|r| r.time).sum()
    }

    /// Cuts recorded at `level`, in pipeline order.
    pub fn level_cuts(&self, level: usize) -> Vec<(Phase, Weight)> {
        self.rows
            .iter()
            .filter(|r| r.level == level && r.phase != Phase::Total)
            .filter_map(|r| r.cut.map(|c| (r.phase, c)))
            .collect()
    }
}

/// Fine partition induced by a coarse one. Cut and block weights carry over
/// unchanged.
pub fn project_partition(coarse: &Partition, level: &HierarchyLevel) -> Partition {
    Partition::from_parts(
        coarse.k(),
        coarse.epsilon(),
        level.project(coarse.assignment()),
        coarse.block_weights().to_vec(),
        coarse.cut(),
        coarse.total_weight(),
    )
}

struct Recorder {
    rows: Vec<MetricsRow>,
    clock: Instant,
}

impl Recorder {
    fn record(&mut self, phase: Phase, level: usize, cut: Option<Weight>) {
        let now = Instant::now();
        self.rows.push(MetricsRow {
            phase,
            level,
            cut,
            time: (now - self.clock).as_secs_f64(),
        });
        self.clock = now;
    }
}

/// Partitions `g` into `config.k` blocks.
pub fn partition(g: &Graph, config: &PartitionerConfig) -> Result<(Partition, MetricsReport)> {
    config.validate()?;
    let k = config.k;
    if k > g.n().max(1) {
        return Err(Error::InvalidBlockCount { k, n: g.n() });
    }
    let start = Instant::now();
    let mut rec = Recorder {
        rows: Vec::new(),
        clock: start,
    };
    let bound = block_weight_bound(g.total_vertex_weight(), k, config.epsilon)?;
    let workers = config.workers;

    let coarsening = CoarseningConfig {
        iterations: config.coarsening_iterations,
        cluster_factor: config.cluster_factor,
        ..CoarseningConfig::default()
    };
    let hierarchy = if k == 1 {
        Vec::new()
    } else {
        build_hierarchy(g, k, &coarsening, derive_seed(config.seed, &[1]), workers)?
    };
    let depth = hierarchy.len();
    rec.record(Phase::Coarsen, depth, None);

    let coarsest = hierarchy.last().map_or(g, |l| &l.coarse_graph);
    let init = initial_partition(
        coarsest,
        k,
        config.epsilon,
        config.initial_attempts,
        workers,
        derive_seed(config.seed, &[2]),
    )?;
    let mut part = init.partition;
    rec.record(Phase::Initial, depth, Some(part.cut()));

    let graph_at = |level: usize| if level == 0 { g } else { &hierarchy[level - 1].coarse_graph };
    let mls_config = config.mls_config();
    for level in (0..=depth).rev() {
        let lg = graph_at(level);
        if level < depth {
            part = project_partition(&part, &hierarchy[level]);
            rec.record(Phase::Project, level, Some(part.cut()));
        }
        if k < 2 {
            continue;
        }
        if part.max_block_weight() > bound {
            rebalance(lg, &mut part, bound);
            rec.record(Phase::Rebalance, level, Some(part.cut()));
        }
        let level_bound = bound.max(part.max_block_weight());
        lp_refine(
            lg,
            &mut part,
            config.refinement_iterations,
            workers,
            derive_seed(config.seed, &[3, level as u64]),
            level_bound,
        )?;
        rec.record(Phase::LpRefine, level, Some(part.cut()));
        let before = rec.clock;
        let stats = mls(lg, &mut part, &mls_config, workers, derive_seed(config.seed, &[4, level as u64]), level_bound)?;
        // replay steps share the phase time evenly
        let elapsed = before.elapsed().as_secs_f64();
        let steps = stats.cuts_after_apply.len().max(1) as f64;
        for &cut in &stats.cuts_after_apply {
            rec.rows.push(MetricsRow {
                phase: Phase::MlsApply,
                level,
                cut: Some(cut),
                time: elapsed / steps,
            });
        }
        rec.clock = Instant::now();
    }
    rec.rows.push(MetricsRow {
        phase: Phase::Total,
        level: 0,
        cut: Some(part.cut()),
        time: start.elapsed().as_secs_f64(),
    });
    let report = MetricsReport {
        rows: rec.rows,
        levels: depth,
        final_cut: part.cut(),
        max_block_weight: part.max_block_weight(),
        bound,
        imbalanced: part.max_block_weight() > bound,
        initial_attempts: init.attempts,
    };
    Ok((part, report))
}
