//! Acceptance suite. Every criterion prints one `PASS` or `FAIL` line to
//! stderr (uncaptured) and then asserts.
//!
//! Tests are serialized through one lock so that timings are not distorted
//! by concurrently running tests.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use mlpart_core::coarsening::{contract, lp_cluster, HierarchyLevel};
use mlpart_core::driver::{project_partition, Phase};
use mlpart_core::evalkit::{
    brute_force_optimal, er_default_probability, gen_er, gen_grid, gen_rgg, rgg_default_radius, virtual_instances,
    RunRecord,
};
use mlpart_core::hashcache::TabularHasher;
use mlpart_core::io::format_partition;
use mlpart_core::util::{rng, Rng as UtilRng};
use mlpart_core::{l_max, partition, BlockId, Graph, MetricsReport, Partition, PartitionerConfig, Weight};
use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Pareto, Uniform};

const SUITE_KS: [usize; 3] = [2, 8, 16];
const SUITE_WORKERS: [usize; 3] = [1, 4, 8];
const SUITE_SEEDS: u64 = 5;
const SUITE_BUDGET_SECS: f64 = 600.0;
const EPSILON: f64 = 0.03;

static LOCK: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, pass: bool, text: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[acceptance] criterion {id:>2}: {verdict} {text}");
}

struct Instance {
    name: String,
    graph: Graph,
}

fn instances() -> Vec<Instance> {
    let mut out = Vec::new();
    for (i, n) in [1000, 1250, 1500, 1750, 2000, 2500, 3000, 3500, 4000, 5000].into_iter().enumerate() {
        out.push(Instance {
            name: format!("er-{n}"),
            graph: gen_er(n, er_default_probability(n), 100 + i as u64),
        });
    }
    for (i, n) in [1000, 1700, 2800, 4600, 7700, 13_000, 22_000, 36_000, 60_000, 100_000].into_iter().enumerate() {
        out.push(Instance {
            name: format!("rgg-{n}"),
            graph: gen_rgg(n, rgg_default_radius(n), 200 + i as u64),
        });
    }
    for (i, side) in [32, 42, 55, 70, 90, 120, 150, 200, 250, 316].into_iter().enumerate() {
        let wrap = i % 2 == 1;
        out.push(Instance {
            name: format!("{}-{side}x{side}", if wrap { "torus" } else { "grid" }),
            graph: gen_grid(side, side, wrap),
        });
    }
    out
}

struct Run {
    instance: usize,
    k: usize,
    workers: usize,
    seed: u64,
    cut: Weight,
    balanced: bool,
    monotone: bool,
    output: Option<String>,
}

struct Suite {
    instances: Vec<Instance>,
    runs: Vec<Run>,
    secs: f64,
}

fn heaviest_block(g: &Graph, assignment: &[BlockId], k: usize) -> Weight {
    let mut w = vec![0; k];
    for (v, &b) in assignment.iter().enumerate() {
        w[b as usize] += g.vertex_weight(v as u32);
    }
    w.into_iter().max().unwrap_or(0)
}

/// Cut never rises through lp_refine and through each replay step.
fn cuts_monotone(report: &MetricsReport) -> bool {
    let mut prev: Option<Weight> = None;
    let mut level = usize::MAX;
    for row in &report.rows {
        if row.phase == Phase::Total || row.phase == Phase::Coarsen {
            continue;
        }
        if row.level != level {
            level = row.level;
            prev = None;
        }
        let Some(cut) = row.cut else { continue };
        if matches!(row.phase, Phase::LpRefine | Phase::MlsApply) && prev.is_some_and(|p| cut > p) {
            return false;
        }
        prev = Some(cut);
    }
    true
}

fn suite() -> &'static Suite {
    static SUITE: OnceLock<Suite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let start = Instant::now();
        let instances = instances();
        let mut runs = Vec::new();
        for (i, inst) in instances.iter().enumerate() {
            let g = &inst.graph;
            for k in SUITE_KS {
                let lmax = l_max(g.total_vertex_weight(), k, EPSILON).unwrap();
                for workers in SUITE_WORKERS {
                    for seed in 0..SUITE_SEEDS {
                        let config = PartitionerConfig {
                            epsilon: EPSILON,
                            workers,
                            seed,
                            ..PartitionerConfig::new(k)
                        };
                        let (p, metrics) = partition(g, &config).unwrap();
                        let heaviest = heaviest_block(g, p.assignment(), k);
                        let keep = workers == 1 && k == 8 && seed == 0;
                        runs.push(Run {
                            instance: i,
                            k,
                            workers,
                            seed,
                            cut: mlpart_core::cut_size(g, p.assignment()),
                            balanced: heaviest as f64 <= lmax && heaviest <= metrics.bound,
                            monotone: cuts_monotone(&metrics),
                            output: keep.then(|| format_partition(p.assignment())),
                        });
                    }
                }
            }
        }
        Suite {
            instances,
            runs,
            secs: start.elapsed().as_secs_f64(),
        }
    })
}

#[test]
fn criterion_01_balance() {
    let _g = serial();
    let s = suite();
    let bad: Vec<String> = s
        .runs
        .iter()
        .filter(|r| !r.balanced)
        .map(|r| format!("{}/k{}/p{}/s{}", s.instances[r.instance].name, r.k, r.workers, r.seed))
        .collect();
    let pass = bad.is_empty() && s.secs < SUITE_BUDGET_SECS && s.instances.len() >= 30;
    report(
        1,
        pass,
        &format!(
            "{} instances, {} runs, {} over L_max {:?}, suite time {:.1}s (limit {SUITE_BUDGET_SECS}s)",
            s.instances.len(),
            s.runs.len(),
            bad.len(),
            bad.iter().take(5).collect::<Vec<_>>(),
            s.secs
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_refinement_monotonicity() {
    let _g = serial();
    let s = suite();
    let bad = s.runs.iter().filter(|r| !r.monotone).count();
    report(2, bad == 0, &format!("{bad} of {} runs with a cut increase in lp_refine or apply_moves", s.runs.len()));
    assert_eq!(bad, 0);
}

fn random_weighted_graph(r: &mut impl Rng, seed: u64) -> Graph {
    let n = r.random_range(20..300);
    let base = gen_er(n, r.random_range(0.02..0.2), seed);
    let edges: Vec<_> = base
        .edges()
        .map(|(u, v, _)| (u as usize, v as usize, r.random_range(1..6)))
        .collect();
    let weights: Vec<Weight> = (0..n).map(|_| r.random_range(1..5)).collect();
    Graph::from_edges(n, &edges, Some(&weights)).unwrap()
}

#[test]
fn criterion_03_projection_exactness() {
    let _g = serial();
    let trials = 1000;
    let mut r = rng(0xacc3);
    let mut failures = 0;
    let mut checked_levels = 0;
    for trial in 0..trials {
        let g = random_weighted_graph(&mut r, trial);
        let depth = r.random_range(1..=3);
        let mut levels: Vec<HierarchyLevel> = Vec::new();
        for d in 0..depth {
            let current = levels.last().map_or(&g, |l| &l.coarse_graph);
            let maxw = current.max_vertex_weight();
            let bound = r.random_range(maxw..=maxw * 4);
            let workers = r.random_range(1..=4);
            let clusters = lp_cluster(current, bound, r.random_range(1..=3), trial * 8 + d, workers).unwrap();
            levels.push(contract(current, &clusters, workers));
        }
        let coarsest = &levels.last().unwrap().coarse_graph;
        let k = r.random_range(2..=8).min(coarsest.n());
        let assignment: Vec<BlockId> = (0..coarsest.n()).map(|_| r.random_range(0..k as BlockId)).collect();
        let mut part = Partition::new(coarsest, k, EPSILON, assignment).unwrap();
        for l in (0..depth as usize).rev() {
            let fine = if l == 0 { &g } else { &levels[l - 1].coarse_graph };
            let projected = project_partition(&part, &levels[l]);
            let recomputed = Partition::new(fine, k, EPSILON, projected.assignment().to_vec()).unwrap();
            checked_levels += 1;
            if recomputed.cut() != part.cut() || recomputed.block_weights() != part.block_weights() {
                failures += 1;
            }
            part = projected;
        }
    }
    report(
        3,
        failures == 0,
        &format!("{trials} trials, {checked_levels} projections, {failures} with a cut or weight mismatch"),
    );
    assert_eq!(failures, 0);
}

fn random_connected(r: &mut impl Rng, n: usize) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((r.random_range(0..v), v, 1));
    }
    for u in 0..n {
        for v in u + 1..n {
            if r.random_bool(0.25) && !edges.iter().any(|&(a, b, _)| (a, b) == (u, v) || (a, b) == (v, u)) {
                edges.push((u, v, 1));
            }
        }
    }
    Graph::from_edges(n, &edges, None).unwrap()
}

#[test]
fn criterion_04_tiny_instances_vs_optimum() {
    let _g = serial();
    let start = Instant::now();
    let mut r = rng(0xacc4);
    let trials = 100;
    let (mut optimal, mut within) = (0, 0);
    for t in 0..trials {
        let n = r.random_range(4..=10);
        let g = random_connected(&mut r, n);
        let best = brute_force_optimal(&g, 2, EPSILON).unwrap().cut;
        let config = PartitionerConfig {
            seed: t,
            ..PartitionerConfig::new(2)
        };
        let (p, _) = partition(&g, &config).unwrap();
        if p.cut() == best {
            optimal += 1;
        }
        if p.cut() <= 2 * best {
            within += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = within == trials && optimal * 100 >= 70 * trials && secs < 120.0;
    report(
        4,
        pass,
        &format!("{within}/{trials} within 2x optimum, {optimal}/{trials} optimal (need 70), {secs:.1}s"),
    );
    assert!(pass);
}

fn geometric_mean(values: impl Iterator<Item = Weight>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + (v.max(1) as f64).ln(), c + 1));
    (sum / count as f64).exp()
}

#[test]
fn criterion_05_quality_independent_of_workers() {
    let _g = serial();
    let s = suite();
    let gm = |p: usize| geometric_mean(s.runs.iter().filter(|r| r.workers == p).map(|r| r.cut));
    let (one, eight) = (gm(1), gm(8));
    let diff = (eight - one).abs() / one;
    let pass = diff <= 0.02;
    report(
        5,
        pass,
        &format!("geometric-mean cut p=1 {one:.2}, p=8 {eight:.2}, difference {:.2}% (limit 2%)", diff * 100.0),
    );
    assert!(pass);
}

#[test]
fn criterion_06_speedup() {
    let _g = serial();
    let n = 335_000;
    let g = gen_rgg(n, rgg_default_radius(n), 0x5eed);
    let cores = std::thread::available_parallelism().map_or(1, |c| c.get());
    let time = |workers: usize| {
        let config = PartitionerConfig {
            workers,
            ..PartitionerConfig::new(16)
        };
        let start = Instant::now();
        let (_, metrics) = partition(&g, &config).unwrap();
        let total = start.elapsed().as_secs_f64();
        let refine = metrics.phase_time(Phase::LpRefine) + metrics.phase_time(Phase::MlsApply);
        (total, refine)
    };
    let (t1, r1) = time(1);
    let (t8, r8) = time(8);
    let (s_total, s_refine) = (t1 / t8, r1 / r8);
    let target = s_total >= 3.0 && s_refine >= 3.5;
    let pass = s_total >= 2.0 && s_refine >= 2.5;
    report(
        6,
        pass,
        &format!(
            "rgg n={n} m={} k=16 on {cores} core(s): end-to-end {s_total:.2}x ({t1:.2}s/{t8:.2}s), \
             refinement {s_refine:.2}x ({r1:.2}s/{r8:.2}s); target 3.0x/3.5x {}, floor 2.0x/2.5x",
            g.m(),
            if target { "met" } else { "missed" }
        ),
    );
    assert!(pass, "speed-up below the 2.0x/2.5x floor");
}

#[test]
fn criterion_07_hash_locality() {
    let _g = serial();
    let mut r = rng(0xacc7);
    let pairs = 100_000;
    let mut same = 0;
    let mut hashers: Vec<TabularHasher> = (0..10).map(TabularHasher::with_defaults).collect();
    hashers.push(TabularHasher::for_key_bits(40, 77));
    let low = hashers[0].low_bits();
    for i in 0..pairs {
        let h = &hashers[i % hashers.len()];
        let key_mask = if h.key_bits() >= 64 { u64::MAX } else { (1u64 << h.key_bits()) - 1 };
        let x = r.random::<u64>() & key_mask;
        let mut y = x;
        while y == x {
            y = (x & !((1u64 << low) - 1)) | r.random_range(0..1u64 << low);
        }
        let (hx, hy) = (h.hash(x), h.hash(y));
        if hx >> low == hy >> low && hx.abs_diff(hy) < 1 << low {
            same += 1;
        }
    }
    report(7, same == pairs, &format!("{same}/{pairs} pairs in the same 2^{low} window"));
    assert_eq!(same, pairs);
}

type Sampler = Box<dyn FnMut(&mut UtilRng) -> f64>;

#[test]
fn criterion_08_accepted_time_expectation() {
    let _g = serial();
    let instances = 100_000;
    let mut r = rng(0xacc8);
    let rec = |alg: &str, rep: usize, time: f64| RunRecord {
        algorithm: alg.into(),
        instance: "synthetic".into(),
        rep,
        cut: 1,
        time,
        imbalanced: false,
    };
    let slow = Uniform::new(4.0, 12.0).unwrap();
    let runs_a: Vec<RunRecord> = (0..300).map(|i| rec("A", i, slow.sample(&mut r))).collect();
    let mut samplers: Vec<(&str, Sampler)> = Vec::new();
    let exp = Exp::new(1.0).unwrap();
    samplers.push(("exponential", Box::new(move |r| exp.sample(r))));
    let uni = Uniform::new(0.2, 2.5).unwrap();
    samplers.push(("uniform", Box::new(move |r| uni.sample(r))));
    let logn = LogNormal::new(0.0, 0.8).unwrap();
    samplers.push(("lognormal", Box::new(move |r| logn.sample(r))));
    let pareto = Pareto::new(0.5, 2.5).unwrap();
    samplers.push(("pareto", Box::new(move |r| pareto.sample(r))));
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for (i, (name, sample)) in samplers.iter_mut().enumerate() {
        let runs_b: Vec<RunRecord> = (0..2000).map(|j| rec("B", j, sample(&mut r))).collect();
        let v = virtual_instances(&runs_a, &runs_b, instances, 0x77 + i as u64).unwrap();
        let accepted = v.iter().map(|x| x.accepted_time_b).sum::<f64>() / v.len() as f64;
        let budget = v.iter().map(|x| x.time_a).sum::<f64>() / v.len() as f64;
        let rel = (accepted - budget).abs() / budget;
        worst = worst.max(rel);
        details.push(format!("{name} {:.3}%", rel * 100.0));
    }
    let pass = worst <= 0.01;
    report(
        8,
        pass,
        &format!("{instances} instances per distribution, relative error {} (limit 1%)", details.join(", ")),
    );
    assert!(pass);
}

/// Heavy hubs that every leaf wants to join.
fn hub_graph(r: &mut impl Rng, hubs: usize, leaves: usize) -> Graph {
    let n = hubs + leaves;
    let mut edges = Vec::new();
    for leaf in hubs..n {
        for h in 0..hubs {
            edges.push((h, leaf, r.random_range(5..20)));
        }
        if leaf + 1 < n {
            edges.push((leaf, leaf + 1, 1));
        }
    }
    let weights: Vec<Weight> = (0..n).map(|_| r.random_range(1..=6)).collect();
    Graph::from_edges(n, &edges, Some(&weights)).unwrap()
}

#[test]
fn criterion_09_cluster_size_constraint() {
    let _g = serial();
    let reps = 100;
    let mut r = rng(0xacc9);
    let mut worst_ratio: f64 = 0.0;
    let mut violations = 0;
    for rep in 0..reps {
        let g = if rep % 2 == 0 {
            hub_graph(&mut r, 4, 3000)
        } else {
            let base = gen_er(3000, 0.01, rep);
            let edges: Vec<_> = base.edges().map(|(u, v, _)| (u as usize, v as usize, 1)).collect();
            let weights: Vec<Weight> = (0..3000).map(|_| r.random_range(1..=6)).collect();
            Graph::from_edges(3000, &edges, Some(&weights)).unwrap()
        };
        let bound = 2 * g.max_vertex_weight();
        let clusters = lp_cluster(&g, bound, 5, rep, 8).unwrap();
        let mut weight: BTreeMap<u32, Weight> = BTreeMap::new();
        for (v, &c) in clusters.cluster.iter().enumerate() {
            *weight.entry(c).or_default() += g.vertex_weight(v as u32);
        }
        let heaviest = weight.values().copied().max().unwrap_or(0);
        worst_ratio = worst_ratio.max(heaviest as f64 / bound as f64);
        let tracked_ok = weight.iter().all(|(&c, &w)| clusters.cluster_weight[c as usize] == w);
        if heaviest > bound || !tracked_ok {
            violations += 1;
        }
    }
    report(
        9,
        violations == 0,
        &format!("{reps} reps with 8 workers, U = 2 max vertex weight, {violations} violations, heaviest cluster {worst_ratio:.2} U"),
    );
    assert_eq!(violations, 0);
}

#[test]
fn criterion_10_determinism() {
    let _g = serial();
    let s = suite();
    let mut differing = Vec::new();
    for run in s.runs.iter().filter(|r| r.output.is_some()) {
        let inst = &s.instances[run.instance];
        let config = PartitionerConfig {
            workers: 1,
            seed: run.seed,
            ..PartitionerConfig::new(run.k)
        };
        for _ in 0..2 {
            let (p, _) = partition(&inst.graph, &config).unwrap();
            if run.output.as_deref() != Some(format_partition(p.assignment()).as_str()) {
                differing.push(inst.name.clone());
                break;
            }
        }
    }
    let checked = s.runs.iter().filter(|r| r.output.is_some()).count();
    report(
        10,
        differing.is_empty() && checked == s.instances.len(),
        &format!("{checked} instances x 3 runs at p=1, k=8; {} differ {:?}", differing.len(), differing),
    );
    assert!(differing.is_empty());
    assert_eq!(checked, s.instances.len());
}
