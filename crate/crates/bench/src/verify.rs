//! Audit battery over built artifacts.

use std::fmt;
use std::time::{Duration, Instant};

use anyhow::Result;
use fann::baseline::audit_euclid_aggregate;
use fann::mtree::NodeKind;
use fann::oracle::{audit_metric, single_source};
use fann::{AggregateKind, DistanceOracle, MetricTree, QuerySpec, VertexId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::artifacts::Artifacts;
use crate::differential::{check_instance, InstanceSpace};
use crate::sweep::{run_engine, Engine};
use crate::workload::gen_queries;

/// Deliberate index corruption, to confirm the audits catch it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantedFault {
    /// Shrinks one covering radius by one unit.
    Radius,
    /// Bumps one stored parent distance by one unit.
    ParentDist,
}

impl std::str::FromStr for PlantedFault {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "radius" => PlantedFault::Radius,
            "parent-dist" => PlantedFault::ParentDist,
            other => anyhow::bail!("unknown fault `{other}` (expected radius or parent-dist)"),
        })
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub metric_samples: usize,
    /// Random pairs compared between labels and Dijkstra.
    pub label_pairs: usize,
    /// Targets per Dijkstra source; 1 makes every pair independent.
    pub pairs_per_source: usize,
    pub euclid_pairs: usize,
    /// Query points for the per-entry lower-bound chain audit.
    pub bound_queries: usize,
    /// Small random instances for the three-engine differential check.
    pub differential_instances: usize,
    /// Trials on the dataset itself comparing the engines.
    pub dataset_trials: usize,
    pub seed: u64,
    pub plant: Option<PlantedFault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            metric_samples: 10_000,
            label_pairs: 10_000,
            pairs_per_source: 10,
            euclid_pairs: 100_000,
            bound_queries: 4,
            differential_instances: 50,
            dataset_trials: 3,
            seed: 0,
            plant: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub checked: u64,
    pub failures: u64,
    pub detail: String,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<24} checked={} failures={} ({:.1}s){}{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.checked,
            self.failures,
            self.elapsed.as_secs_f64(),
            if self.detail.is_empty() { "" } else { " " },
            self.detail
        )
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        write!(f, "{}", if self.passed() { "verify: all audits passed" } else { "verify: FAILED" })
    }
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<(u64, u64, String)>) -> CheckResult {
    let t = Instant::now();
    let (checked, failures, detail, passed) = match f() {
        Ok((checked, failures, detail)) => (checked, failures, detail, failures == 0),
        Err(e) => (0, 1, format!("error: {e:#}"), false),
    };
    CheckResult { name, passed, checked, failures, detail, elapsed: t.elapsed() }
}

fn first<T: fmt::Debug>(v: &[T]) -> String {
    v.first().map_or(String::new(), |x| format!("first: {x:?}"))
}

/// Label distances against Dijkstra on random pairs.
pub fn label_vs_dijkstra(arts: &Artifacts, pairs: usize, per_source: usize, seed: u64) -> (u64, Vec<String>) {
    let g = &arts.graph;
    let n = g.num_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_source = per_source.max(1);
    let mut checked = 0u64;
    let mut bad = Vec::new();
    while (checked as usize) < pairs {
        let s = rng.gen_range(0..n) as VertexId;
        let take = per_source.min(pairs - checked as usize);
        if per_source == 1 {
            let t = rng.gen_range(0..n) as VertexId;
            let (a, b) = (fann::oracle::dijkstra_dist(g, s, t), arts.labels.query(s, t));
            if a != b {
                bad.push(format!("({s},{t}) dijkstra={a} labels={b}"));
            }
        } else {
            let dist = single_source(g, s);
            for _ in 0..take {
                let t = rng.gen_range(0..n) as VertexId;
                let b = arts.labels.query(s, t);
                if dist[t as usize] != b {
                    bad.push(format!("({s},{t}) dijkstra={} labels={b}", dist[t as usize]));
                }
            }
        }
        checked += take as u64;
    }
    (checked, bad)
}

fn plant(tree: &mut MetricTree, fault: PlantedFault) -> Result<()> {
    let ids: Vec<_> = tree.node_ids().collect();
    for id in ids {
        if let NodeKind::Inner(entries) = &mut tree.node_mut(id).kind {
            match fault {
                PlantedFault::Radius => {
                    if let Some(e) = entries.iter_mut().find(|e| e.radius > 0) {
                        e.radius -= 1;
                        return Ok(());
                    }
                }
                PlantedFault::ParentDist => {
                    if let Some(e) = entries.first_mut() {
                        e.parent_dist += 1;
                        return Ok(());
                    }
                }
            }
        }
    }
    anyhow::bail!("tree has no routing entry to corrupt")
}

pub fn verify(arts: &Artifacts, opts: &VerifyOptions) -> Result<VerifyReport> {
    let g = &arts.graph;
    let n = g.num_vertices();
    let labels = &arts.labels;
    let planted;
    let tree = match opts.plant {
        Some(fault) => {
            let mut t = arts.mtree.clone();
            plant(&mut t, fault)?;
            planted = t;
            &planted
        }
        None => &arts.mtree,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();

    checks.push(timed("metric-axioms", || {
        let v = audit_metric(labels, n, opts.metric_samples, opts.seed);
        Ok((opts.metric_samples as u64, v.len() as u64, first(&v)))
    }));
    checks.push(timed("labels-vs-dijkstra", || {
        let (checked, bad) = label_vs_dijkstra(arts, opts.label_pairs, opts.pairs_per_source, opts.seed ^ 1);
        Ok((checked, bad.len() as u64, first(&bad)))
    }));
    checks.push(timed("euclid-scale-edges", || {
        let bad = g.audit_euclid_scale_edges();
        Ok((g.num_edges() as u64, bad.len() as u64, format!("scale={:.9} {}", g.euclid_scale(), first(&bad))))
    }));
    let euclid_seed = rng.gen::<u64>();
    checks.push(timed("euclid-lb-pairs", || {
        let mut r = ChaCha8Rng::seed_from_u64(euclid_seed);
        let mut bad = Vec::new();
        for _ in 0..opts.euclid_pairs {
            let (u, v) = (r.gen_range(0..n) as VertexId, r.gen_range(0..n) as VertexId);
            let (lb, d) = (g.euclidean_lb(u, v), labels.dist(u, v));
            if lb > d {
                bad.push(format!("({u},{v}) lb={lb} d={d}"));
            }
        }
        Ok((opts.euclid_pairs as u64, bad.len() as u64, first(&bad)))
    }));
    checks.push(timed("mtree-structure", || {
        let v = tree.audit_structure();
        Ok((tree.num_nodes() as u64, v.len() as u64, format!("height={} {}", tree.height(), first(&v))))
    }));
    checks.push(timed("mtree-covering-radii", || {
        let v = tree.audit_covering(labels);
        Ok((tree.num_nodes() as u64, v.len() as u64, first(&v)))
    }));
    checks.push(timed("mtree-parent-dist", || {
        let v = tree.audit_parent_dist(labels);
        Ok((tree.num_nodes() as u64, v.len() as u64, first(&v)))
    }));
    let bound_queries: Vec<VertexId> = (0..opts.bound_queries).map(|_| rng.gen_range(0..n) as VertexId).collect();
    checks.push(timed("mtree-lower-bound-chain", || {
        let v = tree.audit_lower_bounds(labels, &bound_queries);
        Ok((bound_queries.len() as u64, v.len() as u64, first(&v)))
    }));
    checks.push(timed("rtree-mbrs", || {
        let v = arts.rtree.audit_mbrs();
        Ok((arts.rtree.num_nodes() as u64, v.len() as u64, first(&v)))
    }));
    let workload_seed = rng.gen::<u64>();
    checks.push(timed("euclid-aggregate-bound", || {
        let w = gen_queries(g, 16.min(n), 0.1, workload_seed)?;
        let mut bad = Vec::new();
        for kind in AggregateKind::ALL {
            let mut qs = QuerySpec::new(w.queries.clone(), 0.5, 1, kind);
            qs.pois = arts.poi_set.as_ref();
            bad.extend(audit_euclid_aggregate(&arts.rtree, g, labels, &qs)?);
        }
        Ok((2 * arts.rtree.num_nodes() as u64, bad.len() as u64, first(&bad)))
    }));
    let diff_seed = rng.gen::<u64>();
    checks.push(timed("differential-small", || {
        let space = InstanceSpace::default();
        let mut bad = Vec::new();
        for i in 0..opts.differential_instances {
            let inst = space.sample(diff_seed.wrapping_add(i as u64));
            let c = check_instance(&inst)?;
            if !c.agree() {
                bad.push(format!("seed {}: {c:?}", inst.seed));
            }
        }
        Ok((opts.differential_instances as u64, bad.len() as u64, first(&bad)))
    }));
    let dataset_seed = rng.gen::<u64>();
    checks.push(timed("differential-dataset", || {
        let mut bad = Vec::new();
        let m = 8.min(n);
        let with_brute = arts.pois.len() <= fann::baseline::BRUTE_FORCE_LIMIT;
        for t in 0..opts.dataset_trials {
            let w = gen_queries(g, m, 0.1, dataset_seed.wrapping_add(t as u64))?;
            for kind in AggregateKind::ALL {
                let mut qs = QuerySpec::new(w.queries.clone(), 0.5, 3.min(arts.pois.len()), kind);
                qs.pois = arts.poi_set.as_ref();
                let fann = fann::fann_search(tree, labels, &qs)?.0.values();
                let ier = run_engine(arts, Engine::Ier, &qs)?.0.values();
                let brute = if with_brute { Some(run_engine(arts, Engine::Brute, &qs)?.0.values()) } else { None };
                if fann != ier || brute.as_ref().is_some_and(|b| *b != fann) {
                    bad.push(format!("trial {t} {kind}: fann={fann:?} ier={ier:?} brute={brute:?}"));
                }
            }
        }
        Ok((2 * opts.dataset_trials as u64, bad.len() as u64, first(&bad)))
    }));
    Ok(VerifyReport { checks })
}
