//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 3 to 6 run on the DIMACS NY network when its files are in
//! `$FANN_DATA_DIR`. Otherwise they run on a synthetic metropolitan proxy
//! (`metro:<n>`, n from `$FANN_PROXY_VERTICES`, default 10000) and the
//! output says so; set `FANN_REQUIRE_NY=1` to make a missing NY a failure.
//!
//! Criteria 5 and 6 are directional claims about NY itself. On the proxy
//! their lines are still printed but marked informational and do not fail
//! the test; every other criterion is binding on any network.

use std::time::{Duration, Instant};

use fann::baseline::RectTree;
use fann::mtree::NodeKind;
use fann::{flexible_agg, flexible_agg_bruteforce, AggregateKind, Dist, MetricTreeBuilder, VertexId};
use fann_bench::dataset::{data_dir, dimacs_paths};
use fann_bench::differential::{check_instance, InstanceSpace};
use fann_bench::sweep::Engine;
use fann_bench::verify::label_vs_dijkstra;
use fann_bench::{run_sweep, Artifacts, BuildConfig, DatasetSource, ExperimentGrid, Param, SweepRequest, SweepSummary};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACTNESS_INSTANCES: usize = 500;
const EXACTNESS_BUDGET: Duration = Duration::from_secs(120);
const KERNEL_MAX_M: usize = 12;
const KERNEL_VECTORS: usize = 1_000;
const KERNEL_BUDGET: Duration = Duration::from_secs(30);
const LABEL_PAIRS: usize = 10_000;
const LABEL_PAIRS_PER_SOURCE: usize = 10;
const LABEL_BUDGET: Duration = Duration::from_secs(5 * 60);
const AGREEMENT_TRIALS: usize = 20;
const PERF_TRIALS: usize = 100;
const PERF_BUDGET: Duration = Duration::from_secs(30 * 60);
const MAX_PHI_RATIO: f64 = 1.5;
const TREND_SLACK: f64 = 0.05;
const AUDIT_OBJECTS: usize = 10_000;
const DEFAULT_PROXY_VERTICES: usize = 10_000;

struct Report {
    /// (binding, passed, text)
    lines: Vec<(bool, bool, String)>,
    /// Whether the NY-specific criteria are binding.
    on_ny: bool,
}

impl Report {
    fn line(&mut self, criterion: u32, name: &str, passed: bool, detail: String) {
        self.push(true, criterion, name, passed, detail);
    }

    /// A criterion stated for NY: binding only when NY was evaluated.
    fn ny_line(&mut self, criterion: u32, name: &str, passed: bool, detail: String) {
        self.push(self.on_ny, criterion, name, passed, detail);
    }

    fn push(&mut self, binding: bool, criterion: u32, name: &str, passed: bool, detail: String) {
        let mut text = format!("[{}] {criterion} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
        if !binding {
            text.push_str(" [informational: NY not evaluated]");
        }
        println!("{text}");
        self.lines.push((binding, passed, text));
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn road_dataset() -> (DatasetSource, bool) {
    if dimacs_paths(&data_dir(), "NY").is_some() {
        return ("NY".parse().unwrap(), true);
    }
    let n = std::env::var("FANN_PROXY_VERTICES").ok().and_then(|v| v.parse().ok()).unwrap_or(DEFAULT_PROXY_VERTICES);
    (format!("metro:{n}:1").parse().unwrap(), false)
}

fn exactness(report: &mut Report) {
    let t = Instant::now();
    let space = InstanceSpace::default();
    let mut bad = Vec::new();
    for seed in 0..EXACTNESS_INSTANCES as u64 {
        let inst = space.sample(seed);
        let c = check_instance(&inst).expect("instance runs");
        if c.fann != c.brute {
            bad.push(seed);
        }
    }
    let el = t.elapsed();
    report.line(
        1,
        "exactness vs exhaustive scan",
        bad.is_empty() && el < EXACTNESS_BUDGET,
        format!(
            "{}/{EXACTNESS_INSTANCES} instances equal, {} (budget {}){}",
            EXACTNESS_INSTANCES - bad.len(),
            secs(el),
            secs(EXACTNESS_BUDGET),
            if bad.is_empty() { String::new() } else { format!(", first mismatch seed {}", bad[0]) }
        ),
    );
}

fn kernel(report: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut checked, mut bad) = (0u64, 0u64);
    for len in 1..=KERNEL_MAX_M {
        for kind in AggregateKind::ALL {
            for v in 0..KERNEL_VECTORS {
                // every other vector draws from a tiny range to force ties
                let hi = if v % 2 == 0 { 4 } else { 1_000_000 };
                let d: Vec<Dist> = (0..len).map(|_| rng.gen_range(0..hi)).collect();
                for m in 1..=len {
                    checked += 1;
                    if flexible_agg(&d, kind, m).unwrap().value != flexible_agg_bruteforce(&d, kind, m).unwrap() {
                        bad += 1;
                    }
                }
            }
        }
    }
    let el = t.elapsed();
    report.line(
        2,
        "flexible aggregate kernel vs subset enumeration",
        bad == 0 && el < KERNEL_BUDGET,
        format!("{checked} (vector, m) cases, {bad} mismatches, {} (budget {})", secs(el), secs(KERNEL_BUDGET)),
    );
}

fn labels(report: &mut Report, arts: &Artifacts, label_time: Duration, on: &str) {
    let t = Instant::now();
    let (checked, bad) = label_vs_dijkstra(arts, LABEL_PAIRS, LABEL_PAIRS_PER_SOURCE, 3);
    let el = label_time + t.elapsed();
    report.line(
        3,
        "hub labels vs Dijkstra",
        bad.is_empty() && checked as usize == LABEL_PAIRS && el < LABEL_BUDGET,
        format!(
            "{on}: {checked} pairs, {} mismatches, {} incl. label build {} (budget {})",
            bad.len(),
            secs(el),
            secs(label_time),
            secs(LABEL_BUDGET)
        ),
    );
}

fn sweep(arts: &Artifacts, trials: usize, vary: Option<Param>) -> anyhow::Result<(SweepSummary, Duration)> {
    let grid = ExperimentGrid { trials, seed: 0, ..Default::default() };
    let req = SweepRequest { grid: &grid, vary, engines: &[Engine::Fann, Engine::Ier], repro_path: None };
    let t = Instant::now();
    let s = run_sweep(arts, &req, std::io::sink())?;
    Ok((s, t.elapsed()))
}

fn agreement(report: &mut Report, arts: &Artifacts, on: &str) {
    let (passed, detail) = match sweep(arts, AGREEMENT_TRIALS, None) {
        Ok((s, el)) => {
            let rows = s.trials.len();
            (true, format!("{on}: {AGREEMENT_TRIALS} trials x 2 kinds, {rows} rows, 0 disagreements, {}", secs(el)))
        }
        Err(e) => (false, format!("{on}: {e:#}")),
    };
    report.line(4, "engine agreement on the default cell", passed, detail);
}

/// Adjacent-pair violations of a monotone trend, as relative magnitudes.
fn violations(values: &[f64], increasing: bool) -> Vec<f64> {
    values
        .windows(2)
        .filter_map(|w| {
            let rise = if increasing { w[0] - w[1] } else { w[1] - w[0] };
            (rise > 0.0).then(|| rise / w[0].max(f64::MIN_POSITIVE))
        })
        .collect()
}

fn trend_ok(values: &[f64], increasing: bool) -> bool {
    let v = violations(values, increasing);
    v.is_empty() || (v.len() == 1 && v[0] <= TREND_SLACK)
}

fn fmt_series(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>().join(" ")
}

fn performance(report: &mut Report, arts: &Artifacts, on: &str) {
    let grid = ExperimentGrid::default();
    let (s, el) = match sweep(arts, PERF_TRIALS, Some(Param::Phi)) {
        Ok(r) => r,
        Err(e) => {
            // a failing sweep means disagreement or an error: binding everywhere
            report.line(5, "directional performance", false, format!("{on}: {e:#}"));
            report.line(6, "trend shapes over phi", false, format!("{on}: sweep failed"));
            return;
        }
    };
    let cell_of = |phi: f64| grid.phis.iter().position(|&p| p == phi).expect("phi in grid");
    let na = |phi: f64, e: Engine, k: AggregateKind| s.mean(cell_of(phi), e, k).expect("cell mean").node_accesses;

    let mut ok5 = el < PERF_BUDGET;
    let mut parts = Vec::new();
    for kind in AggregateKind::ALL {
        let (f, i) = (na(grid.defaults.phi, Engine::Fann, kind), na(grid.defaults.phi, Engine::Ier, kind));
        ok5 &= f < i;
        parts.push(format!("{kind} fann {f:.1} vs ier {i:.1}"));
    }
    let ratio = na(1.0, Engine::Ier, AggregateKind::Max) / na(1.0, Engine::Fann, AggregateKind::Max);
    ok5 &= ratio >= MAX_PHI_RATIO;
    report.ny_line(
        5,
        "directional performance",
        ok5,
        format!(
            "{on}, {PERF_TRIALS} trials: defaults {}; phi=1 max ier/fann = {ratio:.2} (floor {MAX_PHI_RATIO}); {} (budget {})",
            parts.join(", "),
            secs(el),
            secs(PERF_BUDGET)
        ),
    );

    let mut ok6 = true;
    let mut parts = Vec::new();
    for kind in AggregateKind::ALL {
        let f: Vec<f64> = grid.phis.iter().map(|&p| na(p, Engine::Fann, kind)).collect();
        let i: Vec<f64> = grid.phis.iter().map(|&p| na(p, Engine::Ier, kind)).collect();
        let (fo, io) = (trend_ok(&f, false), trend_ok(&i, true));
        ok6 &= fo && io;
        parts.push(format!(
            "{kind} fann [{}] {} / ier [{}] {}",
            fmt_series(&f),
            if fo { "non-increasing" } else { "NOT non-increasing" },
            fmt_series(&i),
            if io { "non-decreasing" } else { "NOT non-decreasing" }
        ));
    }
    report.ny_line(
        6,
        "trend shapes over phi",
        ok6,
        format!("{on}, phi {:?}: {}", grid.phis, parts.join("; ")),
    );
}

fn audits(report: &mut Report, arts: &Artifacts, on: &str) {
    let t = Instant::now();
    let g = &arts.graph;
    let labels = &arts.labels;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut objects: Vec<VertexId> = (0..g.num_vertices() as VertexId).collect();
    objects.shuffle(&mut rng);
    objects.truncate(AUDIT_OBJECTS);
    let tree = MetricTreeBuilder::new().seed(5).build(&objects, labels).expect("tree builds");
    let queries: Vec<VertexId> = (0..4).map(|_| rng.gen_range(0..g.num_vertices() as VertexId)).collect();

    let structure = tree.audit_structure().len();
    let cover = tree.audit_covering(labels).len();
    let parent = tree.audit_parent_dist(labels).len();
    let chain = tree.audit_lower_bounds(labels, &queries).len();
    let scale = g.audit_euclid_scale_edges().len();
    let lb_pairs = (0..100_000)
        .filter(|_| {
            let (u, v) = (rng.gen_range(0..g.num_vertices() as VertexId), rng.gen_range(0..g.num_vertices() as VertexId));
            g.euclidean_lb(u, v) > fann::DistanceOracle::dist(labels, u, v)
        })
        .count();
    let clean = structure + cover + parent + chain + scale + lb_pairs == 0;

    // Planted faults: shrink one covering radius, bump one parent distance,
    // shrink one rectangle.
    let mut radius_tree = tree.clone();
    let mut witness = None;
    'find: for id in radius_tree.node_ids().collect::<Vec<_>>() {
        if let NodeKind::Inner(entries) = &mut radius_tree.node_mut(id).kind {
            if let Some(e) = entries.iter_mut().find(|e| e.radius > 0) {
                e.radius -= 1;
                witness = Some((e.routing_oid, e.radius + 1, e.child));
                break 'find;
            }
        }
    }
    let (routing, radius, child) = witness.expect("a routing entry with positive radius");
    let farthest = tree
        .subtree_objects(child)
        .into_iter()
        .find(|&o| fann::DistanceOracle::dist(labels, routing, o) == radius)
        .expect("tight radius");
    let radius_caught =
        !radius_tree.audit_covering(labels).is_empty() && !radius_tree.audit_lower_bounds(labels, &[farthest]).is_empty();

    let mut pd_tree = tree.clone();
    let root = pd_tree.root();
    if let NodeKind::Inner(entries) = &mut pd_tree.node_mut(root).kind {
        entries[0].parent_dist += 1;
    }
    let pd_caught = !pd_tree.audit_parent_dist(labels).is_empty();

    let mut rt = RectTree::build(g, &objects).expect("rectangle tree builds");
    let rect_clean = rt.audit_mbrs().is_empty();
    let leaf = (0..rt.num_nodes() as u32).find(|&id| rt.node(id).height == 0).expect("a leaf");
    rt.node_mut(leaf).mbr.max[0] -= 1;
    let rect_caught = !rt.audit_mbrs().is_empty();

    report.line(
        7,
        "structural audits",
        clean && rect_clean && radius_caught && pd_caught && rect_caught,
        format!(
            "{on}: {}-object tree (height {}, {} nodes): structure {structure}, covering {cover}, parent_dist {parent}, \
             bound chain {chain}, euclid edges {scale}, euclid pairs {lb_pairs} violations; planted radius {}, \
             parent_dist {}, rectangle {}; {}",
            tree.len(),
            tree.height(),
            tree.num_nodes(),
            if radius_caught { "caught" } else { "MISSED" },
            if pd_caught { "caught" } else { "MISSED" },
            if rect_caught { "caught" } else { "MISSED" },
            secs(t.elapsed())
        ),
    );
}

fn main() {
    let (src, is_ny) = road_dataset();
    let mut report = Report { lines: Vec::new(), on_ny: is_ny };
    exactness(&mut report);
    kernel(&mut report);

    let on = if is_ny { "NY".to_string() } else { format!("proxy {src} (NY files not found, NY not evaluated)") };
    let require_ny = std::env::var("FANN_REQUIRE_NY").is_ok_and(|v| v == "1");
    if require_ny && !is_ny {
        report.line(0, "NY dataset", false, format!("FANN_REQUIRE_NY=1 but no NY files in {}", data_dir().display()));
    }
    let graph = src.load(&data_dir()).expect("dataset loads");
    let arts = Artifacts::build(&src.to_string(), src.weight_variant(), graph, BuildConfig::default()).expect("artifacts build");
    println!(
        "dataset {on}: {} vertices, {} edges, labels {}, mtree {}",
        arts.graph.num_vertices(),
        arts.graph.num_edges(),
        secs(arts.times.labels),
        secs(arts.times.mtree)
    );

    labels(&mut report, &arts, arts.times.labels, &on);
    agreement(&mut report, &arts, &on);
    performance(&mut report, &arts, &on);
    audits(&mut report, &arts, &on);

    let failed = report.lines.iter().filter(|l| l.0 && !l.1).count();
    if failed > 0 {
        eprintln!("acceptance: {failed} binding criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all binding criteria passed");
}
