use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fann::baseline::RectTree;
use fann::mtree::TreeProvenance;
use fann::{AggregateKind, DistanceOracle, HubLabeling, MetricTreeBuilder, OrderPolicy, QuerySpec, RoadNetwork, VertexId};
use fann_bench::artifacts::{build_labels, CachePaths};
use fann_bench::dataset::{data_dir, DATA_DIR_ENV};
use fann_bench::sweep::run_engine;
use fann_bench::verify::PlantedFault;
use fann_bench::{
    gen_queries, run_sweep, verify, Artifacts, BuildConfig, DatasetSource, Engine, EngineDisagreement,
    ExperimentGrid, Param, SweepRequest, VerifyOptions,
};
use serde::Serialize;

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_DISAGREE: u8 = 3;

#[derive(Parser)]
#[command(name = "fann-bench", version, about = "Exact k-FANN search on road networks: build, verify, query, sweep")]
struct Cli {
    /// Directory holding DIMACS files.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    /// Directory for cached graphs and indexes [default: <data-dir>/artifacts].
    #[arg(long, global = true, env = "FANN_WORK_DIR")]
    work_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// DIMACS name (NY, BAY, NW, ...), grid:<side>[:<seed>], rgg:<n>[:<extra>[:<seed>]] or metro:<n>[:<seed>].
    #[arg(long, default_value = "NW")]
    dataset: String,
    /// Node capacity of the M-tree and the rectangle tree.
    #[arg(long, default_value_t = fann::mtree::DEFAULT_CAPACITY)]
    capacity: usize,
    /// Seed for tree construction and POI sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Label vertex order: degree or tree-centrality[:samples[:seed]].
    #[arg(long, default_value = "degree")]
    order: String,
    /// Fraction of vertices used as POIs.
    #[arg(long, default_value_t = 1.0)]
    poi_ratio: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and clean a dataset, caching the result.
    Ingest(Common),
    /// Build and cache hub labels.
    BuildLabels(Common),
    /// Build and cache the M-tree.
    BuildMtree(Common),
    /// Build the rectangle tree and audit it.
    BuildRtree(Common),
    /// Run the audit battery; exits 2 on any failure.
    Verify(VerifyArgs),
    /// Answer one query and print the result as JSON.
    Query(QueryArgs),
    /// Run an experiment sweep and write CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 10_000)]
    label_pairs: usize,
    /// Dijkstra targets per source in the label check.
    #[arg(long, default_value_t = 10)]
    pairs_per_source: usize,
    #[arg(long, default_value_t = 50)]
    differential: usize,
    /// Corrupt the tree before auditing: radius or parent-dist.
    #[arg(long)]
    plant_fault: Option<PlantedFault>,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated query vertex ids; generated from --m/--coverage when absent.
    #[arg(long, value_delimiter = ',')]
    queries: Vec<VertexId>,
    #[arg(long, default_value_t = 256)]
    m: usize,
    #[arg(long, default_value_t = 0.10)]
    coverage: f64,
    #[arg(long, default_value_t = 0.5)]
    phi: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value = "max")]
    agg: String,
    /// fann, ier or brute.
    #[arg(long, default_value = "fann")]
    engine: String,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Parameter to vary: m, k, phi or coverage. Inferred from a multi-valued flag.
    #[arg(long)]
    vary: Option<Param>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    phi: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    coverage: Vec<f64>,
    /// max, sum or both.
    #[arg(long, default_value = "both")]
    agg: String,
    /// Comma-separated engines.
    #[arg(long, value_delimiter = ',', default_value = "fann,ier")]
    engine: Vec<String>,
    /// Seed for query generation.
    #[arg(long, default_value_t = 0)]
    grid_seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Paths {
    data: PathBuf,
    work: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let data = cli.data_dir.unwrap_or_else(data_dir);
    let work = cli.work_dir.unwrap_or_else(|| data.join("artifacts"));
    let paths = Paths { data, work };
    match run(cli.command, &paths) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<EngineDisagreement>().is_some() {
                ExitCode::from(EXIT_DISAGREE)
            } else {
                ExitCode::from(EXIT_USAGE)
            }
        }
    }
}

fn run(cmd: Command, paths: &Paths) -> Result<u8> {
    match cmd {
        Command::Ingest(c) => ingest(&c, paths),
        Command::BuildLabels(c) => cmd_build_labels(&c, paths),
        Command::BuildMtree(c) => cmd_build_mtree(&c, paths),
        Command::BuildRtree(c) => cmd_build_rtree(&c, paths),
        Command::Verify(v) => cmd_verify(v, paths),
        Command::Query(q) => cmd_query(q, paths),
        Command::Sweep(s) => cmd_sweep(s, paths),
    }
}

impl Common {
    fn source(&self) -> Result<DatasetSource> {
        self.dataset.parse()
    }

    fn config(&self) -> Result<BuildConfig> {
        let order = OrderPolicy::parse(&self.order).with_context(|| format!("unknown label order `{}`", self.order))?;
        Ok(BuildConfig { capacity: self.capacity, seed: self.seed, poi_ratio: self.poi_ratio, order, ..Default::default() })
    }

    fn cache(&self, paths: &Paths) -> Result<CachePaths> {
        std::fs::create_dir_all(&paths.work).with_context(|| format!("creating {}", paths.work.display()))?;
        Ok(CachePaths::new(&paths.work, &self.source()?, &self.config()?))
    }

    fn artifacts(&self, paths: &Paths) -> Result<Artifacts> {
        Artifacts::load_or_build(&self.source()?, &paths.data, &paths.work, self.config()?)
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn cached_graph(c: &Common, paths: &Paths) -> Result<RoadNetwork> {
    let cache = c.cache(paths)?;
    match RoadNetwork::load(&cache.graph) {
        Ok(g) => Ok(g),
        Err(_) => {
            let g = c.source()?.load(&paths.data)?;
            g.save(&cache.graph)?;
            Ok(g)
        }
    }
}

#[derive(Serialize)]
struct GraphReport {
    dataset: String,
    vertices: usize,
    edges: usize,
    checksum: String,
    euclid_scale: f64,
    cached_at: PathBuf,
}

fn ingest(c: &Common, paths: &Paths) -> Result<u8> {
    let cache = c.cache(paths)?;
    let g = c.source()?.load(&paths.data)?;
    g.save(&cache.graph)?;
    print_json(&GraphReport {
        dataset: c.dataset.clone(),
        vertices: g.num_vertices(),
        edges: g.num_edges(),
        checksum: format!("{:016x}", g.checksum()),
        euclid_scale: g.euclid_scale(),
        cached_at: cache.graph,
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct BuildReport {
    artifact: &'static str,
    path: Option<PathBuf>,
    build_secs: f64,
    #[serde(flatten)]
    stats: serde_json::Value,
}

fn cmd_build_labels(c: &Common, paths: &Paths) -> Result<u8> {
    let g = cached_graph(c, paths)?;
    let cache = c.cache(paths)?;
    let t = Instant::now();
    let labels = build_labels(&g, &c.config()?)?;
    let build_secs = t.elapsed().as_secs_f64();
    labels.save(&cache.labels)?;
    let s = labels.stats();
    let stats = serde_json::json!({
        "policy": labels.policy(),
        "vertices": s.vertices,
        "entries": s.entries,
        "avg_label": s.avg_label,
        "max_label": s.max_label,
        "bytes": s.bytes,
    });
    print_json(&BuildReport { artifact: "hub-labels", path: Some(cache.labels), build_secs, stats })?;
    Ok(0)
}

fn cached_labels(c: &Common, paths: &Paths, g: &RoadNetwork) -> Result<HubLabeling> {
    let cache = c.cache(paths)?;
    match HubLabeling::load(&cache.labels, g) {
        Ok(l) => Ok(l),
        Err(_) => {
            let l = build_labels(g, &c.config()?)?;
            l.save(&cache.labels)?;
            Ok(l)
        }
    }
}

fn cmd_build_mtree(c: &Common, paths: &Paths) -> Result<u8> {
    let g = cached_graph(c, paths)?;
    let labels = cached_labels(c, paths, &g)?;
    let cache = c.cache(paths)?;
    let cfg = c.config()?;
    let pois = fann_bench::workload::sample_pois(&g, cfg.poi_ratio, cfg.seed)?;
    let t = Instant::now();
    let tree = MetricTreeBuilder::new().capacity(cfg.capacity).seed(cfg.seed).build(&pois, &labels)?;
    let build_secs = t.elapsed().as_secs_f64();
    tree.save(&cache.mtree, &TreeProvenance { graph_checksum: g.checksum(), oracle_id: labels.id() })?;
    let stats = serde_json::json!({
        "objects": tree.len(),
        "nodes": tree.num_nodes(),
        "height": tree.height(),
        "capacity": tree.capacity(),
        "oracle_calls": labels.calls(),
    });
    print_json(&BuildReport { artifact: "mtree", path: Some(cache.mtree), build_secs, stats })?;
    Ok(0)
}

fn cmd_build_rtree(c: &Common, paths: &Paths) -> Result<u8> {
    let g = cached_graph(c, paths)?;
    let cfg = c.config()?;
    let pois = fann_bench::workload::sample_pois(&g, cfg.poi_ratio, cfg.seed)?;
    let t = Instant::now();
    let rt = RectTree::build_with_capacity(&g, &pois, cfg.capacity)?;
    let build_secs = t.elapsed().as_secs_f64();
    let violations = rt.audit_mbrs();
    let stats = serde_json::json!({
        "objects": rt.len(),
        "nodes": rt.num_nodes(),
        "height": rt.height(),
        "capacity": rt.capacity(),
        "mbr_violations": violations.len(),
    });
    print_json(&BuildReport { artifact: "rtree", path: None, build_secs, stats })?;
    Ok(if violations.is_empty() { 0 } else { EXIT_VERIFY })
}

fn cmd_verify(v: VerifyArgs, paths: &Paths) -> Result<u8> {
    let arts = v.common.artifacts(paths)?;
    let opts = VerifyOptions {
        label_pairs: v.label_pairs,
        pairs_per_source: v.pairs_per_source,
        differential_instances: v.differential,
        seed: v.common.seed,
        plant: v.plant_fault,
        ..Default::default()
    };
    let report = verify(&arts, &opts)?;
    println!("{report}");
    Ok(if report.passed() { 0 } else { EXIT_VERIFY })
}

#[derive(Serialize)]
struct QueryOutput {
    dataset: String,
    engine: &'static str,
    oracle: String,
    queries: Vec<VertexId>,
    phi: f64,
    m: usize,
    k: usize,
    kind: AggregateKind,
    results: Vec<ResultJson>,
    stats: StatsJson,
}

#[derive(Serialize)]
struct ResultJson {
    oid: VertexId,
    g_phi: u64,
    subset: Vec<VertexId>,
}

#[derive(Serialize)]
struct StatsJson {
    node_accesses: u64,
    oracle_calls: u64,
    heap_pushes: u64,
    entries_examined: u64,
    entries_pruned_cheap: u64,
    entries_pruned_full: u64,
    pops_discarded: u64,
    objects_examined: u64,
    objects_pruned_cheap: u64,
    objects_rejected: u64,
    wall_time_us: u128,
}

fn cmd_query(q: QueryArgs, paths: &Paths) -> Result<u8> {
    let engine = Engine::parse(&q.engine)?;
    let kind: AggregateKind = q.agg.parse()?;
    let arts = q.common.artifacts(paths)?;
    let queries = if q.queries.is_empty() {
        gen_queries(&arts.graph, q.m, q.coverage, q.common.seed)?.queries
    } else {
        if let Some(&bad) = q.queries.iter().find(|&&v| v as usize >= arts.graph.num_vertices()) {
            bail!("query vertex {bad} out of range");
        }
        q.queries.clone()
    };
    let mut qs = QuerySpec::new(queries.clone(), q.phi, q.k, kind);
    qs.pois = arts.poi_set.as_ref();
    let m = qs.flex()?.m;
    let (results, s) = run_engine(&arts, engine, &qs)?;
    let out = QueryOutput {
        dataset: arts.dataset.clone(),
        engine: engine.name(),
        oracle: arts.labels.id(),
        queries: queries.clone(),
        phi: q.phi,
        m,
        k: q.k,
        kind,
        results: results
            .candidates()
            .iter()
            .map(|c| ResultJson { oid: c.oid, g_phi: c.g_phi, subset: c.subset.iter().map(|&i| queries[i]).collect() })
            .collect(),
        stats: StatsJson {
            node_accesses: s.node_accesses,
            oracle_calls: s.oracle_calls,
            heap_pushes: s.heap_pushes,
            entries_examined: s.entries_examined,
            entries_pruned_cheap: s.entries_pruned_cheap,
            entries_pruned_full: s.entries_pruned_full,
            pops_discarded: s.pops_discarded,
            objects_examined: s.objects_examined,
            objects_pruned_cheap: s.objects_pruned_cheap,
            objects_rejected: s.objects_rejected,
            wall_time_us: s.wall_time.as_micros(),
        },
    };
    print_json(&out)?;
    Ok(0)
}

fn apply_list<T: Copy>(values: &[T], list: &mut Vec<T>, default: &mut T, p: Param, inferred: &mut Vec<Param>) {
    match values {
        [] => {}
        [one] => *default = *one,
        many => {
            *list = many.to_vec();
            inferred.push(p);
        }
    }
}

fn cmd_sweep(s: SweepArgs, paths: &Paths) -> Result<u8> {
    let mut grid = ExperimentGrid { seed: s.grid_seed, ..Default::default() };
    if let Some(t) = s.trials {
        grid.trials = t;
    }
    grid.kinds = match s.agg.to_ascii_lowercase().as_str() {
        "both" | "all" => AggregateKind::ALL.to_vec(),
        one => vec![one.parse()?],
    };
    let mut inferred = Vec::new();
    let d = &mut grid.defaults;
    apply_list(&s.m, &mut grid.ms, &mut d.m, Param::M, &mut inferred);
    apply_list(&s.k, &mut grid.ks, &mut d.k, Param::K, &mut inferred);
    apply_list(&s.phi, &mut grid.phis, &mut d.phi, Param::Phi, &mut inferred);
    apply_list(&s.coverage, &mut grid.coverages, &mut d.coverage, Param::Coverage, &mut inferred);
    let vary = match (s.vary, inferred.as_slice()) {
        (Some(v), rest) if rest.iter().all(|&p| p == v) => Some(v),
        (None, []) => None,
        (None, [one]) => Some(*one),
        _ => bail!("only one parameter may vary per sweep (pass a single value for the others)"),
    };
    let engines = s.engine.iter().map(|e| Engine::parse(e)).collect::<Result<Vec<_>>>()?;
    let arts = s.common.artifacts(paths)?;
    grid.datasets = vec![arts.dataset.clone()];

    let repro = s.out.as_ref().map(|p| p.with_extension("repro.json"));
    let req = SweepRequest { grid: &grid, vary, engines: &engines, repro_path: repro.as_deref() };
    let summary = match &s.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            run_sweep(&arts, &req, BufWriter::new(f))?
        }
        None => run_sweep(&arts, &req, io::stdout().lock())?,
    };
    eprintln!("sweep: {} trial rows, {} mean rows", summary.rows, summary.means.len());
    report_means(&summary, s.out.as_deref());
    Ok(0)
}

fn report_means(summary: &fann_bench::SweepSummary, out: Option<&Path>) {
    if out.is_none() {
        return;
    }
    for m in &summary.means {
        eprintln!(
            "  m={} k={} phi={} C={} {:<9} {:<3} node_accesses={:.1} oracle_calls={:.1} wall={:.0}us",
            m.params.m, m.params.k, m.params.phi, m.params.coverage, m.engine.name(), m.kind, m.node_accesses,
            m.oracle_calls, m.wall_time_us
        );
    }
}
