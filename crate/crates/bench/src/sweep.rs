//! Sweep runner: every (cell, trial, kind, engine) as one CSV row, plus
//! per-cell means, with a cross-engine exactness check on every trial.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fann::baseline::{brute_force_fann, ier_fann_search};
use fann::{fann_search, AggregateKind, Dist, DistanceOracle, QuerySpec, ResultSet, SearchStats, VertexId};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::Artifacts;
use crate::grid::{CellParams, ExperimentGrid, Param};
use crate::workload::{derive_seed, gen_queries};

/// CSV layout identifier, bumped whenever columns change.
pub const CSV_FORMAT: &str = "fann-sweep/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Engine {
    /// Best-first M-tree search over hub-label distances.
    Fann,
    /// Euclidean rectangle-tree search with network refinement.
    Ier,
    /// Exhaustive scan.
    Brute,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Fann => "fann",
            Engine::Ier => "ier-style",
            Engine::Brute => "brute",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "fann" | "mtree" => Engine::Fann,
            "ier" | "ier-style" => Engine::Ier,
            "brute" => Engine::Brute,
            other => anyhow::bail!("unknown engine `{other}` (expected fann, ier or brute)"),
        })
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs one engine on prepared artifacts.
pub fn run_engine(arts: &Artifacts, engine: Engine, qs: &QuerySpec<'_>) -> Result<(ResultSet, SearchStats)> {
    Ok(match engine {
        Engine::Fann => fann_search(&arts.mtree, &arts.labels, qs)?,
        Engine::Ier => ier_fann_search(&arts.rtree, &arts.graph, &arts.labels, qs)?,
        Engine::Brute => {
            let started = std::time::Instant::now();
            let r = brute_force_fann(&arts.graph, &arts.labels, qs)?;
            let stats = SearchStats {
                oracle_calls: arts.pois.len() as u64 * qs.queries.len() as u64,
                wall_time: started.elapsed(),
                ..Default::default()
            };
            (r, stats)
        }
    })
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub cell: usize,
    pub trial: usize,
    pub query_seed: u64,
    pub kind: AggregateKind,
    pub engine: Engine,
    pub values: Vec<Dist>,
    pub oids: Vec<VertexId>,
    pub stats: SearchStats,
}

/// Everything needed to replay a disagreeing trial.
#[derive(Debug, Clone, Serialize)]
pub struct ReproBundle {
    pub dataset: String,
    pub graph_checksum: String,
    pub vertices: usize,
    pub edges: usize,
    pub oracle: String,
    pub capacity: usize,
    pub build_seed: u64,
    pub grid_seed: u64,
    pub query_seed: u64,
    pub trial: usize,
    pub params: CellParams,
    pub kind: String,
    pub queries: Vec<VertexId>,
    pub results: Vec<EngineValues>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EngineValues {
    pub engine: String,
    pub g_phi: Vec<Dist>,
    pub oids: Vec<VertexId>,
}

/// Engines returned different `g_phi` multisets on some trial.
#[derive(Debug)]
pub struct EngineDisagreement {
    pub bundle: Box<ReproBundle>,
    pub written_to: Option<PathBuf>,
}

impl fmt::Display for EngineDisagreement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = &self.bundle;
        write!(f, "engines disagree on trial {} (query seed {}, kind {})", b.trial, b.query_seed, b.kind)?;
        for r in &b.results {
            write!(f, "; {} = {:?}", r.engine, r.g_phi)?;
        }
        if let Some(p) = &self.written_to {
            write!(f, "; repro bundle at {}", p.display())?;
        }
        Ok(())
    }
}

impl std::error::Error for EngineDisagreement {}

/// Per (cell, engine, kind) averages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMean {
    pub cell: usize,
    pub params: CellParams,
    pub engine: Engine,
    pub kind: AggregateKind,
    pub trials: usize,
    pub g_phi: f64,
    pub node_accesses: f64,
    pub oracle_calls: f64,
    pub wall_time_us: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepSummary {
    pub rows: usize,
    pub trials: Vec<TrialOutcome>,
    pub means: Vec<CellMean>,
}

impl SweepSummary {
    pub fn mean(&self, cell: usize, engine: Engine, kind: AggregateKind) -> Option<&CellMean> {
        self.means.iter().find(|m| m.cell == cell && m.engine == engine && m.kind == kind)
    }
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    row: &'a str,
    dataset: &'a str,
    vary: &'a str,
    m: usize,
    k: usize,
    phi: f64,
    coverage: f64,
    engine: &'a str,
    kind: String,
    trial: String,
    query_seed: String,
    g_phi: String,
    node_accesses: String,
    oracle_calls: String,
    wall_time_us: String,
}

/// Seed of the query set for a trial. Independent of `phi`, `k` and the
/// aggregate, so sweeps over those reuse identical query sets.
pub fn trial_seed(grid_seed: u64, cell: &CellParams, trial: usize) -> u64 {
    derive_seed(grid_seed, &[cell.m as u64, cell.coverage.to_bits(), trial as u64])
}

#[derive(Debug, Clone)]
pub struct SweepRequest<'a> {
    pub grid: &'a ExperimentGrid,
    pub vary: Option<Param>,
    pub engines: &'a [Engine],
    /// Where to write a repro bundle if engines disagree.
    pub repro_path: Option<&'a Path>,
}

/// Runs the sweep and writes the CSV (metadata header, trial rows, mean rows).
pub fn run_sweep<W: Write>(arts: &Artifacts, req: &SweepRequest<'_>, out: W) -> Result<SweepSummary> {
    let grid = req.grid;
    grid.validate()?;
    let cells = grid.cells(req.vary);
    let mut out = out;
    write_metadata(&mut out, arts, req)?;

    let mut trials = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        let per_trial: Vec<Vec<TrialOutcome>> =
            (0..grid.trials).into_par_iter().map(|t| run_trial(arts, req, ci, cell, t)).collect::<Result<_>>()?;
        for outcomes in per_trial {
            check_agreement(arts, req, cell, &outcomes)?;
            trials.extend(outcomes);
        }
    }

    let vary = req.vary.map_or("none".to_string(), |p| p.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut rows = 0;
    for o in &trials {
        let c = &cells[o.cell];
        w.serialize(CsvRow {
            row: "trial",
            dataset: &arts.dataset,
            vary: &vary,
            m: c.m,
            k: c.k,
            phi: c.phi,
            coverage: c.coverage,
            engine: o.engine.name(),
            kind: o.kind.to_string(),
            trial: o.trial.to_string(),
            query_seed: o.query_seed.to_string(),
            g_phi: o.values.first().map_or(String::new(), |v| v.to_string()),
            node_accesses: o.stats.node_accesses.to_string(),
            oracle_calls: o.stats.oracle_calls.to_string(),
            wall_time_us: o.stats.wall_time.as_micros().to_string(),
        })?;
        rows += 1;
    }
    let means = cell_means(&cells, &trials, req.engines, &grid.kinds);
    for m in &means {
        w.serialize(CsvRow {
            row: "mean",
            dataset: &arts.dataset,
            vary: &vary,
            m: m.params.m,
            k: m.params.k,
            phi: m.params.phi,
            coverage: m.params.coverage,
            engine: m.engine.name(),
            kind: m.kind.to_string(),
            trial: format!("n={}", m.trials),
            query_seed: String::new(),
            g_phi: format!("{:.3}", m.g_phi),
            node_accesses: format!("{:.3}", m.node_accesses),
            oracle_calls: format!("{:.3}", m.oracle_calls),
            wall_time_us: format!("{:.1}", m.wall_time_us),
        })?;
    }
    w.flush()?;
    Ok(SweepSummary { rows, trials, means })
}

fn run_trial(
    arts: &Artifacts,
    req: &SweepRequest<'_>,
    ci: usize,
    cell: &CellParams,
    trial: usize,
) -> Result<Vec<TrialOutcome>> {
    let query_seed = trial_seed(req.grid.seed, cell, trial);
    let workload = gen_queries(&arts.graph, cell.m, cell.coverage, query_seed)?;
    let mut out = Vec::with_capacity(req.grid.kinds.len() * req.engines.len());
    for &kind in &req.grid.kinds {
        let mut qs = QuerySpec::new(workload.queries.clone(), cell.phi, cell.k, kind);
        qs.pois = arts.poi_set.as_ref();
        for &engine in req.engines {
            let (r, stats) = run_engine(arts, engine, &qs)
                .with_context(|| format!("{engine} on trial {trial} (query seed {query_seed})"))?;
            out.push(TrialOutcome {
                cell: ci,
                trial,
                query_seed,
                kind,
                engine,
                values: r.values(),
                oids: r.oids(),
                stats,
            });
        }
    }
    Ok(out)
}

fn check_agreement(arts: &Artifacts, req: &SweepRequest<'_>, cell: &CellParams, outcomes: &[TrialOutcome]) -> Result<()> {
    for &kind in &req.grid.kinds {
        let group: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.kind == kind).collect();
        let Some(first) = group.first() else { continue };
        if group.iter().all(|o| o.values == first.values) {
            continue;
        }
        let workload = gen_queries(&arts.graph, cell.m, cell.coverage, first.query_seed)?;
        let bundle = ReproBundle {
            dataset: arts.dataset.clone(),
            graph_checksum: format!("{:016x}", arts.graph.checksum()),
            vertices: arts.graph.num_vertices(),
            edges: arts.graph.num_edges(),
            oracle: arts.labels.id(),
            capacity: arts.config.capacity,
            build_seed: arts.config.seed,
            grid_seed: req.grid.seed,
            query_seed: first.query_seed,
            trial: first.trial,
            params: *cell,
            kind: kind.to_string(),
            queries: workload.queries,
            results: group
                .iter()
                .map(|o| EngineValues { engine: o.engine.name().into(), g_phi: o.values.clone(), oids: o.oids.clone() })
                .collect(),
        };
        let written_to = match req.repro_path {
            Some(p) => {
                std::fs::write(p, serde_json::to_vec_pretty(&bundle)?)
                    .with_context(|| format!("writing repro bundle {}", p.display()))?;
                Some(p.to_path_buf())
            }
            None => None,
        };
        return Err(EngineDisagreement { bundle: Box::new(bundle), written_to }.into());
    }
    Ok(())
}

fn cell_means(
    cells: &[CellParams],
    trials: &[TrialOutcome],
    engines: &[Engine],
    kinds: &[AggregateKind],
) -> Vec<CellMean> {
    let mut out = Vec::new();
    for (ci, params) in cells.iter().enumerate() {
        for &engine in engines {
            for &kind in kinds {
                let group: Vec<&TrialOutcome> =
                    trials.iter().filter(|o| o.cell == ci && o.engine == engine && o.kind == kind).collect();
                if group.is_empty() {
                    continue;
                }
                let n = group.len() as f64;
                let mean = |f: &dyn Fn(&TrialOutcome) -> f64| group.iter().map(|o| f(o)).sum::<f64>() / n;
                out.push(CellMean {
                    cell: ci,
                    params: *params,
                    engine,
                    kind,
                    trials: group.len(),
                    g_phi: mean(&|o| o.values.first().copied().unwrap_or(0) as f64),
                    node_accesses: mean(&|o| o.stats.node_accesses as f64),
                    oracle_calls: mean(&|o| o.stats.oracle_calls as f64),
                    wall_time_us: mean(&|o| o.stats.wall_time.as_secs_f64() * 1e6),
                });
            }
        }
    }
    out
}

fn write_metadata<W: Write>(out: &mut W, arts: &Artifacts, req: &SweepRequest<'_>) -> Result<()> {
    let g = req.grid;
    let pois = if arts.poi_set.is_some() {
        format!("sampled ratio={} count={}", arts.config.poi_ratio, arts.pois.len())
    } else {
        "all-vertices".to_string()
    };
    let engines: Vec<&str> = req.engines.iter().map(|e| e.name()).collect();
    let kinds: Vec<String> = g.kinds.iter().map(|k| k.to_string()).collect();
    let lines = [
        ("format", CSV_FORMAT.to_string()),
        ("dataset", arts.dataset.clone()),
        ("vertices", arts.graph.num_vertices().to_string()),
        ("edges", arts.graph.num_edges().to_string()),
        ("graph_checksum", format!("{:016x}", arts.graph.checksum())),
        ("weight_variant", arts.weight_variant.clone()),
        ("euclid_scale", format!("{:.9}", arts.graph.euclid_scale())),
        ("oracle", arts.labels.id()),
        ("mtree_capacity", arts.mtree.capacity().to_string()),
        ("mtree_height", arts.mtree.height().to_string()),
        ("rtree_capacity", arts.rtree.capacity().to_string()),
        ("rtree_height", arts.rtree.height().to_string()),
        ("build_seed", arts.config.seed.to_string()),
        ("grid_seed", g.seed.to_string()),
        ("trials", g.trials.to_string()),
        ("vary", req.vary.map_or("none".into(), |p| p.to_string())),
        ("defaults", format!("m={} k={} phi={} coverage={}", g.defaults.m, g.defaults.k, g.defaults.phi, g.defaults.coverage)),
        ("kinds", kinds.join(",")),
        ("engines", engines.join(",")),
        ("query_region", "axis-aligned square, area = coverage x bounding box, clipped".into()),
        ("pois", pois),
        ("ier_refinement", "IER-style: one candidate at a time, best-first".into()),
    ];
    for (k, v) in lines {
        writeln!(out, "# {k}: {v}")?;
    }
    Ok(())
}
