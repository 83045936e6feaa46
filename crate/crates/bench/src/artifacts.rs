//! Built indexes for one dataset, with optional on-disk caching.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use fann::baseline::RectTree;
use fann::mtree::TreeProvenance;
use fann::oracle::{HubLabelBuilder, DEFAULT_LABEL_BUDGET};
use fann::search::PoiSet;
use fann::{DistanceOracle, HubLabeling, MetricTree, MetricTreeBuilder, OrderPolicy, RoadNetwork, VertexId};

use crate::dataset::DatasetSource;
use crate::workload::sample_pois;

#[derive(Debug, Clone)]
pub struct BuildConfig {
    /// Node capacity of both trees.
    pub capacity: usize,
    pub seed: u64,
    /// Fraction of vertices used as POIs; 1 means all.
    pub poi_ratio: f64,
    pub order: OrderPolicy,
    pub label_budget: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            capacity: fann::mtree::DEFAULT_CAPACITY,
            seed: 0,
            poi_ratio: 1.0,
            order: OrderPolicy::default(),
            label_budget: DEFAULT_LABEL_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BuildTimes {
    pub graph: Duration,
    pub labels: Duration,
    pub mtree: Duration,
    pub rtree: Duration,
}

pub struct Artifacts {
    pub dataset: String,
    pub weight_variant: String,
    pub graph: RoadNetwork,
    pub labels: HubLabeling,
    pub mtree: MetricTree,
    pub rtree: RectTree,
    pub pois: Vec<VertexId>,
    /// Membership filter when the POIs are a strict subset of the vertices.
    pub poi_set: Option<PoiSet>,
    pub config: BuildConfig,
    pub times: BuildTimes,
}

/// Cache file locations for one dataset under a work directory.
#[derive(Debug, Clone)]
pub struct CachePaths {
    pub graph: PathBuf,
    pub labels: PathBuf,
    pub mtree: PathBuf,
}

impl CachePaths {
    pub fn new(work_dir: &Path, src: &DatasetSource, cfg: &BuildConfig) -> Self {
        let stem = src.slug();
        let order = cfg.order.name().replace(':', "-");
        Self {
            graph: work_dir.join(format!("{stem}.rnet")),
            labels: work_dir.join(format!("{stem}.{order}.hub")),
            mtree: work_dir.join(format!("{stem}.c{}.s{}.p{}.mtree", cfg.capacity, cfg.seed, cfg.poi_ratio)),
        }
    }
}

impl Artifacts {
    /// Builds everything in memory from a loaded graph.
    pub fn build(dataset: &str, weight_variant: &str, graph: RoadNetwork, cfg: BuildConfig) -> Result<Self> {
        let t = Instant::now();
        let labels = build_labels(&graph, &cfg)?;
        let label_time = t.elapsed();
        Self::assemble(dataset, weight_variant, graph, labels, None, cfg, BuildTimes { labels: label_time, ..Default::default() })
    }

    /// Loads cached artifacts from `work_dir` where present and valid,
    /// building and caching the rest.
    pub fn load_or_build(src: &DatasetSource, data_dir: &Path, work_dir: &Path, cfg: BuildConfig) -> Result<Self> {
        std::fs::create_dir_all(work_dir).with_context(|| format!("creating {}", work_dir.display()))?;
        let paths = CachePaths::new(work_dir, src, &cfg);
        let mut times = BuildTimes::default();

        let t = Instant::now();
        let graph = match RoadNetwork::load(&paths.graph) {
            Ok(g) => g,
            Err(_) => {
                let g = src.load(data_dir)?;
                g.save(&paths.graph)?;
                g
            }
        };
        times.graph = t.elapsed();

        let t = Instant::now();
        let labels = match HubLabeling::load(&paths.labels, &graph) {
            Ok(l) => l,
            Err(_) => {
                let l = build_labels(&graph, &cfg)?;
                l.save(&paths.labels)?;
                l
            }
        };
        times.labels = t.elapsed();

        let cached = MetricTree::load(&paths.mtree, graph.checksum())
            .ok()
            .filter(|(t, p)| p.oracle_id == labels.id() && t.capacity() == cfg.capacity)
            .map(|(t, _)| t);
        let fresh = cached.is_none();
        let arts = Self::assemble(&src.to_string(), src.weight_variant(), graph, labels, cached, cfg, times)?;
        if fresh {
            let provenance = TreeProvenance { graph_checksum: arts.graph.checksum(), oracle_id: arts.labels.id() };
            arts.mtree.save(&paths.mtree, &provenance)?;
        }
        Ok(arts)
    }

    fn assemble(
        dataset: &str,
        weight_variant: &str,
        graph: RoadNetwork,
        labels: HubLabeling,
        mtree: Option<MetricTree>,
        cfg: BuildConfig,
        mut times: BuildTimes,
    ) -> Result<Self> {
        let pois = sample_pois(&graph, cfg.poi_ratio, cfg.seed)?;
        let poi_set = (pois.len() < graph.num_vertices()).then(|| PoiSet::new(graph.num_vertices(), &pois));
        let t = Instant::now();
        let mtree = match mtree {
            Some(t) => t,
            None => MetricTreeBuilder::new().capacity(cfg.capacity).seed(cfg.seed).build(&pois, &labels)?,
        };
        times.mtree = t.elapsed();
        let t = Instant::now();
        let rtree = RectTree::build_with_capacity(&graph, &pois, cfg.capacity)?;
        times.rtree = t.elapsed();
        labels.reset_calls();
        Ok(Self {
            dataset: dataset.to_string(),
            weight_variant: weight_variant.to_string(),
            graph,
            labels,
            mtree,
            rtree,
            pois,
            poi_set,
            config: cfg,
            times,
        })
    }
}

pub fn build_labels(graph: &RoadNetwork, cfg: &BuildConfig) -> Result<HubLabeling> {
    Ok(HubLabelBuilder::default().order(cfg.order.clone()).memory_budget(cfg.label_budget).build(graph)?)
}
