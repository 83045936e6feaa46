//! Randomized small instances checked across the three engines.
//!
//! The exhaustive scan runs on plain Dijkstra distances, the M-tree search
//! on hub labels, so an agreement also cross-checks the two oracles.

use anyhow::Result;
use fann::baseline::{brute_force_fann, ier_fann_search, RectTree};
use fann::oracle::build_labels;
use fann::roadnet::synth::random_geometric;
use fann::search::PoiSet;
use fann::{
    fann_search, AggregateKind, DijkstraOracle, Dist, MetricTreeBuilder, OrderPolicy, QuerySpec,
    RoadNetwork, VertexId,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct InstanceSpace {
    pub max_vertices: usize,
    pub max_pois: usize,
    pub query_counts: std::ops::RangeInclusive<usize>,
    pub phis: Vec<f64>,
    pub ks: Vec<usize>,
    pub kinds: Vec<AggregateKind>,
    pub capacities: Vec<usize>,
}

impl Default for InstanceSpace {
    fn default() -> Self {
        Self {
            max_vertices: 500,
            max_pois: 200,
            query_counts: 2..=8,
            phis: vec![0.25, 0.5, 1.0],
            ks: vec![1, 3],
            kinds: AggregateKind::ALL.to_vec(),
            capacities: vec![3, 4, 8, 16, 64],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub graph: RoadNetwork,
    pub pois: Vec<VertexId>,
    pub queries: Vec<VertexId>,
    pub phi: f64,
    pub k: usize,
    pub kind: AggregateKind,
    pub capacity: usize,
}

impl InstanceSpace {
    pub fn sample(&self, seed: u64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(20..=self.max_vertices);
        let extra = rng.gen_range(0..=3);
        let graph = random_geometric(n, extra, rng.gen());
        let n = graph.num_vertices();
        let k = *self.ks.choose(&mut rng).expect("non-empty ks");
        let all: Vec<VertexId> = (0..n as VertexId).collect();
        let p = rng.gen_range(k.max(1)..=self.max_pois.min(n));
        let mut pois: Vec<VertexId> = all.choose_multiple(&mut rng, p).copied().collect();
        pois.sort_unstable();
        let m = rng.gen_range(self.query_counts.clone()).min(n);
        let queries = all.choose_multiple(&mut rng, m).copied().collect();
        Instance {
            seed,
            graph,
            pois,
            queries,
            phi: *self.phis.choose(&mut rng).expect("non-empty phis"),
            k,
            kind: *self.kinds.choose(&mut rng).expect("non-empty kinds"),
            capacity: *self.capacities.choose(&mut rng).expect("non-empty capacities"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceCheck {
    pub fann: Vec<Dist>,
    pub ier: Vec<Dist>,
    pub brute: Vec<Dist>,
}

impl InstanceCheck {
    pub fn agree(&self) -> bool {
        self.fann == self.brute && self.ier == self.brute
    }
}

pub fn check_instance(inst: &Instance) -> Result<InstanceCheck> {
    let g = &inst.graph;
    let labels = build_labels(g, OrderPolicy::Degree)?;
    let dijkstra = DijkstraOracle::new(g);
    let poi_set = PoiSet::new(g.num_vertices(), &inst.pois);
    let qs = QuerySpec::new(inst.queries.clone(), inst.phi, inst.k, inst.kind).with_pois(&poi_set);
    let tree = MetricTreeBuilder::new().capacity(inst.capacity).seed(inst.seed).build(&inst.pois, &labels)?;
    let rtree = RectTree::build_with_capacity(g, &inst.pois, inst.capacity)?;
    let (fann, _) = fann_search(&tree, &labels, &qs)?;
    let (ier, _) = ier_fann_search(&rtree, g, &labels, &qs)?;
    let brute = brute_force_fann(g, &dijkstra, &qs)?;
    Ok(InstanceCheck { fann: fann.values(), ier: ier.values(), brute: brute.values() })
}
