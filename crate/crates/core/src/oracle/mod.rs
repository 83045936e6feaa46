//! Exact shortest-path distance oracles.
//!
//! Everything above this layer sees the network only through
//! [`DistanceOracle::dist`]. Two interchangeable implementations exist:
//! point-to-point Dijkstra with early exit, and a 2-hop hub labeling built by
//! pruned Dijkstra searches.

mod dijkstra;
mod hub;

pub use dijkstra::{dijkstra_dist, single_source, DijkstraOracle};
pub use hub::{build_labels, HubLabelBuilder, DEFAULT_LABEL_BUDGET, HubLabeling, LabelStats, OrderPolicy};

use crate::{Dist, VertexId};

pub trait DistanceOracle: Send + Sync {
    /// Exact network distance between `u` and `v`.
    fn dist(&self, u: VertexId, v: VertexId) -> Dist;

    /// Number of `dist` calls answered so far.
    fn calls(&self) -> u64;

    fn reset_calls(&self);

    /// Short identifier recorded in persisted indexes and bench metadata.
    fn id(&self) -> String;
}

impl<T: DistanceOracle + ?Sized> DistanceOracle for &T {
    fn dist(&self, u: VertexId, v: VertexId) -> Dist {
        (**self).dist(u, v)
    }

    fn calls(&self) -> u64 {
        (**self).calls()
    }

    fn reset_calls(&self) {
        (**self).reset_calls()
    }

    fn id(&self) -> String {
        (**self).id()
    }
}

/// A metric-axiom violation found by [`audit_metric`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricViolation {
    Identity { v: VertexId, d: Dist },
    Symmetry { u: VertexId, v: VertexId, forward: Dist, backward: Dist },
    Triangle { a: VertexId, b: VertexId, c: VertexId },
}

/// Samples `samples` random triples and checks identity, symmetry and the
/// triangle inequality.
pub fn audit_metric<O: DistanceOracle>(
    oracle: &O,
    n: usize,
    samples: usize,
    seed: u64,
) -> Vec<MetricViolation> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..samples {
        let a = rng.gen_range(0..n) as VertexId;
        let b = rng.gen_range(0..n) as VertexId;
        let c = rng.gen_range(0..n) as VertexId;
        let self_d = oracle.dist(a, a);
        if self_d != 0 {
            out.push(MetricViolation::Identity { v: a, d: self_d });
        }
        let (ab, ba) = (oracle.dist(a, b), oracle.dist(b, a));
        if ab != ba {
            out.push(MetricViolation::Symmetry { u: a, v: b, forward: ab, backward: ba });
        }
        if oracle.dist(a, c) > ab.saturating_add(oracle.dist(b, c)) {
            out.push(MetricViolation::Triangle { a, b, c });
        }
    }
    out
}
