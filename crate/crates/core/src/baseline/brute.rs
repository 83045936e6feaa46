//! Exhaustive scan: the exact aggregate of every POI.

use crate::agg::{flexible_agg, flexible_agg_bruteforce};
use crate::oracle::DistanceOracle;
use crate::roadnet::RoadNetwork;
use crate::search::{Candidate, QuerySpec, ResultSet};
use crate::{Dist, Error, Result, VertexId};

/// Largest POI set the scan accepts.
pub const BRUTE_FORCE_LIMIT: usize = 100_000;

/// Subset enumeration replaces the order-statistic kernel up to this many queries.
const ENUMERATE_UP_TO: usize = 12;

/// Exact top-k by scoring every POI. The POI set is `qs.pois`, or every
/// vertex of `g` when unset.
pub fn brute_force_fann<O: DistanceOracle>(g: &RoadNetwork, oracle: &O, qs: &QuerySpec<'_>) -> Result<ResultSet> {
    let flex = qs.flex()?;
    let pois: Vec<VertexId> = match qs.pois {
        Some(p) => p.ids(),
        None => (0..g.num_vertices() as VertexId).collect(),
    };
    if pois.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::ScanGuard { len: pois.len(), limit: BRUTE_FORCE_LIMIT });
    }
    if pois.len() < qs.k {
        return Err(Error::NotEnoughPois { k: qs.k, available: pois.len() });
    }
    let mut results = ResultSet::new(qs.k);
    let mut dists: Vec<Dist> = Vec::with_capacity(qs.queries.len());
    for p in pois {
        dists.clear();
        dists.extend(qs.queries.iter().map(|&q| oracle.dist(p, q)));
        let agg = flexible_agg(&dists, qs.kind, flex.m)?;
        let g_phi = if dists.len() <= ENUMERATE_UP_TO {
            let enumerated = flexible_agg_bruteforce(&dists, qs.kind, flex.m)?;
            debug_assert_eq!(enumerated, agg.value);
            enumerated
        } else {
            agg.value
        };
        results.offer(Candidate { oid: p, g_phi, subset: agg.subset });
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::PoiSet;
    use crate::{AggregateKind, DijkstraOracle};

    fn path() -> RoadNetwork {
        RoadNetwork::from_edges(vec![[0, 0], [1, 0], [2, 0], [3, 0]], [(0, 1, 2), (1, 2, 3), (2, 3, 1)]).unwrap()
    }

    #[test]
    fn single_poi_is_the_answer() {
        let g = path();
        let o = DijkstraOracle::new(&g);
        let pois = PoiSet::new(4, &[2]);
        let qs = QuerySpec::new(vec![0, 3], 1.0, 1, AggregateKind::Sum).with_pois(&pois);
        let r = brute_force_fann(&g, &o, &qs).unwrap();
        assert_eq!(r.oids(), vec![2]);
        assert_eq!(r.values(), vec![6]);
    }

    #[test]
    fn flexible_subset_picks_nearest_query() {
        let g = path();
        let o = DijkstraOracle::new(&g);
        // phi = 0.5 over two queries: best object sits on a query vertex
        let qs = QuerySpec::new(vec![0, 3], 0.5, 2, AggregateKind::Max);
        let r = brute_force_fann(&g, &o, &qs).unwrap();
        assert_eq!(r.values(), vec![0, 0]);
        assert_eq!(r.oids(), vec![0, 3]);
        assert_eq!(r.candidates()[0].subset, vec![0]);
        assert_eq!(r.candidates()[1].subset, vec![1]);
    }

    #[test]
    fn too_few_pois() {
        let g = path();
        let o = DijkstraOracle::new(&g);
        let pois = PoiSet::new(4, &[1]);
        let qs = QuerySpec::new(vec![0], 1.0, 2, AggregateKind::Max).with_pois(&pois);
        assert!(matches!(brute_force_fann(&g, &o, &qs), Err(Error::NotEnoughPois { k: 2, available: 1 })));
    }
}
