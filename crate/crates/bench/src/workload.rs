//! Query workloads: query points drawn from a square region of the map.

use anyhow::{bail, ensure, Result};
use fann::{RoadNetwork, VertexId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Center resamples before giving up on a region too sparse for `M` points.
pub const MAX_CENTER_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryWorkload {
    pub queries: Vec<VertexId>,
    pub seed: u64,
    pub center: VertexId,
    /// Query region `[min_x, min_y, max_x, max_y]` after clipping.
    pub region: [i64; 4],
    /// Side of the unclipped square.
    pub side: f64,
}

/// Side of the square whose area is `coverage` times the bounding-box area.
pub fn region_side(bbox: [i64; 4], coverage: f64) -> f64 {
    let w = (bbox[2] - bbox[0]) as f64;
    let h = (bbox[3] - bbox[1]) as f64;
    (coverage * w * h).sqrt()
}

/// Draws `m` distinct query vertices uniformly from an axis-aligned square
/// centered on a random vertex, with area `coverage` times the bounding box
/// and clipped to it. Deterministic in `seed`.
pub fn gen_queries(g: &RoadNetwork, m: usize, coverage: f64, seed: u64) -> Result<QueryWorkload> {
    ensure!(coverage > 0.0 && coverage <= 1.0, "coverage {coverage} outside (0, 1]");
    ensure!(m >= 1, "query count must be at least 1");
    ensure!(m <= g.num_vertices(), "query count {m} exceeds the {} vertices", g.num_vertices());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bbox = g.bbox();
    let side = region_side(bbox, coverage);
    // a full-coverage square, centered anywhere, clips to the whole box
    let half = if coverage >= 1.0 { f64::INFINITY } else { side / 2.0 };
    for _ in 0..MAX_CENTER_ATTEMPTS {
        let center = rng.gen_range(0..g.num_vertices()) as VertexId;
        let [cx, cy] = g.coord(center);
        let clip = |c: i64, lo: i64, hi: i64, sign: f64| {
            let edge = c as f64 + sign * half;
            if edge.is_finite() { (edge.round() as i64).clamp(lo, hi) } else if sign < 0.0 { lo } else { hi }
        };
        let region = [
            clip(cx, bbox[0], bbox[2], -1.0),
            clip(cy, bbox[1], bbox[3], -1.0),
            clip(cx, bbox[0], bbox[2], 1.0),
            clip(cy, bbox[1], bbox[3], 1.0),
        ];
        let inside: Vec<VertexId> = (0..g.num_vertices() as VertexId)
            .filter(|&v| {
                let [x, y] = g.coord(v);
                region[0] <= x && x <= region[2] && region[1] <= y && y <= region[3]
            })
            .collect();
        if inside.len() >= m {
            let queries = inside.choose_multiple(&mut rng, m).copied().collect();
            return Ok(QueryWorkload { queries, seed, center, region, side });
        }
    }
    bail!("no region with coverage {coverage} holds {m} vertices after {MAX_CENTER_ATTEMPTS} attempts")
}

/// POI set: every vertex when `ratio >= 1`, else a seeded uniform sample.
pub fn sample_pois(g: &RoadNetwork, ratio: f64, seed: u64) -> Result<Vec<VertexId>> {
    ensure!(ratio > 0.0 && ratio <= 1.0, "POI ratio {ratio} outside (0, 1]");
    let n = g.num_vertices();
    if ratio >= 1.0 {
        return Ok((0..n as VertexId).collect());
    }
    let take = ((n as f64 * ratio).round() as usize).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<VertexId> = (0..n as VertexId).collect();
    let mut pois: Vec<VertexId> = all.choose_multiple(&mut rng, take).copied().collect();
    pois.sort_unstable();
    Ok(pois)
}

/// Mixes a base seed with cell and trial coordinates (SplitMix64 finalizer).
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(base, |acc, &p| {
        let mut z = acc ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(acc << 6).wrapping_add(acc >> 2);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}
