//! Seeded synthetic road-like networks for tests and desk-scale experiments.
//!
//! Edge weights are Euclidean lengths stretched by a random detour factor in
//! `[1, 1.4)`, like physical road lengths, so coordinates give a sound lower bound.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{coord_dist, RoadNetwork};
use crate::VertexId;

const GRID_SPACING: i64 = 1_000;

fn road_weight(rng: &mut ChaCha8Rng, a: [i64; 2], b: [i64; 2]) -> u32 {
    let stretch = rng.gen_range(1.0..1.4);
    (coord_dist(a, b) * stretch).ceil().max(1.0) as u32
}

/// A `side x side` jittered grid with a few missing streets and diagonal
/// shortcuts. Always connected.
pub fn grid_network(side: usize, seed: u64) -> RoadNetwork {
    assert!(side >= 2, "grid side must be at least 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |r: usize, c: usize| (r * side + c) as VertexId;
    let jitter = GRID_SPACING / 3;
    let coords: Vec<[i64; 2]> = (0..side * side)
        .map(|i| {
            let (r, c) = ((i / side) as i64, (i % side) as i64);
            [
                c * GRID_SPACING + rng.gen_range(-jitter..=jitter),
                r * GRID_SPACING + rng.gen_range(-jitter..=jitter),
            ]
        })
        .collect();

    let mut edges = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let u = id(r, c);
            // the first row and column are always kept so the grid stays connected
            if c + 1 < side && (r == 0 || rng.gen_bool(0.85)) {
                edges.push((u, id(r, c + 1)));
            }
            if r + 1 < side && (c == 0 || rng.gen_bool(0.85)) {
                edges.push((u, id(r + 1, c)));
            }
            if r + 1 < side && c + 1 < side && rng.gen_bool(0.08) {
                edges.push((u, id(r + 1, c + 1)));
            }
        }
    }
    let weighted: Vec<_> = edges
        .into_iter()
        .map(|(u, v)| (u, v, road_weight(&mut rng, coords[u as usize], coords[v as usize])))
        .collect();
    let g = RoadNetwork::from_edges(coords, weighted).expect("synthetic ids are in range");
    // dropped streets can strand interior vertices
    g.preprocess().expect("grid is non-empty")
}

/// `n` random points in a square, each joined to its nearest earlier point
/// (a spanning tree) plus `extra` of its nearest neighbors overall.
pub fn random_geometric(n: usize, extra: usize, seed: u64) -> RoadNetwork {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = (n as f64).sqrt().ceil() as i64 * GRID_SPACING;
    let coords: Vec<[i64; 2]> =
        (0..n).map(|_| [rng.gen_range(0..span), rng.gen_range(0..span)]).collect();
    let mut edges = Vec::new();
    for i in 1..n {
        let nearest = (0..i)
            .min_by(|&a, &b| {
                coord_dist(coords[i], coords[a]).total_cmp(&coord_dist(coords[i], coords[b]))
            })
            .expect("i >= 1");
        edges.push((i as VertexId, nearest as VertexId));
    }
    if extra > 0 {
        for i in 0..n {
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| {
                coord_dist(coords[i], coords[a]).total_cmp(&coord_dist(coords[i], coords[b]))
            });
            for &j in order.iter().take(extra) {
                edges.push((i as VertexId, j as VertexId));
            }
        }
    }
    edges.shuffle(&mut rng);
    let weighted: Vec<_> = edges
        .into_iter()
        .map(|(u, v)| (u, v, road_weight(&mut rng, coords[u as usize], coords[v as usize])))
        .collect();
    RoadNetwork::from_edges(coords, weighted).expect("synthetic ids are in range")
}

/// A water barrier: the band `|nx * x + ny * y - c| < half_width`.
struct River {
    nx: f64,
    ny: f64,
    c: f64,
    half_width: f64,
}

impl River {
    fn side(&self, p: [i64; 2]) -> f64 {
        self.nx * p[0] as f64 + self.ny * p[1] as f64 - self.c
    }
}

/// Metropolitan-style network of about `n` vertices: dense urban cores over
/// a sparse background, cut by three rivers that only a few bridges cross.
/// Vertices join their four nearest neighbors on the same bank; farther
/// neighbors and river crossings are added only where they join otherwise
/// separate pieces, plus a 3% sprinkling of extra bridges. Returns the
/// largest connected component.
pub fn metro_network(n: usize, seed: u64) -> RoadNetwork {
    assert!(n >= 16, "metro network needs at least 16 vertices");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = (n as f64).sqrt() * GRID_SPACING as f64;
    let rivers: Vec<River> = (0..3)
        .map(|_| {
            let angle = rng.gen_range(0.0..std::f64::consts::PI);
            let (nx, ny) = (angle.cos(), angle.sin());
            let through = [rng.gen_range(0.25..0.75) * span, rng.gen_range(0.25..0.75) * span];
            River { nx, ny, c: nx * through[0] + ny * through[1], half_width: span / 150.0 }
        })
        .collect();
    let cores: Vec<([f64; 2], f64)> = (0..4)
        .map(|_| {
            let c = [rng.gen_range(0.2..0.8) * span, rng.gen_range(0.2..0.8) * span];
            (c, rng.gen_range(0.05..0.12) * span)
        })
        .collect();
    let mut coords: Vec<[i64; 2]> = Vec::with_capacity(n);
    while coords.len() < n {
        let p = if rng.gen_bool(0.55) {
            let (c, sigma) = cores[rng.gen_range(0..cores.len())];
            // Box-Muller
            let (u1, u2): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
            let r = sigma * (-2.0 * u1.ln()).sqrt();
            let t = std::f64::consts::TAU * u2;
            [c[0] + r * t.cos(), c[1] + r * t.sin()]
        } else {
            [rng.gen_range(0.0..span), rng.gen_range(0.0..span)]
        };
        if !(0.0..span).contains(&p[0]) || !(0.0..span).contains(&p[1]) {
            continue;
        }
        let p = [p[0] as i64, p[1] as i64];
        if rivers.iter().any(|r| r.side(p).abs() < r.half_width) {
            continue;
        }
        coords.push(p);
    }

    let crosses =
        |a: usize, b: usize| rivers.iter().any(|r| r.side(coords[a]).signum() != r.side(coords[b]).signum());
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut edges = Vec::new();
    let mut spare = Vec::new();
    let mut bridges = Vec::new();
    for (i, nbrs) in nearest_neighbors(&coords, 8).into_iter().enumerate() {
        for (rank, j) in nbrs.into_iter().enumerate() {
            if crosses(i, j) {
                bridges.push((i, j));
            } else if rank < 4 {
                edges.push((i, j));
            } else {
                spare.push((i, j));
            }
        }
    }
    for &(a, b) in &edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    // Farther neighbors only mend land fragments; bridges beyond the ones
    // needed to join the banks are rare.
    bridges.shuffle(&mut rng);
    for (a, b) in spare.into_iter().chain(bridges.iter().copied()) {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            edges.push((a, b));
        } else if crosses(a, b) && rng.gen_bool(0.03) {
            edges.push((a, b));
        }
    }
    let edges: Vec<(VertexId, VertexId)> = edges.into_iter().map(|(a, b)| (a as VertexId, b as VertexId)).collect();
    let weighted: Vec<_> = edges
        .into_iter()
        .map(|(u, v)| (u, v, road_weight(&mut rng, coords[u as usize], coords[v as usize])))
        .collect();
    let g = RoadNetwork::from_edges(coords, weighted).expect("synthetic ids are in range");
    g.preprocess().expect("metro network is non-empty")
}

/// The `k` nearest other points of every point, via a uniform bucket grid.
fn nearest_neighbors(coords: &[[i64; 2]], k: usize) -> Vec<Vec<usize>> {
    let n = coords.len();
    let (min_x, min_y) = coords.iter().fold((i64::MAX, i64::MAX), |(a, b), p| (a.min(p[0]), b.min(p[1])));
    let (max_x, max_y) = coords.iter().fold((i64::MIN, i64::MIN), |(a, b), p| (a.max(p[0]), b.max(p[1])));
    let side = ((n as f64).sqrt().ceil() as usize).max(1);
    let cell_w = (((max_x - min_x) as f64 / side as f64).ceil() as i64).max(1);
    let cell_h = (((max_y - min_y) as f64 / side as f64).ceil() as i64).max(1);
    let cell_of = |p: [i64; 2]| {
        (
            (((p[0] - min_x) / cell_w) as usize).min(side - 1),
            (((p[1] - min_y) / cell_h) as usize).min(side - 1),
        )
    };
    let mut buckets = vec![Vec::new(); side * side];
    for (i, &p) in coords.iter().enumerate() {
        let (cx, cy) = cell_of(p);
        buckets[cy * side + cx].push(i);
    }
    let mut out = Vec::with_capacity(n);
    let mut best: Vec<(f64, usize)> = Vec::new();
    for (i, &p) in coords.iter().enumerate() {
        let (cx, cy) = cell_of(p);
        best.clear();
        for ring in 0..side {
            let (lo_x, hi_x) = (cx.saturating_sub(ring), (cx + ring).min(side - 1));
            let (lo_y, hi_y) = (cy.saturating_sub(ring), (cy + ring).min(side - 1));
            for y in lo_y..=hi_y {
                for x in lo_x..=hi_x {
                    let on_ring = x == lo_x || x == hi_x || y == lo_y || y == hi_y;
                    if !on_ring || (ring > 0 && x.abs_diff(cx) < ring && y.abs_diff(cy) < ring) {
                        continue;
                    }
                    for &j in &buckets[y * side + x] {
                        if j != i {
                            best.push((coord_dist(p, coords[j]), j));
                        }
                    }
                }
            }
            best.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            best.truncate(k);
            // points beyond this ring are at least `ring` cells away
            let reach = ring as f64 * cell_w.min(cell_h) as f64;
            if best.len() == k && best[k - 1].0 <= reach {
                break;
            }
        }
        out.push(best.iter().map(|b| b.1).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_connected_and_deterministic() {
        let a = grid_network(20, 5);
        assert!(a.is_connected());
        assert_eq!(a, grid_network(20, 5));
        let b = random_geometric(300, 2, 5);
        assert!(b.is_connected());
        assert_eq!(b.num_vertices(), 300);
        assert!(a.audit_euclid_scale_edges().is_empty());
        assert!(b.euclid_scale() >= 1.0);
    }

    #[test]
    fn metro_network_is_connected_and_sound() {
        let g = metro_network(3_000, 2);
        assert!(g.is_connected());
        assert!(g.num_vertices() > 2_900, "largest component keeps almost every vertex");
        assert!(g.audit_euclid_scale_edges().is_empty());
        assert_eq!(g, metro_network(3_000, 2));
    }

    #[test]
    fn bucket_knn_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let coords: Vec<[i64; 2]> = (0..400).map(|_| [rng.gen_range(0..5_000), rng.gen_range(0..20_000)]).collect();
        let fast = nearest_neighbors(&coords, 4);
        for (i, got) in fast.iter().enumerate() {
            let mut all: Vec<(f64, usize)> =
                (0..coords.len()).filter(|&j| j != i).map(|j| (coord_dist(coords[i], coords[j]), j)).collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let want: Vec<usize> = all.iter().take(4).map(|a| a.1).collect();
            assert_eq!(got, &want, "point {i}");
        }
    }
}
