//! Reference implementations and reference tables shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::path::PathBuf;

use vertisite::alt_filter::AltNode;
use vertisite::geom::Point;
use vertisite::grid::{Cell, GridSpec};
use vertisite::raster::Polygon;
use vertisite::reachability::NavGrid;

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

pub fn fixture_manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/gyeonggi/manifest.json")
}

// Scored parks: raw travel time, raw OD, and printed scaled/score columns.
pub const PARK_NAMES: [&str; 5] = [
    "A(Banwol)",
    "B(Sihwa)",
    "C(Asan Wojeong)",
    "D(Yongin)",
    "E(Paju Publishing)",
];
pub const PARK_TIME: [f64; 5] = [71.696, 60.89, 131.452, 72.081, 73.346];
pub const PARK_OD: [f64; 5] = [1107.0, 3788.0, 80.0, 44.0, 199.0];
pub const PARK_SCALED_TIME: [f64; 5] = [0.15314, 0.0, 1.0, 0.158603, 0.176523];
pub const PARK_SCALED_OD: [f64; 5] = [0.283921, 1.0, 0.009615, 0.0, 0.0414];
pub const PARK_SCORE: [f64; 5] = [0.21853, 0.5, 0.504808, 0.079301, 0.108961];

/// Ranked candidates in printed order: (name, numBus, printed sum, printed score).
pub const CANDIDATES: [(&str, u32, f64, f64); 54] = [
    ("E.Gunpo T", 213, 0.71853, 153.04),
    ("Guseong E", 478, 0.297831, 142.36),
    ("Dongcheon E", 477, 0.297831, 142.06),
    ("Gunja T", 190, 0.71853, 136.52),
    ("Ansan R", 125, 0.71853, 89.81),
    ("Siheung T", 101, 0.71853, 72.57),
    ("Jukjeon (S) R", 241, 0.297831, 71.77),
    ("Mado T", 54, 1.223338, 66.06),
    ("Songsan Mado T", 54, 1.223338, 66.06),
    ("Joam T", 54, 1.223338, 66.06),
    ("Hwaseong (M) R", 53, 1.223338, 64.83),
    ("Hwaseong (S) R", 53, 1.223338, 64.83),
    ("N.Suwon T", 81, 0.797831, 64.62),
    ("W.Seoul T", 75, 0.71853, 53.88),
    ("W.Ansan T", 67, 0.71853, 48.14),
    ("Siheung Sky R", 61, 0.71853, 43.83),
    ("W.Siheung T", 49, 0.71853, 35.20),
    ("Geumjeong E", 34, 0.71853, 24.43),
    ("Anseong (S) R", 292, 0.079301, 23.15),
    ("Maesong T", 17, 1.223338, 20.79),
    ("Uiwang T", 23, 0.797831, 18.35),
    ("Icheon (N) R", 174, 0.079301, 13.79),
    ("Icheon (H) R", 174, 0.079301, 13.79),
    ("Bugok T", 17, 0.797831, 13.56),
    ("S.Incheon T", 17, 0.71853, 12.21),
    ("New Airport T", 17, 0.608961, 10.35),
    ("Yeongjong Br. R", 17, 0.608961, 10.35),
    ("Anseong T", 65, 0.079301, 5.15),
    ("Gonjiam T", 63, 0.079301, 4.99),
    ("W.Suji T", 16, 0.297831, 4.76),
    ("S.Anseong T", 5, 0.71853, 3.59),
    ("Balan T", 3, 0.723338, 2.17),
    ("W.Anseong T", 24, 0.079301, 1.90),
    ("Cheongbuk T", 2, 0.723338, 1.44),
    ("Anseong (M.P) R", 16, 0.079301, 1.26),
    ("Bibong T", 1, 1.223338, 1.22),
    ("Anseong (M.J) R", 11, 0.079301, 0.87),
    ("S.Anseong T", 3, 0.237903, 0.23),
    ("W.Icheon T", 3, 0.237903, 0.23),
    ("Goyang T", 0, 0.108961, 0.00),
    ("S.Gwang myeong T", 0, 0.71853, 0.00),
    ("S.Gunpo T", 0, 0.71853, 0.00),
    ("S.Bibong T", 0, 1.223338, 0.00),
    ("Docheok T", 0, 0.079301, 0.00),
    ("Dongtan T", 0, 0.079301, 0.00),
    ("Munhak Tunnel T", 0, 0.71853, 0.00),
    ("Mulwang T", 0, 0.71853, 0.00),
    ("W.Yongin T", 0, 0.079301, 0.00),
    ("Shihwa T", 0, 0.71853, 0.00),
    ("Yeonseong T", 0, 0.71853, 0.00),
    ("Ilsan Br. T", 0, 0.108961, 0.00),
    ("Jungri T", 0, 0.079301, 0.00),
    ("Cheongna T", 0, 0.608961, 0.00),
    ("Hwaseong T", 0, 1.223338, 0.00),
];

/// Stable ids in printed order; the name "S.Anseong T" appears twice.
pub fn candidate_id(i: usize) -> String {
    format!("c{:02}", i + 1)
}

/// Even-odd point-in-polygon by ray crossing, with points on an edge
/// counted as inside.
pub fn brute_inside(poly: &Polygon, p: Point) -> bool {
    let mut inside = false;
    for ring in &poly.rings {
        let n = ring.len();
        for k in 0..n {
            let a = ring[k];
            let b = ring[(k + 1) % n];
            if on_edge(a, b, p) {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

fn on_edge(a: Point, b: Point, p: Point) -> bool {
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    cross == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Cells whose centers fall in any of `polys`.
pub fn brute_raster(spec: &GridSpec, polys: &[Polygon]) -> Vec<u8> {
    let mut out = vec![0u8; spec.n_rows * spec.n_cols];
    for r in 0..spec.n_rows {
        for c in 0..spec.n_cols {
            let p = Point::new(spec.center_x(c), spec.center_y(r));
            if polys.iter().any(|poly| brute_inside(poly, p)) {
                out[r * spec.n_cols + c] = 1;
            }
        }
    }
    out
}

/// Nodes within the closed ball, sorted by id.
pub fn linear_radius(nodes: &[AltNode], center: Point, r: f64) -> Vec<String> {
    let mut ids: Vec<String> = nodes
        .iter()
        .filter(|n| {
            let dx = n.position.x - center.x;
            let dy = n.position.y - center.y;
            dx * dx + dy * dy <= r * r
        })
        .map(|n| n.id.clone())
        .collect();
    ids.sort();
    ids
}

#[derive(PartialEq)]
struct Entry(f64, usize);
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Single-source Dijkstra in cell units: 8-connected, diagonal allowed only
/// when both orthogonal neighbours are free. Blocked sources give all-inf.
pub fn dijkstra_all(grid: &NavGrid, start: Cell) -> Vec<f64> {
    let spec = grid.spec();
    let (w, h) = (spec.n_cols as i64, spec.n_rows as i64);
    let mut dist = vec![f64::INFINITY; spec.n_rows * spec.n_cols];
    let free =
        |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && !grid.is_blocked(Cell::new(y as usize, x as usize));
    if !free(start.col as i64, start.row as i64) {
        return dist;
    }
    let idx = |x: i64, y: i64| (y * w + x) as usize;
    let s = idx(start.col as i64, start.row as i64);
    dist[s] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Entry(0.0, s));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        let (x, y) = ((u as i64) % w, (u as i64) / w);
        for dx in -1..=1i64 {
            for dy in -1..=1i64 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x + dx, y + dy);
                if !free(nx, ny) {
                    continue;
                }
                let cost = if dx != 0 && dy != 0 {
                    if !free(x + dx, y) || !free(x, y + dy) {
                        continue;
                    }
                    SQRT_2
                } else {
                    1.0
                };
                let v = idx(nx, ny);
                if d + cost < dist[v] {
                    dist[v] = d + cost;
                    heap.push(Entry(d + cost, v));
                }
            }
        }
    }
    dist
}

pub fn dijkstra(grid: &NavGrid, start: Cell, goal: Cell) -> Option<f64> {
    let d = dijkstra_all(grid, start)[grid.spec().index(goal)];
    d.is_finite().then_some(d)
}

/// Random blocked grid with the given density; deterministic in `seed`.
pub fn random_grid(seed: u64, cols: usize, rows: usize, density: f64) -> NavGrid {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let spec = GridSpec::new(0.0, 0.0, 1.0, cols, rows).unwrap();
    let blocked = (0..cols * rows).map(|_| rng.gen_bool(density)).collect();
    NavGrid::from_blocked(spec, blocked).unwrap()
}

/// Path validity: endpoints, free cells, 8-neighbour steps, no corner cuts.
pub fn check_path(grid: &NavGrid, cells: &[Cell], start: Cell, goal: Cell) -> Result<f64, String> {
    if cells.first() != Some(&start) || cells.last() != Some(&goal) {
        return Err("path endpoints differ from start/goal".into());
    }
    let mut len = 0.0;
    for c in cells {
        if grid.is_blocked(*c) {
            return Err(format!("path crosses blocked cell {c}"));
        }
    }
    for w in cells.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dx = b.col as i64 - a.col as i64;
        let dy = b.row as i64 - a.row as i64;
        if dx.abs() > 1 || dy.abs() > 1 || (dx == 0 && dy == 0) {
            return Err(format!("non-adjacent step {a} -> {b}"));
        }
        if dx != 0 && dy != 0 {
            let side1 = Cell::new(a.row, b.col);
            let side2 = Cell::new(b.row, a.col);
            if grid.is_blocked(side1) || grid.is_blocked(side2) {
                return Err(format!("corner cut at {a} -> {b}"));
            }
            len += SQRT_2;
        } else {
            len += 1.0;
        }
    }
    Ok(len)
}
