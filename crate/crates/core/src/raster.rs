//! Polygon rasterization by cell-center sampling.
//!
//! A cell is marked when its center lies inside a polygon under the even-odd
//! rule, or exactly on one of its edges. Rings of one polygon are combined
//! under even-odd, so interior rings act as holes; separate polygons are
//! unioned.

use serde::{Deserialize, Serialize};

use crate::geom::Point;
use crate::grid::{BinaryLayer, ConstraintCategory, GridError, GridSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub category: ConstraintCategory,
    /// Exterior ring first, then holes. Closing vertex optional.
    pub rings: Vec<Vec<Point>>,
}

impl Polygon {
    pub fn new(category: ConstraintCategory, exterior: Vec<Point>) -> Self {
        Polygon {
            category,
            rings: vec![exterior],
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.rings.is_empty() {
            return Err(GridError::DegeneratePolygon { distinct: 0 });
        }
        for ring in &self.rings {
            let distinct = distinct_vertices(ring);
            if distinct < 3 {
                return Err(GridError::DegeneratePolygon { distinct });
            }
            if ring.iter().any(|p| !p.is_finite()) {
                return Err(GridError::InvalidSpec("non-finite polygon vertex".into()));
            }
        }
        Ok(())
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.rings.iter().flat_map(|ring| {
            let n = ring.len();
            (0..n).map(move |k| (ring[k], ring[(k + 1) % n]))
        })
    }
}

fn distinct_vertices(ring: &[Point]) -> usize {
    let mut seen: Vec<Point> = Vec::with_capacity(ring.len());
    for p in ring {
        if !seen.contains(p) {
            seen.push(*p);
        }
    }
    seen.len()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolygonSet {
    pub polygons: Vec<Polygon>,
}

impl PolygonSet {
    pub fn new(polygons: Vec<Polygon>) -> Self {
        PolygonSet { polygons }
    }

    pub fn of_category(&self, category: ConstraintCategory) -> impl Iterator<Item = &Polygon> {
        self.polygons.iter().filter(move |p| p.category == category)
    }
}

/// Rasterizes every polygon of `category` in `polys` onto `spec`.
pub fn rasterize_polygons(
    spec: GridSpec,
    polys: &PolygonSet,
    category: ConstraintCategory,
) -> Result<BinaryLayer, GridError> {
    let mut layer = BinaryLayer::zeros(spec);
    for poly in polys.of_category(category) {
        poly.validate()?;
        fill_polygon(&spec, poly, &mut layer);
        mark_boundary(&spec, poly, &mut layer);
    }
    Ok(layer)
}

fn fill_polygon(spec: &GridSpec, poly: &Polygon, layer: &mut BinaryLayer) {
    let edges: Vec<(Point, Point)> = poly.edges().collect();
    let (ymin, ymax) = edges
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
            (lo.min(a.y).min(b.y), hi.max(a.y).max(b.y))
        });
    let Some((row_lo, row_hi)) = center_range(ymin, ymax, spec.origin_y, spec.cell_size, spec.n_rows) else {
        return;
    };

    let mut xs = Vec::new();
    for row in row_lo..=row_hi {
        let cy = spec.center_y(row);
        xs.clear();
        for &(a, b) in &edges {
            if (a.y > cy) != (b.y > cy) {
                xs.push((b.x - a.x) * (cy - a.y) / (b.y - a.y) + a.x);
            }
        }
        xs.sort_by(f64::total_cmp);
        // A center is inside iff an odd number of crossings lie strictly to
        // its right, i.e. xs[2k] <= cx < xs[2k+1].
        for pair in xs.chunks_exact(2) {
            let Some(first) = first_col_at_or_after(spec, pair[0]) else {
                continue;
            };
            let mut col = first;
            while col < spec.n_cols && spec.center_x(col) < pair[1] {
                layer.set_index(row * spec.n_cols + col);
                col += 1;
            }
        }
    }
}

fn mark_boundary(spec: &GridSpec, poly: &Polygon, layer: &mut BinaryLayer) {
    for (a, b) in poly.edges() {
        let Some((row_lo, row_hi)) =
            center_range(a.y.min(b.y), a.y.max(b.y), spec.origin_y, spec.cell_size, spec.n_rows)
        else {
            continue;
        };
        for row in row_lo..=row_hi {
            let cy = spec.center_y(row);
            let (lo, hi) = if a.y == b.y {
                (a.x.min(b.x), a.x.max(b.x))
            } else {
                let x = (b.x - a.x) * (cy - a.y) / (b.y - a.y) + a.x;
                (x, x)
            };
            let Some((col_lo, col_hi)) = center_range(lo, hi, spec.origin_x, spec.cell_size, spec.n_cols) else {
                continue;
            };
            let col_lo = col_lo.saturating_sub(1);
            let col_hi = (col_hi + 1).min(spec.n_cols - 1);
            for col in col_lo..=col_hi {
                let c = Point::new(spec.center_x(col), cy);
                if on_segment(a, b, c) {
                    layer.set_index(row * spec.n_cols + col);
                }
            }
        }
    }
}

/// Exact collinearity plus bounding-box test.
pub(crate) fn on_segment(a: Point, b: Point, p: Point) -> bool {
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    cross == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Inclusive index range of cells whose centers may fall inside `[lo, hi]`,
/// padded by one cell on either side, clamped to the grid.
fn center_range(lo: f64, hi: f64, origin: f64, size: f64, n: usize) -> Option<(usize, usize)> {
    let first = ((lo - origin) / size - 0.5).floor() - 1.0;
    let last = ((hi - origin) / size - 0.5).ceil() + 1.0;
    if last < 0.0 || first > (n - 1) as f64 {
        return None;
    }
    let first = first.max(0.0) as usize;
    let last = (last.min((n - 1) as f64)) as usize;
    Some((first, last))
}

fn first_col_at_or_after(spec: &GridSpec, x: f64) -> Option<usize> {
    let est = ((x - spec.origin_x) / spec.cell_size - 0.5).floor();
    let mut col = if est < 0.0 {
        0
    } else if est >= spec.n_cols as f64 {
        return None;
    } else {
        est as usize
    };
    while col > 0 && spec.center_x(col - 1) >= x {
        col -= 1;
    }
    while col < spec.n_cols && spec.center_x(col) < x {
        col += 1;
    }
    (col < spec.n_cols).then_some(col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;

    const CAT: ConstraintCategory = ConstraintCategory::DangerZone;

    fn spec() -> GridSpec {
        GridSpec::new(0.0, 0.0, 100.0, 10, 10).unwrap()
    }

    fn square(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point> {
        vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ]
    }

    #[test]
    fn axis_aligned_square_covers_four_cells() {
        let set = PolygonSet::new(vec![Polygon::new(CAT, square(0.0, 0.0, 200.0, 200.0))]);
        let layer = rasterize_polygons(spec(), &set, CAT).unwrap();
        assert_eq!(layer.count_ones(), 4);
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!(layer.get(Cell::new(r, c)));
        }
    }

    #[test]
    fn sub_cell_polygon_between_centers_is_empty() {
        let set = PolygonSet::new(vec![Polygon::new(CAT, square(60.0, 60.0, 140.0, 140.0))]);
        let layer = rasterize_polygons(spec(), &set, CAT).unwrap();
        assert_eq!(layer.count_ones(), 0);
    }

    #[test]
    fn centers_on_edges_count_as_inside() {
        // Edges pass exactly through the centers of rows/cols 1 and 3.
        let set = PolygonSet::new(vec![Polygon::new(CAT, square(150.0, 150.0, 350.0, 350.0))]);
        let layer = rasterize_polygons(spec(), &set, CAT).unwrap();
        assert_eq!(layer.count_ones(), 9);
        assert!(layer.get(Cell::new(1, 1)));
        assert!(layer.get(Cell::new(3, 3)));
    }

    #[test]
    fn vertex_on_center_counts_as_inside() {
        let tri = vec![
            Point::new(50.0, 50.0),
            Point::new(450.0, 50.0),
            Point::new(250.0, 450.0),
        ];
        let set = PolygonSet::new(vec![Polygon::new(CAT, tri)]);
        let layer = rasterize_polygons(spec(), &set, CAT).unwrap();
        assert!(layer.get(Cell::new(4, 2)));
        assert!(layer.get(Cell::new(0, 0)));
        assert!(layer.get(Cell::new(0, 4)));
    }

    #[test]
    fn holes_are_excluded() {
        let mut poly = Polygon::new(CAT, square(0.0, 0.0, 1000.0, 1000.0));
        poly.rings.push(square(210.0, 210.0, 390.0, 390.0));
        let layer = rasterize_polygons(spec(), &PolygonSet::new(vec![poly]), CAT).unwrap();
        assert_eq!(layer.count_ones(), 96);
        assert!(!layer.get(Cell::new(2, 2)));
        assert!(!layer.get(Cell::new(3, 3)));
    }

    #[test]
    fn other_categories_ignored() {
        let set = PolygonSet::new(vec![Polygon::new(
            ConstraintCategory::AlertArea,
            square(0.0, 0.0, 1000.0, 1000.0),
        )]);
        let layer = rasterize_polygons(spec(), &set, CAT).unwrap();
        assert_eq!(layer.count_ones(), 0);
    }

    #[test]
    fn polygon_partly_outside_grid_is_clipped() {
        let set = PolygonSet::new(vec![Polygon::new(CAT, square(-500.0, -500.0, 120.0, 2000.0))]);
        let layer = rasterize_polygons(spec(), &set, CAT).unwrap();
        assert_eq!(layer.count_ones(), 10);
    }

    #[test]
    fn degenerate_polygon_rejected() {
        let ring = vec![Point::new(0.0, 0.0), Point::new(100.0, 0.0), Point::new(0.0, 0.0)];
        let set = PolygonSet::new(vec![Polygon::new(CAT, ring)]);
        assert_eq!(
            rasterize_polygons(spec(), &set, CAT).unwrap_err(),
            GridError::DegeneratePolygon { distinct: 2 }
        );
    }

    #[test]
    fn explicit_closing_vertex_is_harmless() {
        let mut ring = square(0.0, 0.0, 200.0, 200.0);
        ring.push(ring[0]);
        let set = PolygonSet::new(vec![Polygon::new(CAT, ring)]);
        assert_eq!(rasterize_polygons(spec(), &set, CAT).unwrap().count_ones(), 4);
    }

    #[test]
    fn rasterization_is_idempotent() {
        let ring = vec![
            Point::new(13.0, 7.0),
            Point::new(870.0, 140.0),
            Point::new(450.0, 930.0),
            Point::new(300.0, 420.0),
        ];
        let set = PolygonSet::new(vec![Polygon::new(CAT, ring)]);
        let a = rasterize_polygons(spec(), &set, CAT).unwrap();
        let b = rasterize_polygons(spec(), &set, CAT).unwrap();
        assert_eq!(a, b);
    }
}
