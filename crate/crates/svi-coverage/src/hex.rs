//! Planar flat-top hexagonal grid with axial coordinates.
//!
//! A lightweight stand-in for a hierarchical DGGS: two named levels share
//! the same math at different edge lengths. Cell ids are abstract (q, r)
//! pairs so an external geodesic grid adapter can be layered on top without
//! touching the analysis code.

use crate::geometry::{point_segment_distance, Point2};

/// Default edge length of the coarse management level, meters.
pub const COARSE_EDGE_M: f64 = 1400.0;
/// Default edge length of the fine aggregation level, meters.
pub const FINE_EDGE_M: f64 = 174.0;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GridLevel {
    Coarse,
    Fine,
}

impl GridLevel {
    pub fn tag(self) -> &'static str {
        match self {
            GridLevel::Coarse => "c",
            GridLevel::Fine => "f",
        }
    }
}

/// Axial hex-cell identifier. Ordering is (level, q, r), giving all
/// aggregation outputs a stable row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId {
    pub level: GridLevel,
    pub q: i32,
    pub r: i32,
}

impl CellId {
    /// Compact textual form used in output tables, e.g. `f_3_-2`.
    pub fn encode(&self) -> String {
        format!("{}_{}_{}", self.level.tag(), self.q, self.r)
    }

    pub fn decode(s: &str) -> Option<CellId> {
        let mut parts = s.splitn(3, '_');
        let level = match parts.next()? {
            "c" => GridLevel::Coarse,
            "f" => GridLevel::Fine,
            _ => return None,
        };
        let q = parts.next()?.parse().ok()?;
        let r = parts.next()?.parse().ok()?;
        Some(CellId { level, q, r })
    }
}

/// Flat-top axial hex grid anchored at `origin`.
#[derive(Debug, Clone, Copy)]
pub struct HexGrid {
    pub edge_m: f64,
    pub origin: Point2,
    pub level: GridLevel,
}

impl HexGrid {
    pub fn new(edge_m: f64, origin: Point2, level: GridLevel) -> Self {
        assert!(edge_m > 0.0, "edge length must be positive");
        HexGrid {
            edge_m,
            origin,
            level,
        }
    }

    pub fn coarse(origin: Point2) -> Self {
        HexGrid::new(COARSE_EDGE_M, origin, GridLevel::Coarse)
    }

    pub fn fine(origin: Point2) -> Self {
        HexGrid::new(FINE_EDGE_M, origin, GridLevel::Fine)
    }

    /// Hexagon area for this edge length: (3*sqrt(3)/2) * edge^2.
    pub fn cell_area(&self) -> f64 {
        1.5 * SQRT3 * self.edge_m * self.edge_m
    }

    pub fn center(&self, cell: &CellId) -> Point2 {
        Point2::new(
            self.origin.x + 1.5 * self.edge_m * cell.q as f64,
            self.origin.y + SQRT3 * self.edge_m * (cell.r as f64 + cell.q as f64 / 2.0),
        )
    }

    /// The unique cell containing `point`. Boundary ties resolve toward the
    /// lexicographically smaller (q, r).
    pub fn cell_of(&self, point: Point2) -> CellId {
        let px = (point.x - self.origin.x) / self.edge_m;
        let py = (point.y - self.origin.y) / self.edge_m;
        let qf = (2.0 / 3.0) * px;
        let rf = -px / 3.0 + (SQRT3 / 3.0) * py;
        let (q0, r0) = axial_round(qf, rf);
        // The hex tiling is the Voronoi diagram of the centers: pick the
        // nearest center among the rounded cell and its ring, breaking exact
        // distance ties by (q, r).
        let mut best = CellId {
            level: self.level,
            q: q0,
            r: r0,
        };
        let mut best_d = self.center(&best).distance_sq(point);
        for (dq, dr) in AXIAL_DIRECTIONS {
            let cand = CellId {
                level: self.level,
                q: q0 + dq,
                r: r0 + dr,
            };
            let d = self.center(&cand).distance_sq(point);
            if d < best_d || (d == best_d && (cand.q, cand.r) < (best.q, best.r)) {
                best = cand;
                best_d = d;
            }
        }
        best
    }

    /// The six corners of a cell, counterclockwise, starting at the +x
    /// corner.
    pub fn polygon(&self, cell: &CellId) -> Vec<Point2> {
        let c = self.center(cell);
        let e = self.edge_m;
        let h = SQRT3 / 2.0 * e;
        vec![
            Point2::new(c.x + e, c.y),
            Point2::new(c.x + e / 2.0, c.y + h),
            Point2::new(c.x - e / 2.0, c.y + h),
            Point2::new(c.x - e, c.y),
            Point2::new(c.x - e / 2.0, c.y - h),
            Point2::new(c.x + e / 2.0, c.y - h),
        ]
    }

    /// The six axially adjacent cells.
    pub fn neighbors(&self, cell: &CellId) -> Vec<CellId> {
        AXIAL_DIRECTIONS
            .iter()
            .map(|(dq, dr)| CellId {
                level: cell.level,
                q: cell.q + dq,
                r: cell.r + dr,
            })
            .collect()
    }

    /// Euclidean distance from `point` to the cell polygon (0 when inside).
    pub fn distance_to_cell(&self, cell: &CellId, point: Point2) -> f64 {
        let poly = self.polygon(cell);
        let n = poly.len();
        let mut inside = true;
        for i in 0..n {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            if (b.x - a.x) * (point.y - a.y) - (b.y - a.y) * (point.x - a.x) < 0.0 {
                inside = false;
                break;
            }
        }
        if inside {
            return 0.0;
        }
        (0..n)
            .map(|i| point_segment_distance(point, poly[i], poly[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }
}

const AXIAL_DIRECTIONS: [(i32, i32); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];

fn axial_round(qf: f64, rf: f64) -> (i32, i32) {
    let sf = -qf - rf;
    let mut q = qf.round();
    let mut r = rf.round();
    let s = sf.round();
    let dq = (q - qf).abs();
    let dr = (r - rf).abs();
    let ds = (s - sf).abs();
    if dq > dr && dq > ds {
        q = -r - s;
    } else if dr > ds {
        r = -q - s;
    }
    (q as i32, r as i32)
}

/// Indices of `items` within `buffer` meters of the cell polygon
/// (dilated-cell membership; `buffer = 0` reduces to containment).
pub fn buffered_members(
    grid: &HexGrid,
    cell: &CellId,
    items: &[Point2],
    buffer: f64,
) -> Vec<usize> {
    items
        .iter()
        .enumerate()
        .filter(|(_, p)| grid.distance_to_cell(cell, **p) <= buffer)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fine_grid() -> HexGrid {
        HexGrid::fine(Point2::new(0.0, 0.0))
    }

    #[test]
    fn origin_point_maps_to_origin_cell() {
        let cell = fine_grid().cell_of(Point2::new(0.0, 0.0));
        assert_eq!((cell.q, cell.r), (0, 0));
    }

    #[test]
    fn neighbor_center_maps_to_neighbor() {
        let grid = fine_grid();
        let neighbor = CellId {
            level: GridLevel::Fine,
            q: 1,
            r: -1,
        };
        let center = grid.center(&neighbor);
        assert_eq!(grid.cell_of(center), neighbor);
    }

    #[test]
    fn points_three_edges_apart_fall_in_different_cells() {
        let grid = fine_grid();
        let a = grid.cell_of(Point2::new(0.0, 0.0));
        let b = grid.cell_of(Point2::new(3.0 * grid.edge_m, 0.0));
        assert_ne!(a, b);
    }

    #[test]
    fn cell_area_matches_formula() {
        let grid = fine_grid();
        // Shoelace over the polygon must match the closed form.
        let poly = grid.polygon(&CellId {
            level: GridLevel::Fine,
            q: 2,
            r: -1,
        });
        let mut a2 = 0.0;
        for i in 0..poly.len() {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            a2 += p.x * q.y - q.x * p.y;
        }
        assert_relative_eq!(a2 / 2.0, grid.cell_area(), max_relative = 1e-9);
    }

    #[test]
    fn buffered_membership_examples() {
        let grid = fine_grid();
        let cell = CellId {
            level: GridLevel::Fine,
            q: 0,
            r: 0,
        };
        let inside = Point2::new(10.0, 0.0);
        let out_150 = Point2::new(grid.edge_m + 150.0, 0.0);
        let out_250 = Point2::new(grid.edge_m + 250.0, 0.0);
        let items = vec![inside, out_150, out_250];
        assert_eq!(buffered_members(&grid, &cell, &items, 0.0), vec![0]);
        assert_eq!(buffered_members(&grid, &cell, &items, 200.0), vec![0, 1]);
    }

    #[test]
    fn cell_id_roundtrip() {
        let cell = CellId {
            level: GridLevel::Fine,
            q: -7,
            r: 12,
        };
        assert_eq!(CellId::decode(&cell.encode()), Some(cell));
    }

    #[test]
    fn cell_of_picks_the_nearest_center() {
        // The tiling is the Voronoi diagram of the centers: the chosen
        // cell's center is at least as close as any neighbor's.
        let grid = fine_grid();
        let mut state = 99u64;
        for _ in 0..500 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = ((state >> 20) % 100_000) as f64 / 17.0 - 2000.0;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let y = ((state >> 20) % 100_000) as f64 / 13.0 - 3000.0;
            let p = Point2::new(x, y);
            let cell = grid.cell_of(p);
            let d = grid.center(&cell).distance_sq(p);
            for nb in grid.neighbors(&cell) {
                let dn = grid.center(&nb).distance_sq(p);
                assert!(
                    d < dn || (d == dn && (cell.q, cell.r) < (nb.q, nb.r)),
                    "point {p:?}: cell {cell:?} d={d}, neighbor {nb:?} d={dn}"
                );
            }
        }
    }

    #[test]
    fn translation_covariance() {
        let base = fine_grid();
        let shifted = HexGrid::new(base.edge_m, Point2::new(500.0, -300.0), GridLevel::Fine);
        for (x, y) in [(3.0, 97.0), (-250.0, 40.5), (812.0, -611.0)] {
            let p = Point2::new(x, y);
            let q = Point2::new(x + 500.0, y - 300.0);
            assert_eq!(base.cell_of(p), shifted.cell_of(q));
        }
    }
}
