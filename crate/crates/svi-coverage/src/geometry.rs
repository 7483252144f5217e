//! Planar geometric primitives: points, building footprints, boundary
//! arc-length sampling, segment-polygon occlusion tests, and bearings.
//!
//! All coordinates are meters in a projected planar CRS; nothing here knows
//! about geodesy. Footprints are simple exterior rings only (no holes).

use crate::error::GeometryError;

/// A point in a projected metric CRS. Coordinates are finite by contract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: Point2) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn distance_sq(&self, other: Point2) -> f64 {
        (self.x - other.x).powi(2) + (self.y - other.y).powi(2)
    }

    pub fn midpoint(&self, other: Point2) -> Point2 {
        Point2::new((self.x + other.x) * 0.5, (self.y + other.y) * 0.5)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Point2 {
        Point2::new(self.x + dx, self.y + dy)
    }
}

/// Twice the signed area of triangle (a, b, c). Positive when c lies left
/// of the directed line a->b.
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Aabb {
    pub fn of_points(points: &[Point2]) -> Option<Aabb> {
        let first = points.first()?;
        let mut bb = Aabb {
            min_x: first.x,
            min_y: first.y,
            max_x: first.x,
            max_y: first.y,
        };
        for p in &points[1..] {
            bb.min_x = bb.min_x.min(p.x);
            bb.min_y = bb.min_y.min(p.y);
            bb.max_x = bb.max_x.max(p.x);
            bb.max_y = bb.max_y.max(p.y);
        }
        Some(bb)
    }

    pub fn of_segment(a: Point2, b: Point2) -> Aabb {
        Aabb {
            min_x: a.x.min(b.x),
            min_y: a.y.min(b.y),
            max_x: a.x.max(b.x),
            max_y: a.y.max(b.y),
        }
    }

    pub fn expanded(&self, margin: f64) -> Aabb {
        Aabb {
            min_x: self.min_x - margin,
            min_y: self.min_y - margin,
            max_x: self.max_x + margin,
            max_y: self.max_y + margin,
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }
}

/// A building footprint: a simple exterior ring with identity and type.
///
/// The ring is stored open (the closing edge back to the first vertex is
/// implicit). Construction validates finiteness, vertex count, zero-length
/// edges, and ring simplicity; the perimeter is cached.
#[derive(Debug, Clone)]
pub struct Footprint {
    pub id: String,
    pub type_label: String,
    exterior: Vec<Point2>,
    perimeter: f64,
    bbox: Aabb,
}

impl Footprint {
    pub fn new(
        id: impl Into<String>,
        type_label: impl Into<String>,
        exterior: Vec<Point2>,
    ) -> Result<Self, GeometryError> {
        if exterior.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let perimeter = perimeter(&exterior)?;
        if !ring_is_simple(&exterior) {
            return Err(GeometryError::SelfIntersecting);
        }
        let bbox = Aabb::of_points(&exterior).expect("ring has vertices");
        Ok(Footprint {
            id: id.into(),
            type_label: type_label.into(),
            exterior,
            perimeter,
            bbox,
        })
    }

    pub fn exterior(&self) -> &[Point2] {
        &self.exterior
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    /// Directed edges of the closed ring, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.exterior.len();
        (0..n).map(move |i| (self.exterior[i], self.exterior[(i + 1) % n]))
    }

    /// Area-weighted polygon centroid (shoelace). Falls back to the vertex
    /// mean for near-zero-area rings.
    pub fn centroid(&self) -> Point2 {
        let n = self.exterior.len();
        let mut a2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..n {
            let p = self.exterior[i];
            let q = self.exterior[(i + 1) % n];
            let w = p.x * q.y - q.x * p.y;
            a2 += w;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        if a2.abs() < 1e-12 {
            let inv = 1.0 / n as f64;
            let sx: f64 = self.exterior.iter().map(|p| p.x).sum();
            let sy: f64 = self.exterior.iter().map(|p| p.y).sum();
            return Point2::new(sx * inv, sy * inv);
        }
        Point2::new(cx / (3.0 * a2), cy / (3.0 * a2))
    }

    /// True when `p` lies strictly inside the ring (boundary points are
    /// outside). Even-odd rule after an explicit on-boundary test,
    /// evaluated in p-relative coordinates so the answer is stable under
    /// scene translation whenever coordinate differences are exact.
    pub fn contains_strict(&self, p: Point2) -> bool {
        if !self.bbox.contains(p) {
            return false;
        }
        strictly_inside_shifted(&self.exterior, p, 0.0, 0.0)
    }

    /// Euclidean distance from `p` to the ring boundary (0 when on it).
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

/// A facade sampling point placed along a footprint boundary walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacadeSample {
    /// Index of the host footprint in the scene's footprint list.
    pub building: u32,
    /// Ordinal along the boundary walk, starting at the ring's first vertex.
    pub index: u32,
    pub position: Point2,
    /// Arc-length offset from the ring start, in `[0, perimeter)`.
    pub arc_offset: f64,
}

/// Sum of consecutive edge lengths of a closed ring, including the closing
/// edge. Rejects rings with fewer than three vertices or zero-length edges.
pub fn perimeter(ring: &[Point2]) -> Result<f64, GeometryError> {
    if ring.len() < 3 {
        return Err(GeometryError::Degenerate(format!(
            "ring needs at least 3 vertices, got {}",
            ring.len()
        )));
    }
    let mut total = 0.0;
    let n = ring.len();
    for i in 0..n {
        let len = ring[i].distance(ring[(i + 1) % n]);
        if len == 0.0 {
            return Err(GeometryError::Degenerate(format!(
                "zero-length edge at vertex {i}"
            )));
        }
        total += len;
    }
    Ok(total)
}

/// Places facade samples at arc offsets `0, s, 2s, ...` strictly less than
/// the perimeter, walking the ring from its stored first vertex. When the
/// spacing is at least the perimeter a single sample sits at the first
/// vertex.
pub fn sample_boundary(
    footprint: &Footprint,
    building: u32,
    spacing: f64,
) -> Result<Vec<FacadeSample>, GeometryError> {
    if spacing <= 0.0 || !spacing.is_finite() {
        return Err(GeometryError::NonPositiveSpacing(spacing));
    }
    let p = footprint.perimeter();
    let mut count = (p / spacing).ceil() as usize;
    // Guard float dust: every offset must stay strictly below the perimeter.
    while count > 1 && (count - 1) as f64 * spacing >= p {
        count -= 1;
    }
    let count = count.max(1);

    let ring = footprint.exterior();
    let n = ring.len();
    let mut samples = Vec::with_capacity(count);
    let mut edge = 0usize;
    let mut edge_start_offset = 0.0;
    let mut edge_len = ring[0].distance(ring[1 % n]);
    for k in 0..count {
        let target = k as f64 * spacing;
        while target > edge_start_offset + edge_len && edge + 1 < n {
            edge_start_offset += edge_len;
            edge += 1;
            edge_len = ring[edge].distance(ring[(edge + 1) % n]);
        }
        let t = ((target - edge_start_offset) / edge_len).clamp(0.0, 1.0);
        let a = ring[edge];
        let b = ring[(edge + 1) % n];
        samples.push(FacadeSample {
            building,
            index: k as u32,
            position: Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t),
            arc_offset: target,
        });
    }
    Ok(samples)
}

/// Samples every footprint in order, assigning dense building indices.
pub fn sample_scene(
    footprints: &[Footprint],
    spacing: f64,
) -> Result<Vec<FacadeSample>, GeometryError> {
    let mut out = Vec::new();
    for (i, fp) in footprints.iter().enumerate() {
        out.extend(sample_boundary(fp, i as u32, spacing)?);
    }
    Ok(out)
}

/// Occlusion predicate: is the sight segment from `origin` to `target`
/// blocked by `occluder`?
///
/// The segment is shrunk to end `eps` meters before `target` so that a ray
/// terminating on its host facade is not self-blocked, then tested for a
/// proper crossing with any ring edge; if none, the shrunk segment's
/// midpoint is tested for strict interior containment (catches segments
/// living entirely inside the occluder). All predicates are evaluated in
/// origin-relative coordinates: coordinate differences are exact for
/// grid-aligned data, which keeps the result invariant under scene
/// translation.
pub fn segment_blocked(origin: Point2, target: Point2, occluder: &Footprint, eps: f64) -> bool {
    let dx = target.x - origin.x;
    let dy = target.y - origin.y;
    let len = (dx * dx + dy * dy).sqrt();
    if len <= eps {
        return false;
    }
    let scale = (len - eps) / len;
    let sx = dx * scale;
    let sy = dy * scale;
    for (a, b) in occluder.edges() {
        let ax = a.x - origin.x;
        let ay = a.y - origin.y;
        let bx = b.x - origin.x;
        let by = b.y - origin.y;
        // Proper crossing of (0,0)->(sx,sy) with (a,b), both strict.
        let d1 = orient_raw(ax, ay, bx, by, 0.0, 0.0);
        let d2 = orient_raw(ax, ay, bx, by, sx, sy);
        let d3 = orient_raw(0.0, 0.0, sx, sy, ax, ay);
        let d4 = orient_raw(0.0, 0.0, sx, sy, bx, by);
        if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
            return true;
        }
    }
    strictly_inside_shifted(occluder.exterior(), origin, sx * 0.5, sy * 0.5)
}

fn orient_raw(ax: f64, ay: f64, bx: f64, by: f64, cx: f64, cy: f64) -> f64 {
    (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
}

/// Even-odd strict-interior test for the query point `(qx, qy)` given in
/// coordinates relative to `shift`; ring vertices are shifted accordingly
/// before any arithmetic. Boundary points are not inside.
fn strictly_inside_shifted(ring: &[Point2], shift: Point2, qx: f64, qy: f64) -> bool {
    let n = ring.len();
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let ax = a.x - shift.x;
        let ay = a.y - shift.y;
        let bx = b.x - shift.x;
        let by = b.y - shift.y;
        let on = orient_raw(ax, ay, bx, by, qx, qy) == 0.0
            && qx >= ax.min(bx)
            && qx <= ax.max(bx)
            && qy >= ay.min(by)
            && qy <= ay.max(by);
        if on {
            return false;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let xi = ring[i].x - shift.x;
        let yi = ring[i].y - shift.y;
        let xj = ring[j].x - shift.x;
        let yj = ring[j].y - shift.y;
        if (yi > qy) != (yj > qy) && qx < (xj - xi) * (qy - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Clockwise angle from north (+y axis) of the direction `from` -> `to`,
/// in degrees within `[0, 360)`.
pub fn bearing(from: Point2, to: Point2) -> Result<f64, GeometryError> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(GeometryError::CoincidentPoints);
    }
    let deg = dx.atan2(dy).to_degrees();
    Ok(deg.rem_euclid(360.0) % 360.0)
}

/// Inclusive segment intersection test (shared endpoints and collinear
/// overlap count as intersecting). Used for ring-simplicity validation.
fn segments_intersect_inclusive(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && point_on_segment(a, c, d))
        || (d2 == 0.0 && point_on_segment(b, c, d))
        || (d3 == 0.0 && point_on_segment(c, a, b))
        || (d4 == 0.0 && point_on_segment(d, a, b))
}

/// True when `p` lies on segment (a, b), endpoints included.
fn point_on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    orient(a, b, p) == 0.0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

/// Simplicity check: non-adjacent edges must not touch; adjacent edges must
/// not fold back onto each other.
fn ring_is_simple(ring: &[Point2]) -> bool {
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect_inclusive(a, b, c, d) {
                return false;
            }
        }
        // Spike test: the edge after b must not backtrack along (a, b).
        let c = ring[(i + 2) % n];
        if orient(a, b, c) == 0.0 && (c.x - b.x) * (b.x - a.x) + (c.y - b.y) * (b.y - a.y) < 0.0 {
            return false;
        }
    }
    true
}

/// Distance from point `p` to segment (a, b).
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len_sq = abx * abx + aby * aby;
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len_sq).clamp(0.0, 1.0);
    p.distance(Point2::new(a.x + abx * t, a.y + aby * t))
}

/// Total arc length of an open polyline.
pub fn polyline_length(points: &[Point2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Point at arc offset `t` along an open polyline, clamped to its ends.
pub fn point_at_offset(points: &[Point2], t: f64) -> Point2 {
    if t <= 0.0 {
        return points[0];
    }
    let mut remaining = t;
    for w in points.windows(2) {
        let len = w[0].distance(w[1]);
        if remaining <= len {
            let s = if len == 0.0 { 0.0 } else { remaining / len };
            return Point2::new(w[0].x + (w[1].x - w[0].x) * s, w[0].y + (w[1].y - w[0].y) * s);
        }
        remaining -= len;
    }
    *points.last().expect("polyline has points")
}

/// Parameter interval of segment (a, b) inside the disc (center, radius),
/// clamped to `[0, 1]`. `None` when the segment misses the disc.
pub fn circle_segment_interval(
    a: Point2,
    b: Point2,
    center: Point2,
    radius: f64,
) -> Option<(f64, f64)> {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let fx = a.x - center.x;
    let fy = a.y - center.y;
    let qa = dx * dx + dy * dy;
    if qa == 0.0 {
        let inside = fx * fx + fy * fy <= radius * radius;
        return inside.then_some((0.0, 1.0));
    }
    let qb = 2.0 * (fx * dx + fy * dy);
    let qc = fx * fx + fy * fy - radius * radius;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = ((-qb - sq) / (2.0 * qa)).max(0.0);
    let t1 = ((-qb + sq) / (2.0 * qa)).min(1.0);
    (t0 < t1).then_some((t0, t1))
}

/// Parameter interval of segment (a, b) inside a convex CCW polygon,
/// clamped to `[0, 1]`. Liang-Barsky clipping against the edge half-planes.
pub fn clip_segment_convex(a: Point2, b: Point2, poly: &[Point2]) -> Option<(f64, f64)> {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let n = poly.len();
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let ex = q.x - p.x;
        let ey = q.y - p.y;
        // Inside means left of the directed edge: cross(e, point - p) >= 0,
        // which for a + t*d reads t * denom >= num.
        let denom = ex * dy - ey * dx;
        let num = ey * (a.x - p.x) - ex * (a.y - p.y);
        if denom == 0.0 {
            if num > 0.0 {
                return None; // parallel and outside
            }
            continue;
        }
        let t = num / denom;
        if denom > 0.0 {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 > t1 {
            return None;
        }
    }
    (t0 < t1).then_some((t0, t1))
}
