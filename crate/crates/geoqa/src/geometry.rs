//! Planar geometry over lon/lat degree coordinates.
//!
//! Geometries come from WKT literals (axis order lon lat). Topological
//! predicates are evaluated in the plane; distances use the haversine
//! great-circle approximation between planar closest points. Cardinal
//! directions compare minimum bounding rectangles with strict inequalities,
//! so a geometry is never north of itself and a diagonal direction excludes
//! the four axis directions.

use std::fmt;

/// Coincidence tolerance in degrees (~0.1 mm at the equator).
pub const EPS: f64 = 1e-9;

/// Mean Earth radius in metres.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    /// Longitude in degrees.
    pub x: f64,
    /// Latitude in degrees.
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Point),
    /// At least two points.
    LineString(Vec<Point>),
    /// Exterior ring only, closed (first point repeated last), at least four
    /// points including the closure.
    Polygon(Vec<Point>),
    /// One or more exterior rings.
    MultiPolygon(Vec<Vec<Point>>),
}

impl Geometry {
    pub fn kind(&self) -> &'static str {
        match self {
            Geometry::Point(_) => "Point",
            Geometry::LineString(_) => "LineString",
            Geometry::Polygon(_) => "Polygon",
            Geometry::MultiPolygon(_) => "MultiPolygon",
        }
    }

    pub fn is_polygonal(&self) -> bool {
        matches!(self, Geometry::Polygon(_) | Geometry::MultiPolygon(_))
    }

    fn rings(&self) -> Vec<&[Point]> {
        match self {
            Geometry::Polygon(r) => vec![r.as_slice()],
            Geometry::MultiPolygon(rs) => rs.iter().map(|r| r.as_slice()).collect(),
            _ => Vec::new(),
        }
    }

    pub fn vertices(&self) -> Vec<Point> {
        match self {
            Geometry::Point(p) => vec![*p],
            Geometry::LineString(ps) => ps.clone(),
            Geometry::Polygon(r) => r.clone(),
            Geometry::MultiPolygon(rs) => rs.iter().flatten().copied().collect(),
        }
    }

    /// All segments: consecutive pairs of a line string, ring edges of a
    /// polygon. A point has none.
    pub fn segments(&self) -> Vec<(Point, Point)> {
        let path = |ps: &[Point]| -> Vec<(Point, Point)> {
            ps.windows(2).map(|w| (w[0], w[1])).collect()
        };
        match self {
            Geometry::Point(_) => Vec::new(),
            Geometry::LineString(ps) => path(ps),
            Geometry::Polygon(r) => path(r),
            Geometry::MultiPolygon(rs) => rs.iter().flat_map(|r| path(r)).collect(),
        }
    }
}

/// Minimum bounding rectangle in degree space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mbr {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Mbr {
    fn x_overlap(&self, other: &Mbr) -> bool {
        self.min_x <= other.max_x && other.min_x <= self.max_x
    }

    fn y_overlap(&self, other: &Mbr) -> bool {
        self.min_y <= other.max_y && other.min_y <= self.max_y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CardinalDirection {
    North,
    South,
    East,
    West,
    Northeast,
    Northwest,
    Southeast,
    Southwest,
}

impl CardinalDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            CardinalDirection::North => "north",
            CardinalDirection::South => "south",
            CardinalDirection::East => "east",
            CardinalDirection::West => "west",
            CardinalDirection::Northeast => "northeast",
            CardinalDirection::Northwest => "northwest",
            CardinalDirection::Southeast => "southeast",
            CardinalDirection::Southwest => "southwest",
        }
    }
}

impl fmt::Display for CardinalDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WktError {
    #[error("WKT syntax error: {0}")]
    Syntax(String),
    #[error("unsupported WKT type {0:?}")]
    UnsupportedType(String),
    #[error("interior rings are not supported")]
    InteriorRing,
    #[error("ring is not closed (first and last point must coincide)")]
    UnclosedRing,
    #[error("{kind} needs at least {need} points, got {got}")]
    TooFewPoints {
        kind: &'static str,
        need: usize,
        got: usize,
    },
    #[error("coordinate ({x}, {y}) outside lon [-180,180] / lat [-90,90]")]
    CoordinateRange { x: f64, y: f64 },
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OpError {
    #[error("{op} does not support {a} vs {b}")]
    UnsupportedOperands {
        op: &'static str,
        a: &'static str,
        b: &'static str,
    },
}

/// Parse the supported WKT subset: POINT, LINESTRING, POLYGON (exterior ring
/// only) and MULTIPOLYGON. Keywords are case-insensitive; axis order is
/// lon lat.
pub fn parse_wkt(text: &str) -> Result<Geometry, WktError> {
    let trimmed = text.trim();
    let kw_end = trimmed
        .find(|c: char| !c.is_ascii_alphabetic())
        .unwrap_or(trimmed.len());
    let keyword = trimmed[..kw_end].to_ascii_uppercase();
    let body = trimmed[kw_end..].trim();
    let inner = strip_parens(body)?;
    match keyword.as_str() {
        "POINT" => {
            let pts = parse_coords(inner)?;
            if pts.len() != 1 {
                return Err(WktError::Syntax(format!(
                    "POINT takes one coordinate pair, got {}",
                    pts.len()
                )));
            }
            Ok(Geometry::Point(pts[0]))
        }
        "LINESTRING" => {
            let pts = parse_coords(inner)?;
            if pts.len() < 2 {
                return Err(WktError::TooFewPoints {
                    kind: "LINESTRING",
                    need: 2,
                    got: pts.len(),
                });
            }
            Ok(Geometry::LineString(pts))
        }
        "POLYGON" => Ok(Geometry::Polygon(parse_polygon_body(inner)?)),
        "MULTIPOLYGON" => {
            let groups = split_top_level(inner);
            if groups.is_empty() {
                return Err(WktError::Syntax("MULTIPOLYGON needs at least one polygon".into()));
            }
            let mut rings = Vec::new();
            for g in groups {
                rings.push(parse_polygon_body(strip_parens(g.trim())?)?);
            }
            Ok(Geometry::MultiPolygon(rings))
        }
        other => Err(WktError::UnsupportedType(other.to_string())),
    }
}

fn parse_polygon_body(inner: &str) -> Result<Vec<Point>, WktError> {
    let rings = split_top_level(inner);
    if rings.len() > 1 {
        return Err(WktError::InteriorRing);
    }
    let ring_src = rings
        .first()
        .ok_or_else(|| WktError::Syntax("empty POLYGON body".into()))?;
    let pts = parse_coords(strip_parens(ring_src.trim())?)?;
    let closed = pts.len() >= 2 && pts.first() == pts.last();
    if !closed {
        return Err(WktError::UnclosedRing);
    }
    if pts.len() < 4 {
        return Err(WktError::TooFewPoints {
            kind: "POLYGON ring",
            need: 4,
            got: pts.len(),
        });
    }
    Ok(pts)
}

fn strip_parens(s: &str) -> Result<&str, WktError> {
    let s = s.trim();
    if !s.starts_with('(') || !s.ends_with(')') {
        return Err(WktError::Syntax(format!("expected parenthesised body, got {s:?}")));
    }
    Ok(&s[1..s.len() - 1])
}

/// Split on commas that sit at paren depth zero.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !s[start..].trim().is_empty() || !out.is_empty() {
        out.push(&s[start..]);
    } else if !s.trim().is_empty() {
        out.push(s);
    }
    out.retain(|p| !p.trim().is_empty());
    out
}

fn parse_coords(s: &str) -> Result<Vec<Point>, WktError> {
    let mut pts = Vec::new();
    for pair in s.split(',') {
        let mut nums = pair.split_whitespace();
        let x: f64 = nums
            .next()
            .ok_or_else(|| WktError::Syntax(format!("empty coordinate in {pair:?}")))?
            .parse()
            .map_err(|_| WktError::Syntax(format!("bad number in {pair:?}")))?;
        let y: f64 = nums
            .next()
            .ok_or_else(|| WktError::Syntax(format!("missing latitude in {pair:?}")))?
            .parse()
            .map_err(|_| WktError::Syntax(format!("bad number in {pair:?}")))?;
        if nums.next().is_some() {
            return Err(WktError::Syntax(format!(
                "only 2D coordinates are supported, got {pair:?}"
            )));
        }
        if !x.is_finite() || !y.is_finite() {
            return Err(WktError::NonFinite);
        }
        if !(-180.0..=180.0).contains(&x) || !(-90.0..=90.0).contains(&y) {
            return Err(WktError::CoordinateRange { x, y });
        }
        pts.push(Point { x, y });
    }
    if pts.is_empty() {
        return Err(WktError::Syntax("empty coordinate list".into()));
    }
    Ok(pts)
}

/// Minimum bounding rectangle over all vertices.
pub fn mbr(g: &Geometry) -> Mbr {
    let mut b = Mbr {
        min_x: f64::INFINITY,
        min_y: f64::INFINITY,
        max_x: f64::NEG_INFINITY,
        max_y: f64::NEG_INFINITY,
    };
    for p in g.vertices() {
        b.min_x = b.min_x.min(p.x);
        b.min_y = b.min_y.min(p.y);
        b.max_x = b.max_x.max(p.x);
        b.max_y = b.max_y.max(p.y);
    }
    b
}

// ---------------------------------------------------------------------------
// low-level planar helpers

fn sub(a: Point, b: Point) -> Point {
    Point::new(a.x - b.x, a.y - b.y)
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn dot(a: Point, b: Point) -> f64 {
    a.x * b.x + a.y * b.y
}

fn dist2(a: Point, b: Point) -> f64 {
    let d = sub(a, b);
    dot(d, d)
}

/// Closest point to `p` on segment `ab` in planar degree space.
fn closest_on_segment(p: Point, a: Point, b: Point) -> Point {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 <= 0.0 {
        return a;
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    Point::new(a.x + t * ab.x, a.y + t * ab.y)
}

fn point_seg_dist(p: Point, a: Point, b: Point) -> f64 {
    dist2(p, closest_on_segment(p, a, b)).sqrt()
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    point_seg_dist(p, a, b) <= EPS
}

fn on_boundary(p: Point, rings: &[&[Point]]) -> bool {
    rings.iter().any(|ring| {
        ring.windows(2).any(|w| on_segment(p, w[0], w[1]))
    })
}

/// Even-odd ray test, boundary excluded (callers handle it separately).
fn ray_inside(p: Point, ring: &[Point]) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_int = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_int {
                inside = !inside;
            }
        }
    }
    inside
}

fn contains_closed(p: Point, rings: &[&[Point]]) -> bool {
    on_boundary(p, rings) || rings.iter().any(|r| ray_inside(p, r))
}

fn contains_strict(p: Point, rings: &[&[Point]]) -> bool {
    !on_boundary(p, rings) && rings.iter().any(|r| ray_inside(p, r))
}

/// Do the open interiors of two segments cross at a single point?
fn properly_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS))
        && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS))
}

fn seg_seg_dist(p1: Point, p2: Point, q1: Point, q2: Point) -> f64 {
    if properly_cross(p1, p2, q1, q2) {
        return 0.0;
    }
    point_seg_dist(p1, q1, q2)
        .min(point_seg_dist(p2, q1, q2))
        .min(point_seg_dist(q1, p1, p2))
        .min(point_seg_dist(q2, p1, p2))
}

/// Parameters in [0,1] where segment `pq` meets any ring edge, plus both
/// endpoints. Sorted ascending. Midpoints of consecutive parameters are then
/// strictly inside or strictly outside the region (never on its boundary),
/// which makes side classification exact for simple polygons.
fn split_params(p: Point, q: Point, rings: &[&[Point]]) -> Vec<f64> {
    let mut ts = vec![0.0, 1.0];
    let r = sub(q, p);
    let r_len2 = dot(r, r);
    for ring in rings {
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            let s = sub(b, a);
            let denom = r.x * s.y - r.y * s.x;
            let ap = sub(a, p);
            if denom.abs() > EPS * EPS {
                let t = (ap.x * s.y - ap.y * s.x) / denom;
                let u = (ap.x * r.y - ap.y * r.x) / denom;
                if (-EPS..=1.0 + EPS).contains(&t) && (-EPS..=1.0 + EPS).contains(&u) {
                    ts.push(t.clamp(0.0, 1.0));
                }
            } else if r_len2 > 0.0 && point_seg_dist(a, p, q) <= EPS || point_seg_dist(b, p, q) <= EPS
            {
                // Collinear or near-collinear overlap: project edge endpoints.
                for e in [a, b] {
                    let t = dot(sub(e, p), r) / r_len2.max(EPS * EPS);
                    if (-EPS..=1.0 + EPS).contains(&t) {
                        ts.push(t.clamp(0.0, 1.0));
                    }
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// Witnesses of a path's position relative to a polygonal region.
#[derive(Debug, Default, Clone, Copy)]
struct Sides {
    any_strictly_in: bool,
    any_strictly_out: bool,
}

fn path_sides(pts: &[Point], rings: &[&[Point]]) -> Sides {
    let mut sides = Sides::default();
    let mut note = |p: Point| {
        if contains_strict(p, rings) {
            sides.any_strictly_in = true;
        } else if !contains_closed(p, rings) {
            sides.any_strictly_out = true;
        }
    };
    for &p in pts {
        note(p);
    }
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let ts = split_params(p, q, rings);
        for pair in ts.windows(2) {
            if pair[1] - pair[0] > EPS {
                let t = (pair[0] + pair[1]) / 2.0;
                note(Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
            }
        }
    }
    sides
}

/// Is line string `pts` exactly the boundary path of one of `rings`?
/// Compared as undirected segment multisets, so orientation and start point
/// do not matter.
fn is_ring_boundary(pts: &[Point], rings: &[&[Point]]) -> bool {
    if pts.len() < 2 || pts.first() != pts.last() {
        return false;
    }
    let canonical = |path: &[Point]| -> Vec<((u64, u64), (u64, u64))> {
        let key = |p: Point| (p.x.to_bits(), p.y.to_bits());
        let mut segs: Vec<_> = path
            .windows(2)
            .map(|w| {
                let (a, b) = (key(w[0]), key(w[1]));
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        segs.sort();
        segs
    };
    let probe = canonical(pts);
    rings.iter().any(|r| canonical(r) == probe)
}

// ---------------------------------------------------------------------------
// public predicates

/// Every point of `a` lies in the closed region of `b` (boundary included for
/// points), and `a` is not simply a trace of `b`'s boundary.
pub fn sf_within(a: &Geometry, b: &Geometry) -> Result<bool, OpError> {
    let rings = polygonal_rings("sf_within", a, b)?;
    let ok = match a {
        Geometry::Point(p) => contains_closed(*p, &rings),
        Geometry::LineString(pts) => {
            let sides = path_sides(pts, &rings);
            !sides.any_strictly_out && !is_ring_boundary(pts, &rings)
        }
        Geometry::Polygon(ring) => {
            let sides = path_sides(ring, &rings);
            !sides.any_strictly_out
        }
        Geometry::MultiPolygon(rs) => rs
            .iter()
            .all(|ring| !path_sides(ring, &rings).any_strictly_out),
    };
    Ok(ok)
}

/// Line string `a` crosses polygonal `b`: part of `a` lies strictly inside
/// and part strictly outside the region.
pub fn sf_crosses(a: &Geometry, b: &Geometry) -> Result<bool, OpError> {
    let Geometry::LineString(pts) = a else {
        return Err(OpError::UnsupportedOperands {
            op: "sf_crosses",
            a: a.kind(),
            b: b.kind(),
        });
    };
    let rings = polygonal_rings("sf_crosses", a, b)?;
    let sides = path_sides(pts, &rings);
    Ok(sides.any_strictly_in && sides.any_strictly_out)
}

/// Two polygonal geometries touch: their boundaries intersect while their
/// interiors stay disjoint.
pub fn sf_touches(a: &Geometry, b: &Geometry) -> Result<bool, OpError> {
    if !a.is_polygonal() || !b.is_polygonal() {
        return Err(OpError::UnsupportedOperands {
            op: "sf_touches",
            a: a.kind(),
            b: b.kind(),
        });
    }
    let ra = a.rings();
    let rb = b.rings();
    let boundaries_meet = a.segments().iter().any(|&(p1, p2)| {
        b.segments()
            .iter()
            .any(|&(q1, q2)| seg_seg_dist(p1, p2, q1, q2) <= EPS)
    });
    if !boundaries_meet {
        return Ok(false);
    }
    Ok(!interiors_intersect(&ra, &rb))
}

/// Exact interior-overlap test for simple polygons without holes: a proper
/// edge crossing, a vertex strictly inside the other region, or an edge
/// piece running through the other interior all witness overlap.
fn interiors_intersect(ra: &[&[Point]], rb: &[&[Point]]) -> bool {
    let edge_pieces_inside = |from: &[&[Point]], into: &[&[Point]]| -> bool {
        from.iter().any(|ring| path_sides(ring, into).any_strictly_in)
    };
    let proper_crossing = ra.iter().any(|r1| {
        r1.windows(2).any(|wa| {
            rb.iter().any(|r2| {
                r2.windows(2)
                    .any(|wb| properly_cross(wa[0], wa[1], wb[0], wb[1]))
            })
        })
    });
    // Rings that coincide (equal regions, or aligned overlapping edges) have
    // no strict witness on the boundary itself; nudge edge midpoints a hair
    // to the interior side and require strict containment in both regions.
    const NUDGE: f64 = 1e-6;
    let inward_witness = |from: &[&[Point]]| -> bool {
        from.iter().any(|ring| {
            ring.windows(2).any(|w| {
                let (p, q) = (w[0], w[1]);
                let len = dist2(p, q).sqrt();
                if len <= EPS {
                    return false;
                }
                let mid = Point::new((p.x + q.x) / 2.0, (p.y + q.y) / 2.0);
                let (nx, ny) = (-(q.y - p.y) / len, (q.x - p.x) / len);
                [1.0, -1.0].iter().any(|&s| {
                    let c = Point::new(mid.x + s * nx * NUDGE, mid.y + s * ny * NUDGE);
                    contains_strict(c, ra) && contains_strict(c, rb)
                })
            })
        })
    };
    proper_crossing
        || edge_pieces_inside(ra, rb)
        || edge_pieces_inside(rb, ra)
        || inward_witness(ra)
        || inward_witness(rb)
}

fn polygonal_rings<'b>(
    op: &'static str,
    a: &Geometry,
    b: &'b Geometry,
) -> Result<Vec<&'b [Point]>, OpError> {
    if !b.is_polygonal() {
        return Err(OpError::UnsupportedOperands {
            op,
            a: a.kind(),
            b: b.kind(),
        });
    }
    Ok(b.rings())
}

/// Haversine great-circle distance in metres.
pub fn haversine_m(a: Point, b: Point) -> f64 {
    let (lat1, lat2) = (a.y.to_radians(), b.y.to_radians());
    let dlat = (b.y - a.y).to_radians();
    let dlon = (b.x - a.x).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().asin()
}

/// Do two geometries intersect in the plane (closed regions)?
fn planar_intersects(a: &Geometry, b: &Geometry) -> bool {
    // Any vertex of one inside the closed region of the other.
    if b.is_polygonal() {
        let rb = b.rings();
        if a.vertices().iter().any(|&p| contains_closed(p, &rb)) {
            return true;
        }
    }
    if a.is_polygonal() {
        let ra = a.rings();
        if b.vertices().iter().any(|&p| contains_closed(p, &ra)) {
            return true;
        }
    }
    let segs_a = a.segments();
    let segs_b = b.segments();
    match (segs_a.is_empty(), segs_b.is_empty()) {
        (true, true) => {
            // Point vs point.
            let (pa, pb) = (a.vertices()[0], b.vertices()[0]);
            dist2(pa, pb).sqrt() <= EPS
        }
        (true, false) => b
            .segments()
            .iter()
            .any(|&(q1, q2)| on_segment(a.vertices()[0], q1, q2)),
        (false, true) => a
            .segments()
            .iter()
            .any(|&(p1, p2)| on_segment(b.vertices()[0], p1, p2)),
        (false, false) => segs_a.iter().any(|&(p1, p2)| {
            segs_b
                .iter()
                .any(|&(q1, q2)| seg_seg_dist(p1, p2, q1, q2) <= EPS)
        }),
    }
}

/// Minimum great-circle-approximated distance in metres between two
/// geometries; zero when they intersect in the plane.
pub fn min_distance_m(a: &Geometry, b: &Geometry) -> f64 {
    if planar_intersects(a, b) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    let pair = |best: &mut f64, from: &Geometry, to: &Geometry| {
        let segs = to.segments();
        for v in from.vertices() {
            if segs.is_empty() {
                for w in to.vertices() {
                    *best = best.min(haversine_m(v, w));
                }
            } else {
                for &(q1, q2) in &segs {
                    *best = best.min(haversine_m(v, closest_on_segment(v, q1, q2)));
                }
            }
        }
    };
    pair(&mut best, a, b);
    pair(&mut best, b, a);
    best
}

/// Strict nine-tile cardinal test on minimum bounding rectangles. The whole
/// MBR of `a` must sit in the named tile of `b`'s MBR; shared boundaries do
/// not count, so `cardinal(g, g, d)` is false for every direction.
pub fn cardinal(a: &Geometry, b: &Geometry, dir: CardinalDirection) -> bool {
    let ma = mbr(a);
    let mb = mbr(b);
    let above = ma.min_y > mb.max_y;
    let below = ma.max_y < mb.min_y;
    let right = ma.min_x > mb.max_x;
    let left = ma.max_x < mb.min_x;
    match dir {
        CardinalDirection::North => above && ma.x_overlap(&mb),
        CardinalDirection::South => below && ma.x_overlap(&mb),
        CardinalDirection::East => right && ma.y_overlap(&mb),
        CardinalDirection::West => left && ma.y_overlap(&mb),
        CardinalDirection::Northeast => above && right,
        CardinalDirection::Northwest => above && left,
        CardinalDirection::Southeast => below && right,
        CardinalDirection::Southwest => below && left,
    }
}
