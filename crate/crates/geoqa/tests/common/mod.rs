//! Shared helpers for the integration suites: fixture paths and an
//! independent interval-arithmetic oracle for grid-aligned geometries.
//!
//! The oracle deliberately avoids the ray-casting and segment-splitting
//! machinery of the engine: on axis-aligned shapes every predicate reduces
//! to interval comparisons, which are exact for half-integer coordinates.
#![allow(dead_code)]

use std::path::PathBuf;

use geoqa::geometry::{parse_wkt, Geometry};
use geoqa::pipeline::Engine;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn engine() -> Engine {
    Engine::load(&data_dir()).expect("fixture data loads")
}

pub fn geoqa_bin() -> &'static str {
    env!("CARGO_BIN_EXE_geoqa")
}

/// Axis-aligned rectangle with `x0 < x1`, `y0 < y1`.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn wkt(&self) -> String {
        format!(
            "POLYGON(({} {}, {} {}, {} {}, {} {}, {} {}))",
            self.x0, self.y0, self.x1, self.y0, self.x1, self.y1, self.x0, self.y1, self.x0,
            self.y0
        )
    }

    pub fn geometry(&self) -> Geometry {
        parse_wkt(&self.wkt()).expect("rect wkt")
    }

    fn contains_closed(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }

    fn open_overlap(&self, other: &Rect) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }

    fn closed_overlap(&self, other: &Rect) -> bool {
        self.x0 <= other.x1 && other.x0 <= self.x1 && self.y0 <= other.y1 && other.y0 <= self.y1
    }
}

/// Axis-aligned, non-degenerate segment: horizontal or vertical.
#[derive(Debug, Clone, Copy)]
pub struct Seg {
    pub ax: f64,
    pub ay: f64,
    pub bx: f64,
    pub by: f64,
}

impl Seg {
    pub fn wkt(&self) -> String {
        format!(
            "LINESTRING({} {}, {} {})",
            self.ax, self.ay, self.bx, self.by
        )
    }

    pub fn geometry(&self) -> Geometry {
        parse_wkt(&self.wkt()).expect("seg wkt")
    }
}

pub fn point_geometry(x: f64, y: f64) -> Geometry {
    parse_wkt(&format!("POINT({} {})", x, y)).expect("point wkt")
}

/// Closed containment of a point in a rectangle.
pub fn oracle_point_within(x: f64, y: f64, r: &Rect) -> bool {
    r.contains_closed(x, y)
}

/// A segment lies within a closed convex rectangle iff both endpoints do.
pub fn oracle_seg_within(s: &Seg, r: &Rect) -> bool {
    r.contains_closed(s.ax, s.ay) && r.contains_closed(s.bx, s.by)
}

/// Closed containment of one rectangle in another.
pub fn oracle_rect_within(a: &Rect, b: &Rect) -> bool {
    b.x0 <= a.x0 && a.x1 <= b.x1 && b.y0 <= a.y0 && a.y1 <= b.y1
}

/// An axis-aligned segment crosses a rectangle iff part of it lies strictly
/// inside and part strictly outside.
pub fn oracle_seg_crosses(s: &Seg, r: &Rect) -> bool {
    if s.ay == s.by {
        // Horizontal: needs the row strictly inside the y-band, an open
        // x-overlap, and an overhang past either vertical edge.
        let (xa, xb) = (s.ax.min(s.bx), s.ax.max(s.bx));
        let in_band = r.y0 < s.ay && s.ay < r.y1;
        let open_overlap = xa.max(r.x0) < xb.min(r.x1);
        in_band && open_overlap && (xa < r.x0 || xb > r.x1)
    } else {
        let (ya, yb) = (s.ay.min(s.by), s.ay.max(s.by));
        let in_band = r.x0 < s.ax && s.ax < r.x1;
        let open_overlap = ya.max(r.y0) < yb.min(r.y1);
        in_band && open_overlap && (ya < r.y0 || yb > r.y1)
    }
}

/// Rectangles touch iff their closed extents meet but their interiors do not.
pub fn oracle_rect_touches(a: &Rect, b: &Rect) -> bool {
    a.closed_overlap(b) && !a.open_overlap(b)
}
