//! Annotation shapes and the planar geometry behind them.
//!
//! Coordinates are continuous image-space pixels with the origin at the
//! top-left corner and `y` growing downward. Every region is closed: points
//! on the boundary count as inside.

mod segment;
mod view;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use segment::{segments_intersect, Segment};
pub use view::{ViewTransform, DEFAULT_GRAB_TOLERANCE_PX, MAX_ZOOM, MIN_ZOOM};

/// A location in image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn translated(self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Self::new(x, y)
    }
}

/// Axis-aligned rectangle given by its top-left corner and extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rectangle {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    /// Smallest rectangle spanning two opposite corners, in any order.
    pub fn from_corners(a: Point, b: Point) -> Self {
        Self { x: a.x.min(b.x), y: a.y.min(b.y), w: (a.x - b.x).abs(), h: (a.y - b.y).abs() }
    }

    /// Corners in the order top-left, top-right, bottom-right, bottom-left.
    pub fn corners(&self) -> [Point; 4] {
        let (x0, y0) = (self.x, self.y);
        let (x1, y1) = (self.x + self.w, self.y + self.h);
        [Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)]
    }
}

/// Axis-aligned ellipse given by its center and semi-axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
}

impl Ellipse {
    pub const fn new(cx: f64, cy: f64, rx: f64, ry: f64) -> Self {
        Self { cx, cy, rx, ry }
    }
}

/// Simple polygon; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    /// Convenience constructor from coordinate pairs.
    pub fn from_coords(coords: &[(f64, f64)]) -> Self {
        Self::new(coords.iter().copied().map(Point::from).collect())
    }

    /// Boundary edges, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Signed shoelace area; positive when the vertices run clockwise on screen
    /// (counter-clockwise in a y-up frame).
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a.x * b.y - b.x * a.y
            })
            .sum();
        twice / 2.0
    }

    /// Whether any two edges of the boundary intersect.
    ///
    /// Adjacent edges may share their common endpoint but nothing else.
    /// Non-adjacent edges may not touch at all.
    pub fn is_self_intersecting(&self) -> bool {
        let edges: Vec<Segment> = self.edges().collect();
        let n = edges.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    if edges[i].overlaps_collinear(&edges[j]) {
                        return true;
                    }
                } else if segments_intersect(&edges[i], &edges[j]) {
                    return true;
                }
            }
        }
        false
    }

    fn contains(&self, p: Point) -> bool {
        if self.edges().any(|e| e.contains_point(p)) {
            return true;
        }
        // Even-odd rule with a ray toward +x.
        let mut inside = false;
        for e in self.edges() {
            let (a, b) = (e.start, e.end);
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// The geometric payload of an annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    #[serde(rename = "rect")]
    Rectangle(Rectangle),
    Ellipse(Ellipse),
    Polygon(Polygon),
}

/// Which invariant a shape violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defect {
    NonFinite,
    NonPositiveExtent,
    NonPositiveSemiAxis,
    TooFewVertices,
    RepeatedVertex,
    SelfIntersecting,
    NoSuchHandle,
}

impl Defect {
    pub fn reason(self) -> &'static str {
        match self {
            Defect::NonFinite => "non-finite coordinate",
            Defect::NonPositiveExtent => "non-positive extent",
            Defect::NonPositiveSemiAxis => "non-positive semi-axis",
            Defect::TooFewVertices => "fewer than 3 vertices",
            Defect::RepeatedVertex => "repeated consecutive vertex",
            Defect::SelfIntersecting => "self-intersecting",
            Defect::NoSuchHandle => "no such handle",
        }
    }
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.reason())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("invalid shape: {0}")]
pub struct InvalidShape(pub Defect);

impl InvalidShape {
    pub fn reason(&self) -> &'static str {
        self.0.reason()
    }
}

impl Shape {
    pub fn kind(&self) -> &'static str {
        match self {
            Shape::Rectangle(_) => "rect",
            Shape::Ellipse(_) => "ellipse",
            Shape::Polygon(_) => "polygon",
        }
    }

    pub fn validate(&self) -> Result<(), InvalidShape> {
        let fail = |d| Err(InvalidShape(d));
        match self {
            Shape::Rectangle(r) => {
                if ![r.x, r.y, r.w, r.h].iter().all(|v| v.is_finite()) {
                    return fail(Defect::NonFinite);
                }
                if r.w <= 0.0 || r.h <= 0.0 {
                    return fail(Defect::NonPositiveExtent);
                }
            }
            Shape::Ellipse(e) => {
                if ![e.cx, e.cy, e.rx, e.ry].iter().all(|v| v.is_finite()) {
                    return fail(Defect::NonFinite);
                }
                if e.rx <= 0.0 || e.ry <= 0.0 {
                    return fail(Defect::NonPositiveSemiAxis);
                }
            }
            Shape::Polygon(poly) => {
                let v = &poly.vertices;
                if !v.iter().all(Point::is_finite) {
                    return fail(Defect::NonFinite);
                }
                if v.len() < 3 {
                    return fail(Defect::TooFewVertices);
                }
                if (0..v.len()).any(|i| v[i] == v[(i + 1) % v.len()]) {
                    return fail(Defect::RepeatedVertex);
                }
                if poly.is_self_intersecting() {
                    return fail(Defect::SelfIntersecting);
                }
            }
        }
        Ok(())
    }

    /// Closed-region membership test.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Shape::Rectangle(r) => r.x <= p.x && p.x <= r.x + r.w && r.y <= p.y && p.y <= r.y + r.h,
            Shape::Ellipse(e) => {
                let u = (p.x - e.cx) / e.rx;
                let v = (p.y - e.cy) / e.ry;
                u * u + v * v <= 1.0
            }
            Shape::Polygon(poly) => poly.contains(p),
        }
    }

    /// Enclosed area in square pixels.
    pub fn area(&self) -> f64 {
        match self {
            Shape::Rectangle(r) => r.w * r.h,
            Shape::Ellipse(e) => std::f64::consts::PI * e.rx * e.ry,
            Shape::Polygon(poly) => poly.signed_area().abs(),
        }
    }

    pub fn bounding_box(&self) -> Rectangle {
        match self {
            Shape::Rectangle(r) => *r,
            Shape::Ellipse(e) => {
                let (x, w) = span(e.cx - e.rx, e.cx + e.rx);
                let (y, h) = span(e.cy - e.ry, e.cy + e.ry);
                Rectangle::new(x, y, w, h)
            }
            Shape::Polygon(poly) => {
                let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
                let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for p in &poly.vertices {
                    x0 = x0.min(p.x);
                    y0 = y0.min(p.y);
                    x1 = x1.max(p.x);
                    y1 = y1.max(p.y);
                }
                let (x, w) = span(x0, x1);
                let (y, h) = span(y0, y1);
                Rectangle::new(x, y, w, h)
            }
        }
    }

    /// Reference points that can be dragged to reshape the shape.
    ///
    /// Rectangles expose corners (TL, TR, BR, BL), ellipses their axis
    /// endpoints (right, bottom, left, top), polygons their vertices.
    pub fn handles(&self) -> Vec<Point> {
        match self {
            Shape::Rectangle(r) => r.corners().to_vec(),
            Shape::Ellipse(e) => vec![
                Point::new(e.cx + e.rx, e.cy),
                Point::new(e.cx, e.cy + e.ry),
                Point::new(e.cx - e.rx, e.cy),
                Point::new(e.cx, e.cy - e.ry),
            ],
            Shape::Polygon(poly) => poly.vertices.clone(),
        }
    }

    /// Returns the shape obtained by dragging handle `index` to `to`.
    ///
    /// A rectangle keeps the diagonally opposite corner fixed and is
    /// renormalized, so dragging through that corner flips the roles of the
    /// corners. An ellipse takes the new semi-axis from the distance along the
    /// dragged axis only. A polygon vertex is replaced outright.
    pub fn move_handle(&self, index: usize, to: Point) -> Result<Shape, InvalidShape> {
        if !to.is_finite() {
            return Err(InvalidShape(Defect::NonFinite));
        }
        let moved = match self {
            Shape::Rectangle(r) => {
                if index >= 4 {
                    return Err(InvalidShape(Defect::NoSuchHandle));
                }
                let anchor = r.corners()[(index + 2) % 4];
                Shape::Rectangle(Rectangle::from_corners(anchor, to))
            }
            Shape::Ellipse(e) => {
                let mut e = *e;
                match index {
                    0 | 2 => e.rx = (to.x - e.cx).abs(),
                    1 | 3 => e.ry = (to.y - e.cy).abs(),
                    _ => return Err(InvalidShape(Defect::NoSuchHandle)),
                }
                Shape::Ellipse(e)
            }
            Shape::Polygon(poly) => {
                if index >= poly.vertices.len() {
                    return Err(InvalidShape(Defect::NoSuchHandle));
                }
                let mut poly = poly.clone();
                poly.vertices[index] = to;
                Shape::Polygon(poly)
            }
        };
        moved.validate()?;
        Ok(moved)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Shape {
        match self {
            Shape::Rectangle(r) => Shape::Rectangle(Rectangle::new(r.x + dx, r.y + dy, r.w, r.h)),
            Shape::Ellipse(e) => Shape::Ellipse(Ellipse::new(e.cx + dx, e.cy + dy, e.rx, e.ry)),
            Shape::Polygon(poly) => {
                Shape::Polygon(Polygon::new(poly.vertices.iter().map(|p| p.translated(dx, dy)).collect()))
            }
        }
    }

    /// Index of the handle nearest to `p` within `tol`; ties go to the lowest
    /// index.
    pub fn pick_handle(&self, p: Point, tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, h) in self.handles().into_iter().enumerate() {
            let d = h.distance(p);
            if d <= tol && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Snaps every coordinate to the micro-pixel grid used by the text format.
    pub fn quantized(&self) -> Shape {
        let q = quantize;
        match self {
            Shape::Rectangle(r) => Shape::Rectangle(Rectangle::new(q(r.x), q(r.y), q(r.w), q(r.h))),
            Shape::Ellipse(e) => Shape::Ellipse(Ellipse::new(q(e.cx), q(e.cy), q(e.rx), q(e.ry))),
            Shape::Polygon(poly) => {
                Shape::Polygon(Polygon::new(poly.vertices.iter().map(|p| Point::new(q(p.x), q(p.y))).collect()))
            }
        }
    }
}

/// Start and extent of `[lo, hi]`, with the extent rounded up so that
/// `lo + extent >= hi` holds in floating point.
fn span(lo: f64, hi: f64) -> (f64, f64) {
    let mut extent = hi - lo;
    while lo + extent < hi {
        extent = extent.next_up();
    }
    (lo, extent)
}

/// Rounds to 6 decimal places and folds negative zero into zero.
pub fn quantize(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    (v * 1e6).round() / 1e6 + 0.0
}

impl From<Rectangle> for Shape {
    fn from(r: Rectangle) -> Self {
        Shape::Rectangle(r)
    }
}

impl From<Ellipse> for Shape {
    fn from(e: Ellipse) -> Self {
        Shape::Ellipse(e)
    }
}

impl From<Polygon> for Shape {
    fn from(p: Polygon) -> Self {
        Shape::Polygon(p)
    }
}
