use super::Point;

/// Closed line segment between two points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
}

/// Sign of the turn a → b → c: positive for one rotation sense, negative for
/// the other, zero when collinear.
fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn within_box(a: Point, b: Point, p: Point) -> bool {
    a.x.min(b.x) <= p.x && p.x <= a.x.max(b.x) && a.y.min(b.y) <= p.y && p.y <= a.y.max(b.y)
}

impl Segment {
    pub const fn new(start: Point, end: Point) -> Self {
        Self { start, end }
    }

    pub fn contains_point(&self, p: Point) -> bool {
        orient(self.start, self.end, p) == 0.0 && within_box(self.start, self.end, p)
    }

    /// True when both segments lie on one line and share more than a single
    /// point.
    pub fn overlaps_collinear(&self, other: &Segment) -> bool {
        if orient(self.start, self.end, other.start) != 0.0 || orient(self.start, self.end, other.end) != 0.0 {
            return false;
        }
        // Project on the axis along which `self` varies most.
        let use_x = (self.end.x - self.start.x).abs() >= (self.end.y - self.start.y).abs();
        let key = |p: Point| if use_x { p.x } else { p.y };
        let (a0, a1) = ordered(key(self.start), key(self.end));
        let (b0, b1) = ordered(key(other.start), key(other.end));
        a1.min(b1) > a0.max(b0)
    }
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Whether two closed segments share at least one point.
pub fn segments_intersect(s: &Segment, t: &Segment) -> bool {
    let (p1, p2, p3, p4) = (s.start, s.end, t.start, t.end);
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && within_box(p3, p4, p1))
        || (d2 == 0.0 && within_box(p3, p4, p2))
        || (d3 == 0.0 && within_box(p1, p2, p3))
        || (d4 == 0.0 && within_box(p1, p2, p4))
}
