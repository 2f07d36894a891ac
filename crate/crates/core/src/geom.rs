//! Points, shapes and the translation-only congruence test.
//!
//! Shapes store their vertices in local coordinates with the vertex centroid
//! at the origin; a scene supplies the integer canvas offset. Two shapes are
//! "the same" when one is a pure translate of the other with identical
//! styling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster;

/// Canvas side length in pixels.
pub const CANVAS: i32 = 128;

/// Default per-coordinate tolerance for vector congruence.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Absolute slack added to every congruence tolerance so that integer
/// translations survive floating-point rounding of the shifted coordinates.
const FP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Pixel this point snaps to. Uses round-half-up so that snapping commutes
    /// with integer translation.
    pub fn snap(&self) -> (i32, i32) {
        ((self.x + 0.5).floor() as i32, (self.y + 0.5).floor() as i32)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub const BLACK: Rgb = Rgb([0, 0, 0]);
    pub const WHITE: Rgb = Rgb([255, 255, 255]);

    /// True when every channel exceeds 200, i.e. too pale to read on white.
    pub fn is_near_white(&self) -> bool {
        self.0.iter().all(|&c| c > 200)
    }
}

/// An axis-aligned pixel rectangle. `x0`/`y0` are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: i32,
    pub y0: i32,
    pub width: i32,
    pub height: i32,
}

impl Rect {
    pub const fn new(x0: i32, y0: i32, width: i32, height: i32) -> Self {
        Rect { x0, y0, width, height }
    }

    pub const fn canvas() -> Self {
        Rect::new(0, 0, CANVAS, CANVAS)
    }

    /// Inclusive last column.
    pub fn x1(&self) -> i32 {
        self.x0 + self.width - 1
    }

    /// Inclusive last row.
    pub fn y1(&self) -> i32 {
        self.y0 + self.height - 1
    }

    pub fn contains(&self, x: i32, y: i32) -> bool {
        x >= self.x0 && x <= self.x1() && y >= self.y0 && y <= self.y1()
    }

    /// The rectangle shrunk by one pixel on every side.
    pub fn interior(&self) -> Rect {
        Rect::new(self.x0 + 1, self.y0 + 1, self.width - 2, self.height - 2)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.y0 >= self.y0 && other.x1() <= self.x1() && other.y1() <= self.y1()
    }

    pub fn shifted(&self, dx: i32, dy: i32) -> Rect {
        Rect::new(self.x0 + dx, self.y0 + dy, self.width, self.height)
    }

    pub fn is_valid(&self) -> bool {
        self.width > 0 && self.height > 0
    }
}

/// One visual object: a polyline (optionally closed, optionally broken into
/// several pen strokes) with its styling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub vertices: Vec<Point>,
    /// Vertex indices at which a new pen stroke starts. Empty for a single
    /// connected polyline.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub breaks: Vec<usize>,
    pub closed: bool,
    pub stroke_width: u8,
    pub filled: bool,
    pub color: Rgb,
}

impl Shape {
    /// A closed, black, 1-px outline through `vertices`.
    pub fn polygon(vertices: Vec<Point>) -> Self {
        Shape {
            vertices,
            breaks: Vec::new(),
            closed: true,
            stroke_width: 1,
            filled: false,
            color: Rgb::BLACK,
        }
    }

    /// An open, black, 1-px polyline through `vertices`.
    pub fn polyline(vertices: Vec<Point>) -> Self {
        Shape {
            closed: false,
            ..Shape::polygon(vertices)
        }
    }

    pub fn with_stroke_width(mut self, width: u8) -> Self {
        self.stroke_width = width;
        self
    }

    pub fn with_fill(mut self, filled: bool) -> Self {
        self.filled = filled;
        self
    }

    pub fn with_color(mut self, color: Rgb) -> Self {
        self.color = color;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.len() < 2 {
            return Err(Error::DegenerateShape(format!(
                "{} vertices, need at least 2",
                self.vertices.len()
            )));
        }
        if !self.vertices.iter().all(Point::is_finite) {
            return Err(Error::DegenerateShape("non-finite vertex".into()));
        }
        if !matches!(self.stroke_width, 1 | 2) {
            return Err(Error::DegenerateShape(format!(
                "stroke width {} not in {{1, 2}}",
                self.stroke_width
            )));
        }
        if self.filled && !self.closed {
            return Err(Error::DegenerateShape("filled shape must be closed".into()));
        }
        if !self.breaks.is_empty() && self.closed {
            return Err(Error::DegenerateShape("broken shape cannot be closed".into()));
        }
        let mut prev = 0;
        for &b in &self.breaks {
            if b <= prev || b >= self.vertices.len() {
                return Err(Error::DegenerateShape(format!("bad stroke break at {b}")));
            }
            prev = b;
        }
        Ok(())
    }

    /// The vertex runs drawn as separate pen strokes.
    pub fn strokes(&self) -> impl Iterator<Item = &[Point]> + '_ {
        let mut bounds = Vec::with_capacity(self.breaks.len() + 2);
        bounds.push(0);
        bounds.extend_from_slice(&self.breaks);
        bounds.push(self.vertices.len());
        (0..bounds.len() - 1).map(move |i| &self.vertices[bounds[i]..bounds[i + 1]])
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let sum = self.vertices.iter().fold(Point::default(), |acc, p| acc + *p);
        sum * (1.0 / n)
    }

    /// Copy with the vertex centroid moved to the origin.
    pub fn centered(&self) -> Shape {
        let c = self.centroid();
        translate(self, -c.x, -c.y)
    }

    /// (min, max) corners of the vertex cloud.
    pub fn vertex_bounds(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Largest side of the vertex bounding box.
    pub fn extent(&self) -> f64 {
        let (lo, hi) = self.vertex_bounds();
        (hi.x - lo.x).max(hi.y - lo.y)
    }

    /// Uniformly scale about the origin.
    pub fn scaled(&self, s: f64) -> Shape {
        Shape {
            vertices: self.vertices.iter().map(|&p| p * s).collect(),
            ..self.clone()
        }
    }

    fn same_style(&self, other: &Shape) -> bool {
        self.closed == other.closed
            && self.stroke_width == other.stroke_width
            && self.filled == other.filled
            && self.color == other.color
            && self.breaks == other.breaks
    }
}

pub fn translate(shape: &Shape, dx: f64, dy: f64) -> Shape {
    let d = Point::new(dx, dy);
    Shape {
        vertices: shape.vertices.iter().map(|&p| p + d).collect(),
        ..shape.clone()
    }
}

/// Tightest rectangle covering the shape's rasterized pixels, in the shape's
/// own coordinate frame.
pub fn bounding_box(shape: &Shape) -> Rect {
    raster::shape_mask(shape)
        .bounds()
        .expect("a valid shape always rasterizes to at least one pixel")
}

/// True iff `b` is `a` shifted by a constant vector (within `tol` per
/// coordinate) with identical styling. Closed single-stroke shapes may start
/// their vertex cycle at any index; reflections and reversed order are never
/// matched.
pub fn congruent_up_to_translation(a: &Shape, b: &Shape, tol: f64) -> bool {
    if a.vertices.len() != b.vertices.len() || !a.same_style(b) {
        return false;
    }
    let tol = tol + FP_SLACK;
    let ca = a.centroid();
    let cb = b.centroid();
    let n = a.vertices.len();
    let matches_at = |shift: usize| {
        (0..n).all(|i| {
            let pa = a.vertices[i] - ca;
            let pb = b.vertices[(i + shift) % n] - cb;
            (pa.x - pb.x).abs() <= tol && (pa.y - pb.y).abs() <= tol
        })
    };
    if a.closed && a.breaks.is_empty() {
        (0..n).any(matches_at)
    } else {
        matches_at(0)
    }
}

/// True if any two non-adjacent edges of the closed polygon cross.
pub fn polygon_self_intersects(vertices: &[Point]) -> bool {
    let n = vertices.len();
    if n < 4 {
        return false;
    }
    let edge = |i: usize| (vertices[i], vertices[(i + 1) % n]);
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (p1, p2) = edge(i);
            let (q1, q2) = edge(j);
            if segments_intersect(p1, p2, q1, q2) {
                return true;
            }
        }
    }
    false
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    ((d1 > 0.0) != (d2 > 0.0) && d1 != 0.0 && d2 != 0.0) && ((d3 > 0.0) != (d4 > 0.0) && d3 != 0.0 && d4 != 0.0)
}
