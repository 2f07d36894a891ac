//! Procedural shape generators for the fourteen dataset variants and the
//! same/different pair constructions built on top of them.
//!
//! Every generator produces a centroid-centred [`Shape`] whose vertex extent
//! (largest side of the vertex bounding box) lies inside
//! [`GenParams::size_range`].

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{congruent_up_to_translation, polygon_self_intersects, Point, Rgb, Shape};
use crate::raster::shape_mask;
use crate::rng::SeededRng;

/// Attempts allowed for any rejection-sampling loop.
pub const MAX_ATTEMPTS: u32 = 1000;

/// Upper bound on any object extent: a 64-px subarea minus its one-pixel
/// border on both sides, minus snapping and stroke growth.
pub const MAX_EXTENT: u32 = 60;

/// Aligned-mask IoU at or above which a resampled shape counts as "too
/// similar" to serve as the different member of a pair.
pub const DIFFERENT_IOU_LIMIT: f64 = 0.9;

/// Circumradius at which polygon noise amplitudes are specified.
const REFERENCE_RADIUS: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantId {
    Original,
    Irregular,
    Regular,
    Open,
    Wider,
    Scrambled,
    RandomColor,
    Filled,
    Lines,
    Arrows,
    Rectangles,
    StraightLines,
    ConnectedSquares,
    ConnectedCircles,
}

impl VariantId {
    /// All variants in dataset enumeration order; `Original` first.
    pub const ALL: [VariantId; 14] = [
        VariantId::Original,
        VariantId::Irregular,
        VariantId::Regular,
        VariantId::Open,
        VariantId::Wider,
        VariantId::Scrambled,
        VariantId::RandomColor,
        VariantId::Filled,
        VariantId::Lines,
        VariantId::Arrows,
        VariantId::Rectangles,
        VariantId::StraightLines,
        VariantId::ConnectedSquares,
        VariantId::ConnectedCircles,
    ];

    /// Machine name used in paths and manifests.
    pub fn name(self) -> &'static str {
        match self {
            VariantId::Original => "original",
            VariantId::Irregular => "irregular",
            VariantId::Regular => "regular",
            VariantId::Open => "open",
            VariantId::Wider => "wider",
            VariantId::Scrambled => "scrambled",
            VariantId::RandomColor => "random_color",
            VariantId::Filled => "filled",
            VariantId::Lines => "lines",
            VariantId::Arrows => "arrows",
            VariantId::Rectangles => "rectangles",
            VariantId::StraightLines => "straight_lines",
            VariantId::ConnectedSquares => "connected_squares",
            VariantId::ConnectedCircles => "connected_circles",
        }
    }

    /// Human-readable label used on plots.
    pub fn display_name(self) -> &'static str {
        match self {
            VariantId::Original => "Original",
            VariantId::Irregular => "Irregular",
            VariantId::Regular => "Regular",
            VariantId::Open => "Open",
            VariantId::Wider => "Wider",
            VariantId::Scrambled => "Scrambled",
            VariantId::RandomColor => "Random Color",
            VariantId::Filled => "Filled",
            VariantId::Lines => "Lines",
            VariantId::Arrows => "Arrows",
            VariantId::Rectangles => "Rectangles",
            VariantId::StraightLines => "Straight Lines",
            VariantId::ConnectedSquares => "Connected Squares",
            VariantId::ConnectedCircles => "Connected Circles",
        }
    }

    /// Position in the enumeration order.
    pub fn order(self) -> usize {
        VariantId::ALL.iter().position(|&v| v == self).unwrap()
    }

    pub fn is_out_of_distribution(self) -> bool {
        self != VariantId::Original
    }
}

impl fmt::Display for VariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for VariantId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        VariantId::ALL
            .into_iter()
            .find(|v| v.name().replace('_', "") == norm)
            .ok_or_else(|| Error::Usage(format!("unknown variant '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Width,
    Height,
}

/// Rectangles in one image share one side; this pins which one and its length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedSide {
    pub axis: Axis,
    pub length: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    /// Inclusive polygon vertex-count interval.
    pub vertex_count: (u32, u32),
    /// Half-width of the uniform per-coordinate vertex noise, in pixels, for
    /// a polygon of circumradius 24 (before rescaling to the target size).
    pub noise_amplitude: f64,
    /// Inclusive interval for the vertex extent, in pixels.
    pub size_range: (u32, u32),
    /// Allowed straight-line tilts in degrees.
    pub tilt_set: Vec<u32>,
    pub scramble_sections: usize,
    /// Inclusive interval for each scrambled section's displacement, in pixels.
    pub scramble_displacement: (f64, f64),
    /// Stroke colour shared by every object of a Random Color image.
    pub color: Option<Rgb>,
    /// Side shared by every rectangle of a Rectangles image.
    pub fixed_side: Option<FixedSide>,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams::standard()
    }
}

impl GenParams {
    /// Single objects in 64×64 subareas (MTS, SD).
    pub fn standard() -> Self {
        GenParams {
            vertex_count: (3, 8),
            noise_amplitude: 8.0,
            size_range: (16, 48),
            tilt_set: vec![0, 45, 90, 135],
            scramble_sections: 4,
            scramble_displacement: (4.0, 12.0),
            color: None,
            fixed_side: None,
        }
    }

    /// Pair members sharing a subarea (SOSD, RMTS).
    pub fn compact() -> Self {
        GenParams {
            size_range: (12, 26),
            scramble_displacement: (2.0, 6.0),
            ..GenParams::standard()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        let (vlo, vhi) = self.vertex_count;
        if vlo < 3 || vhi > 8 || vlo > vhi {
            return bad(format!("vertex count range {vlo}..={vhi} not within 3..=8"));
        }
        let (slo, shi) = self.size_range;
        if slo < 8 || shi > MAX_EXTENT || slo > shi {
            return bad(format!("size range {slo}..={shi} not within 8..={MAX_EXTENT}"));
        }
        if self.tilt_set.is_empty() || self.tilt_set.iter().any(|t| ![0, 45, 90, 135].contains(t)) {
            return bad(format!(
                "tilt set {:?} not a subset of {{0, 45, 90, 135}}",
                self.tilt_set
            ));
        }
        if self.scramble_sections < 2 {
            return bad("scramble needs at least 2 sections".into());
        }
        let (dlo, dhi) = self.scramble_displacement;
        if !(0.0..=dhi).contains(&dlo) || !dhi.is_finite() {
            return bad(format!("bad scramble displacement {dlo}..={dhi}"));
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude < REFERENCE_RADIUS) {
            return bad(format!("noise amplitude {} out of range", self.noise_amplitude));
        }
        if let Some(c) = self.color {
            if c.is_near_white() {
                return bad(format!("colour {:?} too close to white", c.0));
            }
        }
        if let Some(side) = self.fixed_side {
            if side.length < slo || side.length > shi {
                return bad(format!("fixed side {} outside size range", side.length));
            }
        }
        Ok(())
    }

    /// Draw the attributes that every object of one image must share: the
    /// stroke colour (Random Color), the tilt (Straight Lines) or the common
    /// side (Rectangles).
    pub fn pin_image_attributes(&self, variant: VariantId, rng: &mut SeededRng) -> GenParams {
        let mut p = self.clone();
        match variant {
            VariantId::RandomColor => p.color = Some(random_visible_color(rng)),
            VariantId::StraightLines => {
                let t = p.tilt_set[rng.gen_range(0..p.tilt_set.len())];
                p.tilt_set = vec![t];
            }
            VariantId::Rectangles => {
                let axis = if rng.gen_bool(0.5) { Axis::Width } else { Axis::Height };
                let length = rng.gen_range(p.size_range.0..=p.size_range.1);
                p.fixed_side = Some(FixedSide { axis, length });
            }
            _ => {}
        }
        p
    }

    fn draw_extent(&self, rng: &mut SeededRng) -> f64 {
        f64::from(rng.gen_range(self.size_range.0..=self.size_range.1))
    }
}

/// Uniform RGB, rejecting colours with every channel above 200.
pub fn random_visible_color(rng: &mut SeededRng) -> Rgb {
    loop {
        let c = Rgb([rng.gen(), rng.gen(), rng.gen()]);
        if !c.is_near_white() {
            return c;
        }
    }
}

fn exhausted(what: impl Into<String>) -> Error {
    Error::GenerationExhausted {
        what: what.into(),
        attempts: MAX_ATTEMPTS,
    }
}

/// Rescale so the vertex extent equals `extent`, then centre on the centroid.
fn fit(shape: Shape, extent: f64) -> Shape {
    let e = shape.extent();
    shape.scaled(extent / e).centered()
}

fn polygon_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        .abs()
        / 2.0
}

fn min_edge(v: &[Point], closed: bool) -> f64 {
    let n = v.len();
    let edges = if closed { n } else { n - 1 };
    (0..edges)
        .map(|i| {
            let d = v[(i + 1) % n] - v[i];
            d.x.hypot(d.y)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Polygon vertices on a circle of radius 24 with optional uniform noise,
/// rescaled to a drawn extent. Rejects self-intersecting or sliver results.
fn noisy_polygon(params: &GenParams, noise: f64, closed: bool, rng: &mut SeededRng) -> Result<Shape> {
    let (lo, hi) = params.vertex_count;
    noisy_polygon_n(params, noise, closed, (lo, hi), rng)
}

fn noisy_polygon_n(
    params: &GenParams,
    noise: f64,
    closed: bool,
    counts: (u32, u32),
    rng: &mut SeededRng,
) -> Result<Shape> {
    for _ in 0..MAX_ATTEMPTS {
        let n = rng.gen_range(counts.0..=counts.1) as usize;
        let phase = rng.gen_range(0.0..TAU);
        let vertices: Vec<Point> = (0..n)
            .map(|i| {
                let a = phase + TAU * i as f64 / n as f64;
                let mut p = Point::new(REFERENCE_RADIUS * a.cos(), REFERENCE_RADIUS * a.sin());
                if noise > 0.0 {
                    p.x += rng.gen_range(-noise..=noise);
                    p.y += rng.gen_range(-noise..=noise);
                }
                p
            })
            .collect();
        let extent = params.draw_extent(rng);
        let base = if closed {
            Shape::polygon(vertices)
        } else {
            Shape::polyline(vertices)
        };
        let shape = fit(base, extent);
        if n >= 4 && polygon_self_intersects(&shape.vertices) {
            continue;
        }
        if min_edge(&shape.vertices, closed) < 3.0 {
            continue;
        }
        if n >= 3 && polygon_area(&shape.vertices) < 0.08 * extent * extent {
            continue;
        }
        return Ok(shape);
    }
    Err(exhausted("noisy polygon"))
}

/// Smooth irregular closed contour: 8–24 control points on a circle with
/// radii uniform in [0.4r, r], joined by a closed Catmull-Rom spline sampled
/// into a dense polyline.
fn svrt_contour(params: &GenParams, rng: &mut SeededRng) -> Result<Shape> {
    const SAMPLES_PER_SPAN: usize = 4;
    for _ in 0..MAX_ATTEMPTS {
        let n = rng.gen_range(8..=24usize);
        let phase = rng.gen_range(0.0..TAU);
        let ctrl: Vec<Point> = (0..n)
            .map(|i| {
                let a = phase + TAU * i as f64 / n as f64;
                let r = REFERENCE_RADIUS * rng.gen_range(0.4..=1.0);
                Point::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let mut dense = Vec::with_capacity(n * SAMPLES_PER_SPAN);
        for i in 0..n {
            let p0 = ctrl[(i + n - 1) % n];
            let p1 = ctrl[i];
            let p2 = ctrl[(i + 1) % n];
            let p3 = ctrl[(i + 2) % n];
            for s in 0..SAMPLES_PER_SPAN {
                let t = s as f64 / SAMPLES_PER_SPAN as f64;
                dense.push(catmull_rom(p0, p1, p2, p3, t));
            }
        }
        if polygon_self_intersects(&dense) {
            continue;
        }
        let extent = params.draw_extent(rng);
        return Ok(fit(Shape::polygon(dense), extent));
    }
    Err(exhausted("spline contour"))
}

fn catmull_rom(p0: Point, p1: Point, p2: Point, p3: Point, t: f64) -> Point {
    let t2 = t * t;
    let t3 = t2 * t;
    let f = |a: f64, b: f64, c: f64, d: f64| {
        0.5 * ((2.0 * b) + (-a + c) * t + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2 + (-a + 3.0 * b - 3.0 * c + d) * t3)
    };
    Point::new(f(p0.x, p1.x, p2.x, p3.x), f(p0.y, p1.y, p2.y, p3.y))
}

fn rectangle(width: u32, height: u32) -> Shape {
    let (w, h) = (f64::from(width) / 2.0, f64::from(height) / 2.0);
    Shape::polygon(vec![
        Point::new(-w, -h),
        Point::new(w, -h),
        Point::new(w, h),
        Point::new(-w, h),
    ])
}

/// A two-vertex segment whose vertex bounding box has side `length` along
/// each axis it spans.
fn straight_line(tilt: u32, length: u32) -> Shape {
    let k = f64::from(length) / 2.0;
    let (dx, dy) = match tilt {
        0 => (k, 0.0),
        45 => (k, -k),
        90 => (0.0, -k),
        135 => (-k, -k),
        other => unreachable!("tilt {other} rejected by GenParams::validate"),
    };
    Shape::polyline(vec![Point::new(-dx, -dy), Point::new(dx, dy)])
}

/// Tilt in degrees of a two-vertex line, measured counter-clockwise from the
/// x axis with y pointing up.
pub fn line_tilt(shape: &Shape) -> u32 {
    let d = shape.vertices[1] - shape.vertices[0];
    let deg = (-d.y).atan2(d.x).to_degrees().rem_euclid(180.0);
    (deg.round() as u32) % 180
}

/// A square wave: an open square with its opening facing down joined at its
/// right side to an open square with its opening facing up.
fn lines_shape(side: u32) -> Shape {
    let s = f64::from(side);
    Shape::polyline(vec![
        Point::new(0.0, s),
        Point::new(0.0, 0.0),
        Point::new(s, 0.0),
        Point::new(s, s),
        Point::new(s, 2.0 * s),
        Point::new(2.0 * s, 2.0 * s),
        Point::new(2.0 * s, s),
    ])
    .centered()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ArrowSpec {
    shaft: u32,
    head: u32,
    heads: u32,
}

impl ArrowSpec {
    fn head_length(&self) -> f64 {
        f64::from(self.head) * 3f64.sqrt() / 2.0
    }

    fn shaft_range(&self, size: (u32, u32)) -> (u32, u32) {
        let hl = self.head_length();
        let lo = (f64::from(size.0) - hl).ceil().max(4.0) as u32;
        let hi = (f64::from(size.1) - 2.0 * hl).floor().max(0.0) as u32;
        (lo, hi)
    }

    fn shape(&self) -> Shape {
        let l = f64::from(self.shaft);
        let h = f64::from(self.head) / 2.0;
        let hl = self.head_length();
        let mut v = Vec::with_capacity(10);
        if self.heads == 2 {
            v.extend([
                Point::new(0.0, 0.0),
                Point::new(0.0, h),
                Point::new(-hl, 0.0),
                Point::new(0.0, -h),
            ]);
        }
        v.extend([
            Point::new(0.0, 0.0),
            Point::new(l, 0.0),
            Point::new(l, -h),
            Point::new(l + hl, 0.0),
            Point::new(l, h),
            Point::new(l, 0.0),
        ]);
        Shape::polyline(v).centered()
    }
}

fn sample_arrow(params: &GenParams, rng: &mut SeededRng) -> Result<ArrowSpec> {
    let (lo, hi) = params.size_range;
    let head_lo = (hi / 8).max(4);
    let head_hi = (hi / 4).max(head_lo);
    for _ in 0..MAX_ATTEMPTS {
        let head = rng.gen_range(head_lo..=head_hi);
        let heads = rng.gen_range(1..=2);
        let probe = ArrowSpec { shaft: 0, head, heads };
        let (slo, shi) = probe.shaft_range((lo, hi));
        if slo + 2 > shi {
            continue;
        }
        let shaft = rng.gen_range(slo..=shi);
        return Ok(ArrowSpec { shaft, head, heads });
    }
    Err(exhausted("arrow dimensions"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Corner {
    Left,
    Right,
}

/// Two equal squares touching at one corner: the upper square sits to the
/// left or right of the lower one. Drawn as one closed figure-eight path
/// through the shared corner.
fn connected_squares(side: u32, corner: Corner) -> Shape {
    let s = f64::from(side);
    let mirror = if corner == Corner::Right { 1.0 } else { -1.0 };
    let v = [
        (s, s),
        (s, 2.0 * s),
        (0.0, 2.0 * s),
        (0.0, s),
        (s, s),
        (s, 0.0),
        (2.0 * s, 0.0),
        (2.0 * s, s),
    ];
    Shape::polygon(v.iter().map(|&(x, y)| Point::new(mirror * (x - s), y)).collect()).centered()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CirclesSpec {
    big: f64,
    small: f64,
    small_on_top: bool,
}

/// Two vertically stacked circles sharing one tangent point, drawn as one
/// closed path that passes through that point twice.
fn connected_circles(spec: CirclesSpec) -> Shape {
    let (upper, lower) = if spec.small_on_top {
        (spec.small, spec.big)
    } else {
        (spec.big, spec.small)
    };
    let segments = |r: f64| ((TAU * r / 3.0).ceil() as usize).clamp(8, 32);
    let mut v = Vec::new();
    let nu = segments(upper);
    for j in 0..nu {
        let t = TAU * j as f64 / nu as f64;
        v.push(Point::new(upper * t.sin(), -upper + upper * t.cos()));
    }
    let nl = segments(lower);
    for j in 0..nl {
        let t = TAU * j as f64 / nl as f64;
        v.push(Point::new(-lower * t.sin(), lower - lower * t.cos()));
    }
    Shape::polygon(v).centered()
}

fn sample_circles(params: &GenParams, rng: &mut SeededRng) -> Result<CirclesSpec> {
    for _ in 0..MAX_ATTEMPTS {
        let extent = params.draw_extent(rng);
        let ratio = rng.gen_range(0.35..=0.65);
        let big = extent / (2.0 * (1.0 + ratio));
        let small = ratio * big;
        if small < 2.5 || big - small < 2.0 {
            continue;
        }
        return Ok(CirclesSpec {
            big,
            small,
            small_on_top: rng.gen_bool(0.5),
        });
    }
    Err(exhausted("connected circle radii"))
}

fn half_range(size: (u32, u32)) -> (u32, u32) {
    (size.0.div_ceil(2).max(3), size.1 / 2)
}

fn draw_rectangle_sides(params: &GenParams, rng: &mut SeededRng) -> (FixedSide, u32) {
    let (lo, hi) = params.size_range;
    let fixed = params.fixed_side.unwrap_or_else(|| FixedSide {
        axis: if rng.gen_bool(0.5) { Axis::Width } else { Axis::Height },
        length: rng.gen_range(lo..=hi),
    });
    (fixed, rng.gen_range(lo..=hi))
}

fn rectangle_from(fixed: FixedSide, free: u32) -> Shape {
    match fixed.axis {
        Axis::Width => rectangle(fixed.length, free),
        Axis::Height => rectangle(free, fixed.length),
    }
}

fn draw_tilt(params: &GenParams, rng: &mut SeededRng) -> u32 {
    params.tilt_set[rng.gen_range(0..params.tilt_set.len())]
}

fn scrambled_base(params: &GenParams, rng: &mut SeededRng) -> Result<Shape> {
    let (lo, hi) = params.vertex_count;
    let lo = lo.max(params.scramble_sections as u32).min(8);
    noisy_polygon_n(params, 0.0, true, (lo, hi.max(lo)), rng)
}

/// One shape of the given variant.
pub fn gen_shape(variant: VariantId, params: &GenParams, rng: &mut SeededRng) -> Result<Shape> {
    params.validate()?;
    let noise = params.noise_amplitude;
    let shape = match variant {
        VariantId::Original => svrt_contour(params, rng)?,
        VariantId::Irregular => noisy_polygon(params, noise, true, rng)?,
        VariantId::Regular => noisy_polygon(params, 0.0, true, rng)?,
        VariantId::Open => noisy_polygon(params, noise, false, rng)?,
        VariantId::Wider => noisy_polygon(params, noise, true, rng)?.with_stroke_width(2),
        VariantId::Scrambled => scrambled_base(params, rng)?,
        VariantId::RandomColor => {
            let color = params.color.unwrap_or_else(|| random_visible_color(rng));
            noisy_polygon(params, noise, true, rng)?.with_color(color)
        }
        VariantId::Filled => noisy_polygon(params, noise, true, rng)?.with_fill(true),
        VariantId::Lines => {
            let (lo, hi) = half_range(params.size_range);
            lines_shape(rng.gen_range(lo..=hi))
        }
        VariantId::Arrows => sample_arrow(params, rng)?.shape(),
        VariantId::Rectangles => {
            let (fixed, free) = draw_rectangle_sides(params, rng);
            rectangle_from(fixed, free)
        }
        VariantId::StraightLines => {
            let tilt = draw_tilt(params, rng);
            straight_line(tilt, rng.gen_range(params.size_range.0..=params.size_range.1))
        }
        VariantId::ConnectedSquares => {
            let (lo, hi) = half_range(params.size_range);
            let corner = if rng.gen_bool(0.5) { Corner::Left } else { Corner::Right };
            connected_squares(rng.gen_range(lo..=hi), corner)
        }
        VariantId::ConnectedCircles => connected_circles(sample_circles(params, rng)?),
    };
    Ok(shape)
}

/// A shape and an exact copy of it.
pub fn gen_same_pair(variant: VariantId, params: &GenParams, rng: &mut SeededRng) -> Result<(Shape, Shape)> {
    let a = gen_shape(variant, params, rng)?;
    Ok((a.clone(), a))
}

/// True when the two shapes are neither vector-congruent nor pixel-identical
/// after aligning their bounding boxes.
pub fn visibly_different(a: &Shape, b: &Shape) -> bool {
    if congruent_up_to_translation(a, b, 0.0) {
        return false;
    }
    let (ma, mb) = (shape_mask(a), shape_mask(b));
    if a.color != b.color {
        return true;
    }
    ma.aligned() != mb.aligned()
}

/// Two non-congruent shapes that differ along the variant's free attribute.
pub fn gen_different_pair(variant: VariantId, params: &GenParams, rng: &mut SeededRng) -> Result<(Shape, Shape)> {
    params.validate()?;
    for _ in 0..MAX_ATTEMPTS {
        let pair = match variant {
            VariantId::Scrambled => {
                let a = scrambled_base(params, rng)?;
                let b = scramble(&a, params.scramble_sections, params.scramble_displacement, rng)?;
                if b.extent() > f64::from(params.size_range.1) {
                    continue;
                }
                (a, b)
            }
            VariantId::Rectangles => {
                let (fixed, a) = draw_rectangle_sides(params, rng);
                let b = rng.gen_range(params.size_range.0..=params.size_range.1);
                if a.abs_diff(b) < 2 {
                    continue;
                }
                (rectangle_from(fixed, a), rectangle_from(fixed, b))
            }
            VariantId::StraightLines => {
                let tilt = draw_tilt(params, rng);
                let (lo, hi) = params.size_range;
                let (a, b) = (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
                if a.abs_diff(b) < 2 {
                    continue;
                }
                (straight_line(tilt, a), straight_line(tilt, b))
            }
            VariantId::Lines => {
                let (lo, hi) = half_range(params.size_range);
                let (a, b) = (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
                if a.abs_diff(b) < 2 {
                    continue;
                }
                (lines_shape(a), lines_shape(b))
            }
            VariantId::Arrows => {
                let a = sample_arrow(params, rng)?;
                let mut b = a;
                if rng.gen_bool(0.5) {
                    b.heads = 3 - a.heads;
                } else {
                    let (lo, hi) = a.shaft_range(params.size_range);
                    b.shaft = rng.gen_range(lo..=hi);
                    if a.shaft.abs_diff(b.shaft) < 2 {
                        continue;
                    }
                }
                (a.shape(), b.shape())
            }
            VariantId::ConnectedSquares => {
                let (lo, hi) = half_range(params.size_range);
                let side = rng.gen_range(lo..=hi);
                let (first, second) = if rng.gen_bool(0.5) {
                    (Corner::Left, Corner::Right)
                } else {
                    (Corner::Right, Corner::Left)
                };
                (connected_squares(side, first), connected_squares(side, second))
            }
            VariantId::ConnectedCircles => {
                let a = sample_circles(params, rng)?;
                let b = CirclesSpec {
                    small_on_top: !a.small_on_top,
                    ..a
                };
                (connected_circles(a), connected_circles(b))
            }
            _ => {
                let a = gen_shape(variant, params, rng)?;
                let b = gen_shape(variant, params, rng)?;
                if shape_mask(&a).aligned_iou(&shape_mask(&b)) >= DIFFERENT_IOU_LIMIT {
                    continue;
                }
                (a, b)
            }
        };
        if visibly_different(&pair.0, &pair.1) {
            return Ok(pair);
        }
    }
    Err(exhausted(format!("different pair for {variant}")))
}

/// Cut a closed shape into `sections` angular sectors about its centroid and
/// move each sector by an independent random offset whose length is drawn
/// from `displacement`.
pub fn scramble(shape: &Shape, sections: usize, displacement: (f64, f64), rng: &mut SeededRng) -> Result<Shape> {
    check_scramble_input(shape, sections)?;
    let start = rng.gen_range(0.0..TAU / sections as f64);
    let offsets: Vec<Point> = (0..sections)
        .map(|_| {
            let r = rng.gen_range(displacement.0..=displacement.1);
            let a = rng.gen_range(0.0..TAU);
            Point::new(r * a.cos(), r * a.sin())
        })
        .collect();
    scramble_with(shape, start, &offsets)
}

fn check_scramble_input(shape: &Shape, sections: usize) -> Result<()> {
    shape.validate()?;
    if !shape.closed || !shape.breaks.is_empty() {
        return Err(Error::DegenerateShape("only closed shapes can be scrambled".into()));
    }
    if sections < 2 {
        return Err(Error::DegenerateShape("need at least 2 sections".into()));
    }
    if shape.vertices.len() < sections {
        return Err(Error::DegenerateShape(format!(
            "{} vertices cannot form {sections} sections",
            shape.vertices.len()
        )));
    }
    Ok(())
}

/// Deterministic core of [`scramble`]: sector boundaries start at angle
/// `start` and sector `i` moves by `offsets[i]`.
pub fn scramble_with(shape: &Shape, start: f64, offsets: &[Point]) -> Result<Shape> {
    let sections = offsets.len();
    check_scramble_input(shape, sections)?;
    let c = shape.centroid();
    let width = TAU / sections as f64;
    let sector_of = |p: Point| {
        let a = (p.y - c.y).atan2(p.x - c.x) - start;
        ((a.rem_euclid(TAU) / width) as usize).min(sections - 1)
    };

    // Split every edge where it crosses a sector boundary ray.
    let n = shape.vertices.len();
    let mut pieces: Vec<(usize, Vec<Point>)> = Vec::new();
    for i in 0..n {
        let p = shape.vertices[i];
        let q = shape.vertices[(i + 1) % n];
        let mut cuts: Vec<f64> = (0..sections)
            .filter_map(|k| ray_cut(c, start + width * k as f64, p, q))
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ts = vec![0.0];
        ts.extend(cuts);
        ts.push(1.0);
        for w in ts.windows(2) {
            let a = p + (q - p) * w[0];
            let b = p + (q - p) * w[1];
            let sector = sector_of(p + (q - p) * ((w[0] + w[1]) / 2.0));
            match pieces.last_mut() {
                Some((s, run)) if *s == sector => run.push(b),
                _ => pieces.push((sector, vec![a, b])),
            }
        }
    }
    if pieces.len() > 1 && pieces[0].0 == pieces[pieces.len() - 1].0 {
        let (_, head) = pieces.remove(0);
        let tail = pieces.last_mut().unwrap();
        tail.1.extend(head.into_iter().skip(1));
    }

    let mut vertices = Vec::new();
    let mut breaks = Vec::new();
    for (sector, run) in pieces {
        if !vertices.is_empty() {
            breaks.push(vertices.len());
        }
        let d = offsets[sector];
        vertices.extend(run.into_iter().map(|p| p + d));
    }
    let out = Shape {
        vertices,
        breaks,
        closed: false,
        stroke_width: shape.stroke_width,
        filled: false,
        color: shape.color,
    };
    Ok(out.centered())
}

/// Parameter in (0, 1) at which segment p→q crosses the ray from `origin` at
/// `angle`, if it does so strictly inside the segment.
fn ray_cut(origin: Point, angle: f64, p: Point, q: Point) -> Option<f64> {
    const EPS: f64 = 1e-9;
    let u = Point::new(angle.cos(), angle.sin());
    let e = q - p;
    let denom = u.x * e.y - u.y * e.x;
    if denom.abs() < EPS {
        return None;
    }
    let w = p - origin;
    // origin + t u = p + s e
    let s = (u.y * w.x - u.x * w.y) / denom;
    let t = (e.y * w.x - e.x * w.y) / denom;
    (s > EPS && s < 1.0 - EPS && t > 0.0).then_some(s)
}
