//! Deterministic rasterization and lossless PNG encoding.
//!
//! Every shape is first rasterized into a [`PixelMask`] in its own frame
//! (vertices snapped to pixels, Bresenham segments, even-odd scanline fill),
//! and the scene then stamps each mask at its integer offset. Rasterization
//! therefore commutes exactly with integer translation.

use std::collections::BTreeSet;
use std::io::Cursor;

use crate::error::{Error, Result};
use crate::geom::{Point, Rect, Rgb, Shape, CANVAS};
use crate::tasks::Scene;

/// A set of pixel coordinates `(x, y)`, kept sorted by row then column.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct PixelMask {
    pixels: Vec<(i32, i32)>,
}

impl PixelMask {
    pub fn from_pixels(pixels: impl IntoIterator<Item = (i32, i32)>) -> Self {
        let set: BTreeSet<(i32, i32)> = pixels.into_iter().map(|(x, y)| (y, x)).collect();
        PixelMask {
            pixels: set.into_iter().map(|(y, x)| (x, y)).collect(),
        }
    }

    pub fn pixels(&self) -> &[(i32, i32)] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn contains(&self, x: i32, y: i32) -> bool {
        self.pixels.binary_search_by(|&(px, py)| (py, px).cmp(&(y, x))).is_ok()
    }

    pub fn bounds(&self) -> Option<Rect> {
        let first = self.pixels.first()?;
        let (mut x0, mut y0, mut x1, mut y1) = (first.0, first.1, first.0, first.1);
        for &(x, y) in &self.pixels {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        Some(Rect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    }

    pub fn shifted(&self, dx: i32, dy: i32) -> PixelMask {
        PixelMask {
            pixels: self.pixels.iter().map(|&(x, y)| (x + dx, y + dy)).collect(),
        }
    }

    /// Copy moved so that its bounding box starts at (0, 0).
    pub fn aligned(&self) -> PixelMask {
        match self.bounds() {
            Some(b) => self.shifted(-b.x0, -b.y0),
            None => self.clone(),
        }
    }

    /// Union with the copies shifted by (1,0), (0,1) and (1,1).
    pub fn dilated_2x2(&self) -> PixelMask {
        PixelMask::from_pixels(
            self.pixels
                .iter()
                .flat_map(|&(x, y)| [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)]),
        )
    }

    /// Intersection-over-union after aligning both bounding-box origins.
    pub fn aligned_iou(&self, other: &PixelMask) -> f64 {
        let a = self.aligned();
        let b = other.aligned();
        let inter = a.pixels.iter().filter(|&&(x, y)| b.contains(x, y)).count();
        let union = a.len() + b.len() - inter;
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Plot every pixel on the Bresenham line from `(x0, y0)` to `(x1, y1)`.
pub fn draw_line(mut x0: i32, mut y0: i32, x1: i32, y1: i32, mut plot: impl FnMut(i32, i32)) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        plot(x0, y0);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// Even-odd scanline fill of the polygon with integer vertices, sampling at
/// pixel centres.
pub fn fill_polygon(vertices: &[(i32, i32)], mut plot: impl FnMut(i32, i32)) {
    if vertices.len() < 3 {
        return;
    }
    let ymin = vertices.iter().map(|v| v.1).min().unwrap();
    let ymax = vertices.iter().map(|v| v.1).max().unwrap();
    let n = vertices.len();
    let mut xs: Vec<f64> = Vec::with_capacity(n);
    for y in ymin..=ymax {
        xs.clear();
        for i in 0..n {
            let (ax, ay) = vertices[i];
            let (bx, by) = vertices[(i + 1) % n];
            if (ay <= y && y < by) || (by <= y && y < ay) {
                let t = f64::from(y - ay) / f64::from(by - ay);
                xs.push(f64::from(ax) + t * f64::from(bx - ax));
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in xs.chunks_exact(2) {
            let start = pair[0].ceil() as i32;
            let end = pair[1].floor() as i32;
            for x in start..=end {
                plot(x, y);
            }
        }
    }
}

/// Rasterize a shape in its own frame.
pub fn shape_mask(shape: &Shape) -> PixelMask {
    let mut pixels = Vec::new();
    for stroke in shape.strokes() {
        let snapped: Vec<(i32, i32)> = stroke.iter().map(Point::snap).collect();
        if snapped.len() == 1 {
            pixels.push(snapped[0]);
        }
        for w in snapped.windows(2) {
            draw_line(w[0].0, w[0].1, w[1].0, w[1].1, |x, y| pixels.push((x, y)));
        }
        if shape.closed && snapped.len() > 2 {
            let (a, b) = (snapped[snapped.len() - 1], snapped[0]);
            draw_line(a.0, a.1, b.0, b.1, |x, y| pixels.push((x, y)));
        }
        if shape.filled {
            fill_polygon(&snapped, |x, y| pixels.push((x, y)));
        }
    }
    let mask = PixelMask::from_pixels(pixels);
    if shape.stroke_width == 2 {
        mask.dilated_2x2()
    } else {
        mask
    }
}

/// A 128×128 RGB raster, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Image {
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Image({}x{})", Image::WIDTH, Image::HEIGHT)
    }
}

impl Image {
    pub const WIDTH: usize = CANVAS as usize;
    pub const HEIGHT: usize = CANVAS as usize;

    pub fn filled(color: Rgb) -> Self {
        let mut pixels = Vec::with_capacity(Self::WIDTH * Self::HEIGHT * 3);
        for _ in 0..Self::WIDTH * Self::HEIGHT {
            pixels.extend_from_slice(&color.0);
        }
        Image { pixels }
    }

    pub fn from_raw(pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != Self::WIDTH * Self::HEIGHT * 3 {
            return Err(Error::Decode(format!(
                "expected {} bytes of RGB data, got {}",
                Self::WIDTH * Self::HEIGHT * 3,
                pixels.len()
            )));
        }
        Ok(Image { pixels })
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.pixels
    }

    fn index(x: usize, y: usize) -> usize {
        (y * Self::WIDTH + x) * 3
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = Self::index(x, y);
        Rgb([self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]])
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        let i = Self::index(x, y);
        self.pixels[i..i + 3].copy_from_slice(&c.0);
    }

    /// Paint the mask, silently dropping pixels that fall off the canvas.
    pub fn paint(&mut self, mask: &PixelMask, color: Rgb) {
        for &(x, y) in mask.pixels() {
            if (0..CANVAS).contains(&x) && (0..CANVAS).contains(&y) {
                self.set(x as usize, y as usize, color);
            }
        }
    }
}

pub fn rasterize(scene: &Scene) -> Image {
    let mut img = Image::filled(scene.background);
    for obj in &scene.objects {
        img.paint(&obj.canvas_mask(), obj.shape.color);
    }
    img
}

/// Encode as an 8-bit RGB PNG with fixed filter and compression settings so
/// identical images always give identical bytes.
pub fn encode_image(img: &Image) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, Image::WIDTH as u32, Image::HEIGHT as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Balanced);
        enc.set_filter(png::Filter::Sub);
        let mut writer = enc
            .write_header()
            .expect("writing a PNG header into memory cannot fail");
        writer
            .write_image_data(img.as_raw())
            .expect("image data length matches the header");
    }
    out
}

pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| Error::Decode(e.to_string()))?;
    let info = reader.info();
    if info.width as usize != Image::WIDTH || info.height as usize != Image::HEIGHT {
        return Err(Error::Decode(format!("unexpected size {}x{}", info.width, info.height)));
    }
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Decode("expected 8-bit RGB".into()));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Decode("image too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| Error::Decode(e.to_string()))?;
    buf.truncate(frame.buffer_size());
    Image::from_raw(buf)
}
