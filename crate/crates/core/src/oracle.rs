//! Label recovery from rendered pixels alone.
//!
//! Objects are found by 8-connected component labelling of non-background
//! pixels. Components are then assigned to the task's placement regions; a
//! region holding fragments of one object (scrambled shapes) has them merged.
//! Sameness is exact equality of coloured pixel sets after aligning bounding
//! boxes.

use crate::error::{Error, Result};
use crate::geom::{Rect, Rgb, CANVAS};
use crate::raster::Image;
use crate::tasks::TaskKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectMask {
    /// `(x, y, colour)` sorted by row then column.
    pixels: Vec<(i32, i32, Rgb)>,
    bounds: Rect,
}

impl ObjectMask {
    pub fn new(mut pixels: Vec<(i32, i32, Rgb)>) -> Option<Self> {
        if pixels.is_empty() {
            return None;
        }
        pixels.sort_by_key(|&(x, y, _)| (y, x));
        pixels.dedup_by_key(|p| (p.0, p.1));
        let (mut x0, mut y0, mut x1, mut y1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
        for &(x, y, _) in &pixels {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        Some(ObjectMask {
            pixels,
            bounds: Rect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1),
        })
    }

    pub fn pixels(&self) -> &[(i32, i32, Rgb)] {
        &self.pixels
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    fn merge(parts: Vec<ObjectMask>) -> ObjectMask {
        let pixels = parts.into_iter().flat_map(|m| m.pixels).collect();
        ObjectMask::new(pixels).expect("merged masks are non-empty")
    }

    /// Chebyshev gap between two bounding boxes (0 when they overlap).
    fn gap(&self, other: &ObjectMask) -> i32 {
        let (a, b) = (self.bounds, other.bounds);
        let dx = (b.x0 - a.x1()).max(a.x0 - b.x1()).max(0);
        let dy = (b.y0 - a.y1()).max(a.y0 - b.y1()).max(0);
        dx.max(dy)
    }
}

/// 8-connected components of non-background pixels.
pub fn connected_components(img: &Image, background: Rgb) -> Vec<ObjectMask> {
    let n = CANVAS as usize;
    let mut seen = vec![false; n * n];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for y in 0..n {
        for x in 0..n {
            if seen[y * n + x] || img.get(x, y) == background {
                continue;
            }
            seen[y * n + x] = true;
            stack.push((x, y));
            let mut pixels = Vec::new();
            while let Some((cx, cy)) = stack.pop() {
                pixels.push((cx as i32, cy as i32, img.get(cx, cy)));
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        let (nx, ny) = (cx as i32 + dx, cy as i32 + dy);
                        if nx < 0 || ny < 0 || nx >= CANVAS || ny >= CANVAS {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if !seen[ny * n + nx] && img.get(nx, ny) != background {
                            seen[ny * n + nx] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            out.extend(ObjectMask::new(pixels));
        }
    }
    out
}

/// Single-linkage agglomeration of `parts` into exactly `k` groups using
/// bounding-box gaps.
fn cluster(parts: Vec<ObjectMask>, k: usize) -> Vec<ObjectMask> {
    let n = parts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let mut edges: Vec<(i32, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((parts[i].gap(&parts[j]), i, j));
        }
    }
    edges.sort();
    let mut groups = n;
    for (_, i, j) in edges {
        if groups <= k {
            break;
        }
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            groups -= 1;
        }
    }
    let mut buckets: Vec<(usize, Vec<ObjectMask>)> = Vec::new();
    for (i, part) in parts.into_iter().enumerate() {
        let root = find(&mut parent, i);
        match buckets.iter_mut().find(|(r, _)| *r == root) {
            Some((_, b)) => b.push(part),
            None => buckets.push((root, vec![part])),
        }
    }
    buckets.into_iter().map(|(_, b)| ObjectMask::merge(b)).collect()
}

/// Objects of a task image, in the task's scene order (region order, then
/// reading order within a shared region).
pub fn segment_objects(img: &Image, kind: TaskKind) -> Result<Vec<ObjectMask>> {
    let components = connected_components(img, Rgb::WHITE);
    let regions = kind.object_regions();
    // distinct regions with the number of objects each must hold
    let mut slots: Vec<(Rect, usize, Vec<ObjectMask>)> = Vec::new();
    for r in &regions {
        match slots.iter_mut().find(|(s, _, _)| s == r) {
            Some(slot) => slot.1 += 1,
            None => slots.push((*r, 1, Vec::new())),
        }
    }
    for comp in components {
        let slot = slots
            .iter_mut()
            .find(|(r, _, _)| r.contains_rect(&comp.bounds()))
            .ok_or_else(|| {
                Error::SegmentationAmbiguous(format!("component at {:?} crosses placement regions", comp.bounds()))
            })?;
        slot.2.push(comp);
    }
    let mut objects = Vec::with_capacity(regions.len());
    for (rect, want, parts) in slots {
        if parts.len() < want {
            return Err(Error::SegmentationAmbiguous(format!(
                "region {rect:?} holds {} components, expected {want} objects",
                parts.len()
            )));
        }
        let mut found = cluster(parts, want);
        found.sort_by_key(|m| (m.bounds().y0, m.bounds().x0));
        objects.extend(found);
    }
    let count = objects.len();
    if ![2, 3, 4, 6].contains(&count) {
        return Err(Error::SegmentationAmbiguous(format!("{count} objects")));
    }
    Ok(objects)
}

/// Exact equality of coloured pixel sets after aligning bounding-box origins.
pub fn masks_same(a: &ObjectMask, b: &ObjectMask) -> bool {
    if a.len() != b.len() || a.bounds.width != b.bounds.width || a.bounds.height != b.bounds.height {
        return false;
    }
    let (ax, ay, bx, by) = (a.bounds.x0, a.bounds.y0, b.bounds.x0, b.bounds.y0);
    a.pixels
        .iter()
        .zip(&b.pixels)
        .all(|(&(x1, y1, c1), &(x2, y2, c2))| x1 - ax == x2 - bx && y1 - ay == y2 - by && c1 == c2)
}

/// Recover the task label from the image.
pub fn solve(img: &Image, kind: TaskKind) -> Result<u8> {
    let m = segment_objects(img, kind)?;
    match kind {
        TaskKind::Sd => Ok(u8::from(!masks_same(&m[0], &m[1]))),
        TaskKind::Sosd => {
            let top = masks_same(&m[0], &m[1]);
            let bottom = masks_same(&m[2], &m[3]);
            Ok(u8::from(top == bottom))
        }
        TaskKind::Mts => pick_side(masks_same(&m[0], &m[1]), masks_same(&m[0], &m[2])),
        TaskKind::Rmts => {
            let base = masks_same(&m[0], &m[1]);
            let left = masks_same(&m[2], &m[3]);
            let right = masks_same(&m[4], &m[5]);
            pick_side(left == base, right == base)
        }
    }
}

fn pick_side(left: bool, right: bool) -> Result<u8> {
    match (left, right) {
        (true, false) => Ok(0),
        (false, true) => Ok(1),
        (l, _) => Err(Error::InconsistentScene(format!(
            "{} candidates match",
            if l { "both" } else { "no" }
        ))),
    }
}
