//! Pixel-cosine shortcut probe.
//!
//! A raw-pixel cosine comparison solves same/different perfectly when the
//! two objects sit in separate, centred images, and falls to chance once
//! they are translated. On random binary noise the similarity degrades
//! smoothly with the number of inverted pixels.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Rect, Rgb, CANVAS};
use crate::raster::{encode_image, rasterize, shape_mask, Image};
use crate::rng::SeededRng;
use crate::shapegen::{gen_different_pair, gen_same_pair, GenParams, VariantId};
use crate::tasks::{place_objects, PlacedShape, Scene};

/// Number of inverted-pixel conditions, k = 0..=1000.
pub const FLIP_CONDITIONS: usize = 1001;
pub const PAIRS_PER_CONDITION: usize = 100;
pub const DEFAULT_THRESHOLD: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeMode {
    /// Bounding-box centre at the canvas centre.
    Centered,
    /// Uniform random position without border contact.
    Translated,
}

impl ProbeMode {
    pub fn name(self) -> &'static str {
        match self {
            ProbeMode::Centered => "centered",
            ProbeMode::Translated => "translated",
        }
    }
}

impl FromStr for ProbeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "centered" | "centred" => Ok(ProbeMode::Centered),
            "translated" => Ok(ProbeMode::Translated),
            _ => Err(Error::Usage(format!("unknown probe mode '{s}'"))),
        }
    }
}

/// Two single-object images; label 0 same, 1 different.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub image_a: Image,
    pub image_b: Image,
    pub label: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipCondition {
    pub k: usize,
    pub pair_count: usize,
}

fn centered(shape: crate::geom::Shape) -> Result<Scene> {
    let b = shape_mask(&shape)
        .bounds()
        .ok_or_else(|| Error::DegenerateShape("empty mask".into()))?;
    let c = CANVAS / 2;
    let obj = PlacedShape::new(shape, c - b.x0 - b.width / 2, c - b.y0 - b.height / 2);
    let scene = Scene::with_objects(vec![obj]);
    scene.check_layout()?;
    Ok(scene)
}

fn single_object(shape: crate::geom::Shape, mode: ProbeMode, rng: &mut SeededRng) -> Result<Image> {
    let scene = match mode {
        ProbeMode::Centered => centered(shape)?,
        ProbeMode::Translated => place_objects(&[shape], &[Rect::canvas()], rng)?,
    };
    Ok(rasterize(&scene))
}

/// One paired sample drawn from its own stream.
pub fn paired_sample(mode: ProbeMode, label: u8, rng: &mut SeededRng) -> Result<PairedSample> {
    let params = GenParams::standard();
    let (a, b) = if label == 0 {
        gen_same_pair(VariantId::Original, &params, rng)?
    } else {
        gen_different_pair(VariantId::Original, &params, rng)?
    };
    Ok(PairedSample {
        image_a: single_object(a, mode, rng)?,
        image_b: single_object(b, mode, rng)?,
        label,
    })
}

/// `n` balanced pairs of Original shapes. Sample `i` depends only on the
/// root seed and `i`.
pub fn gen_paired_sd(mode: ProbeMode, n: usize, rng: &SeededRng) -> Result<Vec<PairedSample>> {
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("pair count {n} is odd")));
    }
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i >= n / 2)).collect();
    labels.shuffle(&mut rng.split(&format!("paired/{}/labels", mode.name()), 0));
    labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            paired_sample(
                mode,
                label,
                &mut rng.split(&format!("paired/{}", mode.name()), i as u64),
            )
        })
        .collect()
}

/// Fair-coin black/white noise.
pub fn noise_image(rng: &mut impl RngCore) -> Image {
    let mut raw = Vec::with_capacity(Image::WIDTH * Image::HEIGHT * 3);
    for _ in 0..Image::WIDTH * Image::HEIGHT / 64 {
        let bits = rng.next_u64();
        for i in 0..64 {
            let v = if bits >> i & 1 == 1 { 0 } else { 255 };
            raw.extend_from_slice(&[v, v, v]);
        }
    }
    Image::from_raw(raw).expect("canvas-sized buffer")
}

/// Copy of `img` with `k` distinct random pixels inverted.
pub fn invert_pixels(img: &Image, k: usize, rng: &mut impl Rng) -> Image {
    let mut out = img.clone();
    for p in index::sample(rng, Image::WIDTH * Image::HEIGHT, k) {
        let (x, y) = (p % Image::WIDTH, p / Image::WIDTH);
        let c = out.get(x, y);
        out.set(x, y, Rgb([255 - c.0[0], 255 - c.0[1], 255 - c.0[2]]));
    }
    out
}

/// The `j`-th noise pair of condition `k`.
pub fn flip_pair(rng: &SeededRng, k: usize, j: usize) -> PairedSample {
    let mut r = rng.split(&format!("flip/{k}"), j as u64);
    let a = noise_image(&mut r);
    let b = invert_pixels(&a, k, &mut r);
    PairedSample {
        image_a: a,
        image_b: b,
        label: u8::from(k > 0),
    }
}

/// All 1001 × 100 noise pairs, generated lazily in (k, j) order.
pub fn gen_flip_pairs(rng: &SeededRng) -> impl Iterator<Item = (PairedSample, FlipCondition)> + '_ {
    (0..FLIP_CONDITIONS).flat_map(move |k| {
        let cond = FlipCondition {
            k,
            pair_count: PAIRS_PER_CONDITION,
        };
        (0..PAIRS_PER_CONDITION).map(move |j| (flip_pair(rng, k, j), cond))
    })
}

fn is_on(px: &[u8]) -> bool {
    // white is the only colour whose channels AND to 255
    px[0] & px[1] & px[2] != 255
}

/// Cosine similarity of the binarized (non-white = 1) images, and the label
/// it implies: 0 (same) iff the similarity reaches `threshold`.
pub fn cosine_discriminator(pair: &PairedSample, threshold: f64) -> Result<(f64, u8)> {
    let (mut dot, mut na, mut nb) = (0u64, 0u64, 0u64);
    let a = pair.image_a.as_raw().chunks_exact(3);
    for (pa, pb) in a.zip(pair.image_b.as_raw().chunks_exact(3)) {
        let (x, y) = (is_on(pa), is_on(pb));
        dot += u64::from(x && y);
        na += u64::from(x);
        nb += u64::from(y);
    }
    if na == 0 || nb == 0 {
        return Err(Error::DegenerateInput("image has no foreground pixels".into()));
    }
    // integer products keep self-similarity at exactly 1.0
    let sim = dot as f64 / ((na * nb) as f64).sqrt();
    Ok((sim, u8::from(sim < threshold)))
}

/// Fraction of pairs whose discriminator label equals the true label.
pub fn discriminator_accuracy(pairs: &[PairedSample], threshold: f64) -> Result<f64> {
    let correct = pairs
        .par_iter()
        .map(|p| cosine_discriminator(p, threshold).map(|(_, l)| usize::from(l == p.label)))
        .collect::<Result<Vec<_>>>()?;
    Ok(correct.iter().sum::<usize>() as f64 / pairs.len().max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub k: usize,
    pub pairs: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

fn curve_row(k: usize, sims: &[f64]) -> CurveRow {
    let n = sims.len() as f64;
    let mean = sims.iter().sum::<f64>() / n;
    let sd = if sims.len() > 1 {
        (sims.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    CurveRow {
        k,
        pairs: sims.len(),
        mean,
        sd,
        min: sims.iter().copied().fold(f64::INFINITY, f64::min),
        max: sims.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Per-k similarity statistics over a stream of flip pairs, in order of
/// first appearance of each k.
pub fn similarity_curve(pairs: impl IntoIterator<Item = (PairedSample, FlipCondition)>) -> Result<Vec<CurveRow>> {
    let mut groups: Vec<(usize, Vec<f64>)> = Vec::new();
    for (pair, cond) in pairs {
        let (sim, _) = cosine_discriminator(&pair, DEFAULT_THRESHOLD)?;
        match groups.iter_mut().rev().find(|(k, _)| *k == cond.k) {
            Some((_, v)) => v.push(sim),
            None => groups.push((cond.k, vec![sim])),
        }
    }
    if groups.is_empty() {
        return Err(Error::DegenerateInput("no flip pairs".into()));
    }
    Ok(groups.iter().map(|(k, v)| curve_row(*k, v)).collect())
}

/// The full sweep, parallel over conditions. Equal to
/// `similarity_curve(gen_flip_pairs(rng))`.
pub fn flip_sweep(rng: &SeededRng, pairs_per_condition: usize) -> Result<Vec<CurveRow>> {
    sweep(rng, 0..FLIP_CONDITIONS, pairs_per_condition)
}

fn sweep(rng: &SeededRng, ks: std::ops::Range<usize>, pairs_per_condition: usize) -> Result<Vec<CurveRow>> {
    ks.into_par_iter()
        .map(|k| {
            let sims = (0..pairs_per_condition)
                .map(|j| cosine_discriminator(&flip_pair(rng, k, j), DEFAULT_THRESHOLD).map(|(s, _)| s))
                .collect::<Result<Vec<_>>>()?;
            Ok(curve_row(k, &sims))
        })
        .collect()
}

pub fn write_curve_csv(rows: &[CurveRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Line plot of mean similarity against k with a ±1 sd band.
pub fn curve_svg(rows: &[CurveRow]) -> String {
    let (w, h, left, top) = (640.0, 360.0, 60.0, 20.0);
    let (pw, ph) = (w - left - 20.0, h - top - 50.0);
    let kmax = rows.iter().map(|r| r.k).max().unwrap_or(1).max(1) as f64;
    let lo = rows
        .iter()
        .map(|r| r.mean - r.sd)
        .fold(1.0f64, f64::min)
        .clamp(0.0, 0.9);
    let x = |k: usize| left + pw * k as f64 / kmax;
    let y = |v: f64| top + ph * (1.0 - (v - lo) / (1.0 - lo));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let upper: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.2},{:.2}", x(r.k), y((r.mean + r.sd).min(1.0))))
        .collect();
    let lower: Vec<String> = rows
        .iter()
        .rev()
        .map(|r| format!("{:.2},{:.2}", x(r.k), y(r.mean - r.sd)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polygon class="band" points="{} {}" fill="#4c72b0" fill-opacity="0.25"/>"##,
        upper.join(" "),
        lower.join(" ")
    );
    let line: Vec<String> = rows.iter().map(|r| format!("{:.2},{:.2}", x(r.k), y(r.mean))).collect();
    let _ = writeln!(
        s,
        r##"<polyline class="mean" points="{}" fill="none" stroke="#4c72b0" stroke-width="1.5"/>"##,
        line.join(" ")
    );
    let _ = writeln!(
        s,
        r##"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="#000"/><line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="#000"/>"##,
        top + ph,
        left + pw,
        top + ph,
        top + ph
    );
    for t in [lo, (lo + 1.0) / 2.0, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{t:.3}</text>"#,
            left - 6.0,
            y(t) + 4.0
        );
    }
    for k in [0usize, 250, 500, 750, 1000] {
        if k as f64 <= kmax {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{k}</text>"#,
                x(k),
                top + ph + 16.0
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">pixels inverted</text><text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">cosine similarity</text>"#,
        left + pw / 2.0,
        h - 8.0,
        top + ph / 2.0,
        top + ph / 2.0
    );
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair_id: String,
    pub image_a: String,
    pub image_b: String,
    pub label: u8,
    pub similarity: f64,
    pub predicted: u8,
}

/// Write each pair as two PNGs plus `manifest.csv` into `dir`, scoring every
/// pair with the discriminator on the way. Returns the accuracy.
pub fn write_paired(pairs: &[PairedSample], threshold: f64, dir: impl AsRef<Path>) -> Result<f64> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let records = pairs
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let id = format!("{i:06}");
            let (a, b) = (format!("{id}_a.png"), format!("{id}_b.png"));
            for (name, img) in [(&a, &p.image_a), (&b, &p.image_b)] {
                let path = dir.join(name);
                fs::write(&path, encode_image(img)).map_err(|e| Error::io(&path, e))?;
            }
            let (similarity, predicted) = cosine_discriminator(p, threshold)?;
            Ok(PairRecord {
                pair_id: id,
                image_a: a,
                image_b: b,
                label: p.label,
                similarity,
                predicted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let path = dir.join("manifest.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(&path, e.into_error()))?;
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    let correct = records.iter().filter(|r| r.label == r.predicted).count();
    Ok(correct as f64 / records.len().max(1) as f64)
}
