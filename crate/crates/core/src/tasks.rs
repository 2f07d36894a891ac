//! Scene layouts and labelled instances for the four tasks.
//!
//! | task | objects | regions |
//! |------|---------|---------|
//! | MTS  | 3 | top-centre, bottom-left, bottom-right 64×64 subareas |
//! | SD   | 2 | whole canvas |
//! | SOSD | 4 | top and bottom bands, centre half, split into left/right halves |
//! | RMTS | 6 | the three MTS subareas, each split into left/right halves |

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Rect, Rgb, Shape, CANVAS};
use crate::raster::{shape_mask, PixelMask};
use crate::rng::SeededRng;
use crate::shapegen::{gen_different_pair, gen_same_pair, GenParams, VariantId};

/// Placement attempts per object before giving up.
pub const MAX_PLACEMENT_ATTEMPTS: u32 = 1000;

pub const TOP_CENTER: Rect = Rect::new(32, 0, 64, 64);
pub const BOTTOM_LEFT: Rect = Rect::new(0, 64, 64, 64);
pub const BOTTOM_RIGHT: Rect = Rect::new(64, 64, 64, 64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Mts,
    Sd,
    Sosd,
    Rmts,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [TaskKind::Mts, TaskKind::Sd, TaskKind::Sosd, TaskKind::Rmts];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Mts => "mts",
            TaskKind::Sd => "sd",
            TaskKind::Sosd => "sosd",
            TaskKind::Rmts => "rmts",
        }
    }

    pub fn object_count(self) -> usize {
        match self {
            TaskKind::Mts => 3,
            TaskKind::Sd => 2,
            TaskKind::Sosd => 4,
            TaskKind::Rmts => 6,
        }
    }

    /// Placement region of each object, in scene order.
    pub fn object_regions(self) -> Vec<Rect> {
        let halves = |r: Rect| {
            let w = r.width / 2;
            [
                Rect::new(r.x0, r.y0, w, r.height),
                Rect::new(r.x0 + w, r.y0, w, r.height),
            ]
        };
        match self {
            TaskKind::Mts => vec![TOP_CENTER, BOTTOM_LEFT, BOTTOM_RIGHT],
            TaskKind::Sd => vec![Rect::canvas(), Rect::canvas()],
            TaskKind::Sosd => {
                let top = Rect::new(32, 0, 64, 64);
                let bottom = Rect::new(32, 64, 64, 64);
                halves(top).into_iter().chain(halves(bottom)).collect()
            }
            TaskKind::Rmts => [TOP_CENTER, BOTTOM_LEFT, BOTTOM_RIGHT]
                .into_iter()
                .flat_map(halves)
                .collect(),
        }
    }

    /// The 64×64 subareas of the MTS/RMTS layout (or the SOSD bands' centre
    /// halves), one per object group.
    pub fn group_areas(self) -> Vec<Rect> {
        match self {
            TaskKind::Mts | TaskKind::Rmts => vec![TOP_CENTER, BOTTOM_LEFT, BOTTOM_RIGHT],
            TaskKind::Sd => vec![Rect::canvas()],
            TaskKind::Sosd => vec![Rect::new(32, 0, 64, 64), Rect::new(32, 64, 64, 64)],
        }
    }

    pub fn default_params(self) -> GenParams {
        match self {
            TaskKind::Mts | TaskKind::Sd => GenParams::standard(),
            TaskKind::Sosd | TaskKind::Rmts => GenParams::compact(),
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Usage(format!("unknown task '{s}'")))
    }
}

/// A shape stamped onto the canvas at an integer offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedShape {
    pub shape: Shape,
    pub offset: (i32, i32),
}

impl PlacedShape {
    pub fn new(shape: Shape, x: i32, y: i32) -> Self {
        PlacedShape { shape, offset: (x, y) }
    }

    pub fn canvas_mask(&self) -> PixelMask {
        shape_mask(&self.shape).shifted(self.offset.0, self.offset.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub background: Rgb,
    pub objects: Vec<PlacedShape>,
}

impl Scene {
    pub fn empty() -> Self {
        Scene {
            background: Rgb::WHITE,
            objects: Vec::new(),
        }
    }

    pub fn with_objects(objects: Vec<PlacedShape>) -> Self {
        Scene {
            background: Rgb::WHITE,
            objects,
        }
    }

    /// Checks that no object touches the canvas border and that objects are
    /// pixel-disjoint and not 8-adjacent.
    pub fn check_layout(&self) -> Result<()> {
        let interior = Rect::canvas().interior();
        let mut grid = vec![usize::MAX; (CANVAS * CANVAS) as usize];
        for (i, obj) in self.objects.iter().enumerate() {
            for &(x, y) in obj.canvas_mask().pixels() {
                if !interior.contains(x, y) {
                    return Err(Error::InconsistentScene(format!(
                        "object {i} pixel ({x}, {y}) touches the canvas border"
                    )));
                }
                grid[(y * CANVAS + x) as usize] = i;
            }
        }
        for (i, obj) in self.objects.iter().enumerate() {
            for &(x, y) in obj.canvas_mask().pixels() {
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let owner = grid[((y + dy) * CANVAS + x + dx) as usize];
                        if owner != usize::MAX && owner != i {
                            return Err(Error::InconsistentScene(format!(
                                "objects {i} and {owner} touch near ({x}, {y})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Same,
    Different,
}

impl Relation {
    pub fn opposite(self) -> Relation {
        match self {
            Relation::Same => Relation::Different,
            Relation::Different => Relation::Same,
        }
    }

    fn random(rng: &mut SeededRng) -> Relation {
        if rng.gen_bool(0.5) {
            Relation::Same
        } else {
            Relation::Different
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn from_label(label: u8) -> Side {
        if label == 0 {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn label(self) -> u8 {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

/// Ground-truth relations recorded at generation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    /// MTS: relation of (base, left) then (base, right). Other tasks: one
    /// entry per object pair in scene order.
    pub relations: Vec<Relation>,
    /// Side of the matching candidate (MTS, RMTS).
    pub match_side: Option<Side>,
    /// Placement region of each object.
    pub regions: Vec<Rect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub kind: TaskKind,
    pub variant: VariantId,
    pub label: u8,
    pub scene: Scene,
    pub meta: InstanceMeta,
}

impl TaskInstance {
    /// The label implied by the recorded relations.
    pub fn label_from_meta(&self) -> Option<u8> {
        let r = &self.meta.relations;
        match self.kind {
            TaskKind::Sd => Some(u8::from(r[0] == Relation::Different)),
            TaskKind::Sosd => Some(u8::from(r[0] == r[1])),
            TaskKind::Mts => match (r[0], r[1]) {
                (Relation::Same, Relation::Different) => Some(0),
                (Relation::Different, Relation::Same) => Some(1),
                _ => None,
            },
            TaskKind::Rmts => match (r[1] == r[0], r[2] == r[0]) {
                (true, false) => Some(0),
                (false, true) => Some(1),
                _ => None,
            },
        }
    }
}

fn check_label(label: u8) -> Result<()> {
    if label > 1 {
        return Err(Error::InvalidParams(format!("label {label} is not 0 or 1")));
    }
    Ok(())
}

fn relation_pair(
    relation: Relation,
    variant: VariantId,
    params: &GenParams,
    rng: &mut SeededRng,
) -> Result<(Shape, Shape)> {
    match relation {
        Relation::Same => gen_same_pair(variant, params, rng),
        Relation::Different => {
            let (a, b) = gen_different_pair(variant, params, rng)?;
            Ok(if rng.gen_bool(0.5) { (a, b) } else { (b, a) })
        }
    }
}

fn finish(
    kind: TaskKind,
    variant: VariantId,
    label: u8,
    shapes: Vec<Shape>,
    relations: Vec<Relation>,
    match_side: Option<Side>,
    rng: &mut SeededRng,
) -> Result<TaskInstance> {
    let regions = kind.object_regions();
    let scene = place_objects(&shapes, &regions, rng)?;
    Ok(TaskInstance {
        kind,
        variant,
        label,
        scene,
        meta: InstanceMeta {
            relations,
            match_side,
            regions,
        },
    })
}

/// Base at top-centre; the copy goes bottom-left for label 0, bottom-right
/// for label 1.
pub fn compose_mts(variant: VariantId, label: u8, rng: &mut SeededRng) -> Result<TaskInstance> {
    check_label(label)?;
    let params = TaskKind::Mts.default_params().pin_image_attributes(variant, rng);
    let (base, other) = gen_different_pair(variant, &params, rng)?;
    let side = Side::from_label(label);
    let (left, right, relations) = match side {
        Side::Left => (base.clone(), other, vec![Relation::Same, Relation::Different]),
        Side::Right => (other, base.clone(), vec![Relation::Different, Relation::Same]),
    };
    finish(
        TaskKind::Mts,
        variant,
        label,
        vec![base, left, right],
        relations,
        Some(side),
        rng,
    )
}

/// Two objects anywhere on the canvas: label 0 same, label 1 different.
pub fn compose_sd(variant: VariantId, label: u8, rng: &mut SeededRng) -> Result<TaskInstance> {
    check_label(label)?;
    let params = TaskKind::Sd.default_params().pin_image_attributes(variant, rng);
    let relation = if label == 0 {
        Relation::Same
    } else {
        Relation::Different
    };
    let (a, b) = relation_pair(relation, variant, &params, rng)?;
    finish(TaskKind::Sd, variant, label, vec![a, b], vec![relation], None, rng)
}

/// A top pair and a bottom pair: label 1 when both pairs share a relation.
pub fn compose_sosd(variant: VariantId, label: u8, rng: &mut SeededRng) -> Result<TaskInstance> {
    check_label(label)?;
    let params = TaskKind::Sosd.default_params().pin_image_attributes(variant, rng);
    let top = Relation::random(rng);
    let bottom = if label == 1 { top } else { top.opposite() };
    let (a, b) = relation_pair(top, variant, &params, rng)?;
    let (c, d) = relation_pair(bottom, variant, &params, rng)?;
    finish(
        TaskKind::Sosd,
        variant,
        label,
        vec![a, b, c, d],
        vec![top, bottom],
        None,
        rng,
    )
}

/// A base pair and two candidate pairs; the candidate sharing the base
/// relation is bottom-left for label 0, bottom-right for label 1.
pub fn compose_rmts(variant: VariantId, label: u8, rng: &mut SeededRng) -> Result<TaskInstance> {
    check_label(label)?;
    let params = TaskKind::Rmts.default_params().pin_image_attributes(variant, rng);
    let base = Relation::random(rng);
    let side = Side::from_label(label);
    let (left, right) = match side {
        Side::Left => (base, base.opposite()),
        Side::Right => (base.opposite(), base),
    };
    let mut shapes = Vec::with_capacity(6);
    for rel in [base, left, right] {
        let (a, b) = relation_pair(rel, variant, &params, rng)?;
        shapes.push(a);
        shapes.push(b);
    }
    finish(
        TaskKind::Rmts,
        variant,
        label,
        shapes,
        vec![base, left, right],
        Some(side),
        rng,
    )
}

pub fn compose(kind: TaskKind, variant: VariantId, label: u8, rng: &mut SeededRng) -> Result<TaskInstance> {
    match kind {
        TaskKind::Mts => compose_mts(variant, label, rng),
        TaskKind::Sd => compose_sd(variant, label, rng),
        TaskKind::Sosd => compose_sosd(variant, label, rng),
        TaskKind::Rmts => compose_rmts(variant, label, rng),
    }
}

/// Inclusive offset ranges that keep `mask` strictly inside `region` and the
/// canvas, or `None` if it cannot fit.
pub fn admissible_offsets(mask: &PixelMask, region: &Rect) -> Option<((i32, i32), (i32, i32))> {
    let b = mask.bounds()?;
    let inner = region.interior();
    let canvas = Rect::canvas().interior();
    let x_lo = inner.x0.max(canvas.x0) - b.x0;
    let x_hi = inner.x1().min(canvas.x1()) - b.x1();
    let y_lo = inner.y0.max(canvas.y0) - b.y0;
    let y_hi = inner.y1().min(canvas.y1()) - b.y1();
    (x_lo <= x_hi && y_lo <= y_hi).then_some(((x_lo, x_hi), (y_lo, y_hi)))
}

/// Give each shape a uniformly random integer offset inside its region so
/// that no two objects share or touch a pixel.
pub fn place_objects(shapes: &[Shape], regions: &[Rect], rng: &mut SeededRng) -> Result<Scene> {
    if shapes.len() != regions.len() {
        return Err(Error::InvalidParams(format!(
            "{} shapes but {} regions",
            shapes.len(),
            regions.len()
        )));
    }
    // cells covered by an already placed object or its one-pixel halo
    let mut blocked = vec![false; (CANVAS * CANVAS) as usize];
    let mut objects = Vec::with_capacity(shapes.len());
    for (shape, region) in shapes.iter().zip(regions) {
        let mask = shape_mask(shape);
        let ((x_lo, x_hi), (y_lo, y_hi)) =
            admissible_offsets(&mask, region).ok_or(Error::PlacementExhausted { attempts: 0 })?;
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let ox = rng.gen_range(x_lo..=x_hi);
            let oy = rng.gen_range(y_lo..=y_hi);
            let free = mask
                .pixels()
                .iter()
                .all(|&(x, y)| !blocked[((y + oy) * CANVAS + x + ox) as usize]);
            if free {
                placed = Some((ox, oy));
                break;
            }
        }
        let (ox, oy) = placed.ok_or(Error::PlacementExhausted {
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?;
        for &(x, y) in mask.pixels() {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (px, py) = (x + ox + dx, y + oy + dy);
                    if (0..CANVAS).contains(&px) && (0..CANVAS).contains(&py) {
                        blocked[(py * CANVAS + px) as usize] = true;
                    }
                }
            }
        }
        objects.push(PlacedShape::new(shape.clone(), ox, oy));
    }
    Ok(Scene::with_objects(objects))
}
