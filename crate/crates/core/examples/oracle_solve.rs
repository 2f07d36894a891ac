//! Compose one instance per task, rasterize it and let the oracle recover
//! the label from pixels alone.

use premack::oracle::{segment_objects, solve};
use premack::raster::rasterize;
use premack::rng::SeededRng;
use premack::shapegen::VariantId;
use premack::tasks::{compose, TaskKind};

fn main() -> premack::Result<()> {
    let root = SeededRng::new(99);
    for (i, kind) in TaskKind::ALL.into_iter().enumerate() {
        for label in [0, 1] {
            let mut rng = root.split(kind.name(), (2 * i + label) as u64);
            let inst = compose(kind, VariantId::Irregular, label as u8, &mut rng)?;
            let img = rasterize(&inst.scene);
            let objects = segment_objects(&img, kind)?;
            let solved = solve(&img, kind)?;
            println!(
                "{kind:>4} label {} -> oracle {solved}  ({} objects, relations {:?})",
                inst.label,
                objects.len(),
                inst.meta.relations
            );
            assert_eq!(solved, inst.label);
        }
    }
    Ok(())
}
