//! Print a same pair and a different pair for every variant, with the
//! properties the generators guarantee.

use premack::geom::{congruent_up_to_translation, DEFAULT_TOL};
use premack::raster::shape_mask;
use premack::rng::SeededRng;
use premack::shapegen::{gen_different_pair, gen_same_pair, GenParams, VariantId};

fn main() -> premack::Result<()> {
    let root = SeededRng::new(1);
    println!(
        "{:<18} {:>6} {:>6} {:>6} {:>5}  different",
        "variant", "verts", "pixels", "stroke", "ood"
    );
    for v in VariantId::ALL {
        let mut rng = root.split(v.name(), 0);
        let params = GenParams::standard().pin_image_attributes(v, &mut rng);
        let (a, b) = gen_same_pair(v, &params, &mut rng)?;
        assert!(congruent_up_to_translation(&a, &b, DEFAULT_TOL));
        let (c, d) = gen_different_pair(v, &params, &mut rng)?;
        println!(
            "{:<18} {:>6} {:>6} {:>6} {:>5}  {} vs {} px",
            v.display_name(),
            a.vertices.len(),
            shape_mask(&a).len(),
            a.stroke_width,
            v.is_out_of_distribution(),
            shape_mask(&c).len(),
            shape_mask(&d).len()
        );
    }
    Ok(())
}
