//! Render a synthetic attribution map: a Gaussian blob over a floor of tiny
//! values, drawn on a log scale clipped at 1e-4.

use premack::raster::{encode_image, Image};
use premack::score::render_attribution;

fn main() -> premack::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "attribution.png".into());
    let mut values = vec![0.0; Image::WIDTH * Image::HEIGHT];
    for (i, v) in values.iter_mut().enumerate() {
        let (x, y) = ((i % Image::WIDTH) as f64, (i / Image::WIDTH) as f64);
        let d2 = (x - 40.0).powi(2) + (y - 80.0).powi(2);
        *v = (-d2 / 300.0).exp() + 1e-6 * (x + y);
    }
    let img = render_attribution(&values)?;
    std::fs::write(&out, encode_image(&img)).map_err(|e| premack::Error::Usage(e.to_string()))?;
    println!("wrote {out}");
    Ok(())
}
