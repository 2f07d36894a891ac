//! Render one labelled instance per task and variant, plus a contact sheet.
//!
//! ```text
//! cargo run --example task_gallery -- /tmp/gallery
//! ```

use std::path::PathBuf;

use premack::geom::Rgb;
use premack::raster::{encode_image, rasterize};
use premack::rng::SeededRng;
use premack::shapegen::VariantId;
use premack::tasks::{compose, TaskKind};

fn main() -> premack::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "gallery".into()));
    std::fs::create_dir_all(&out).map_err(|e| premack::Error::Usage(e.to_string()))?;
    let root = SeededRng::new(2024);

    // contact sheet: one row per task, one column per variant, every cell downsampled 2x
    let cell = 64;
    let (cols, rows) = (VariantId::ALL.len(), TaskKind::ALL.len());
    let mut sheet = vec![255u8; cols * cell * rows * cell * 3];
    let sheet_w = cols * cell;

    for (row, kind) in TaskKind::ALL.into_iter().enumerate() {
        for (col, variant) in VariantId::ALL.into_iter().enumerate() {
            let mut rng = root.split(&format!("{kind}/{variant}"), 0);
            let inst = compose(kind, variant, (col % 2) as u8, &mut rng)?;
            let img = rasterize(&inst.scene);
            let path = out.join(format!("{kind}_{variant}_label{}.png", inst.label));
            std::fs::write(&path, encode_image(&img)).map_err(|e| premack::Error::Usage(e.to_string()))?;
            for y in 0..cell {
                for x in 0..cell {
                    // keep a pixel dark if any of its 2x2 sources is drawn
                    let mut c = Rgb::WHITE;
                    for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        let p = img.get(2 * x + dx, 2 * y + dy);
                        if p != Rgb::WHITE {
                            c = p;
                        }
                    }
                    let i = ((row * cell + y) * sheet_w + col * cell + x) * 3;
                    sheet[i..i + 3].copy_from_slice(&c.0);
                }
            }
        }
    }
    write_rgb(&out.join("sheet.png"), &sheet, sheet_w, rows * cell);
    println!(
        "wrote {} images to {}",
        TaskKind::ALL.len() * VariantId::ALL.len(),
        out.display()
    );
    Ok(())
}

fn write_rgb(path: &std::path::Path, data: &[u8], w: usize, h: usize) {
    let file = std::fs::File::create(path).expect("create contact sheet");
    let mut enc = png::Encoder::new(std::io::BufWriter::new(file), w as u32, h as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().expect("png header");
    writer.write_image_data(data).expect("png data");
}
