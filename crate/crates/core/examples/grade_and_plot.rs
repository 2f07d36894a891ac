//! Grade synthetic predictions from two models over three seeds, then write
//! report.csv and a grouped bar chart.

use rand::Rng;

use premack::datasets::{build_dataset, DatasetSpec, Split, SplitSizes};
use premack::rng::SeededRng;
use premack::score::{grade, plot_results, AccuracyReport, PredictionRecord};
use premack::shapegen::VariantId;
use premack::tasks::TaskKind;

fn main() -> premack::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "premack-report".into()));
    let mut cells = Vec::new();
    for variant in [VariantId::Original, VariantId::Lines, VariantId::Arrows] {
        let spec = DatasetSpec::new(TaskKind::Sd, variant, 5, &out).with_split_sizes(SplitSizes::new(0, 0, 200));
        let manifest = build_dataset(&spec)?;
        let mut rng = SeededRng::new(variant.order() as u64);
        let mut preds = Vec::new();
        for (model, skill) in [("cnn", 0.6), ("object-centric", 0.85)] {
            for seed in 0..3 {
                for r in manifest.split(Split::Test) {
                    let right = rng.gen_bool(skill);
                    preds.push(PredictionRecord {
                        model: model.into(),
                        seed: seed.to_string(),
                        image_id: r.image_id.clone(),
                        predicted_label: if right { r.label } else { 1 - r.label },
                    });
                }
            }
        }
        cells.extend(grade(&preds, &manifest, Split::Test)?);
    }
    let report = AccuracyReport::from_cells(cells, &[VariantId::Original]);
    report.write(&out)?;
    plot_results(&report, out.join("accuracy.svg"))?;
    for r in &report.rows {
        println!(
            "{:>15} {:>9} {:.3} ± {:.3}",
            r.model,
            r.variant,
            r.mean,
            r.sem.unwrap_or(0.0)
        );
    }
    println!("wrote {}", out.join("accuracy.svg").display());
    Ok(())
}
