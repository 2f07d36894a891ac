//! Compose the multi-variant training regime at desk scale and draw
//! single-dataset batches from it.

use premack::datasets::{build_rich_regime, plan_rich_regime, RichRegimeSpec, Split};
use premack::rng::SeededRng;
use premack::tasks::TaskKind;

fn main() -> premack::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "premack-rich".into());

    // full-size record counts come from the plan without rendering anything
    let full = plan_rich_regime(&RichRegimeSpec::new(TaskKind::Sd, 1, &out))?;
    let train = full.iter().filter(|p| p.split == Split::Train).count();
    println!("full SD regime: {train} training images across 9 variants");

    let mut spec = RichRegimeSpec::new(TaskKind::Sd, 1, &out);
    spec.desk_scale = Some(400);
    let m = build_rich_regime(&spec)?;
    for s in Split::ALL {
        println!("{s:>5}: {} records", m.split(s).count());
    }
    let batches = m.single_dataset_batches(Split::Train, 16, &mut SeededRng::new(3));
    for b in batches.iter().take(5) {
        println!("batch of {} from {}", b.len(), m.records[b[0]].variant);
    }
    Ok(())
}
