//! Build a small SD dataset, verify it and print the manifest fingerprint.
//!
//! ```text
//! cargo run --release --example generate_dataset -- /tmp/premack-data
//! ```

use premack::datasets::{build_dataset, verify_dataset, DatasetSpec};
use premack::shapegen::VariantId;
use premack::tasks::TaskKind;

fn main() -> premack::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "premack-data".into());
    // 1/100 of the standard 28000/5600/11200 splits
    let spec = DatasetSpec::new(TaskKind::Sd, VariantId::Original, 7, &out).with_desk_scale(Some(100));
    let manifest = build_dataset(&spec)?;
    println!(
        "wrote {} images to {}",
        manifest.records.len(),
        spec.dataset_dir().display()
    );

    let report = verify_dataset(spec.dataset_dir())?;
    for b in &report.balance {
        println!("{:>5}: {} same / {} different", b.split, b.label0, b.label1);
    }
    println!("oracle agreement {:.4}", report.agreement());
    println!("fingerprint {}", report.fingerprint);
    Ok(())
}
