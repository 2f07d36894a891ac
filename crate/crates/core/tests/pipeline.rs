use std::collections::BTreeSet;

use premack::datasets::{
    build_dataset, build_rich_regime, plan_dataset, verify_dataset, verify_dataset_with, DatasetSpec, Manifest,
    RichRegimeSpec, Split, SplitSizes, VerifyOptions,
};
use premack::oracle::solve;
use premack::raster::decode_image;
use premack::rng::SeededRng;
use premack::score::{grade, plot_svg, AccuracyReport, PredictionRecord};
use premack::shapegen::VariantId;
use premack::tasks::TaskKind;
use premack::Error;
use proptest::prelude::*;

fn oracle_predictions(m: &Manifest, split: Split, model: &str, seed: &str) -> Vec<PredictionRecord> {
    m.split(split)
        .map(|r| {
            let img = decode_image(&std::fs::read(m.image_path(r)).unwrap()).unwrap();
            PredictionRecord {
                model: model.into(),
                seed: seed.into(),
                image_id: r.image_id.clone(),
                predicted_label: solve(&img, r.task).unwrap(),
            }
        })
        .collect()
}

#[test]
fn rich_regime_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = RichRegimeSpec::new(TaskKind::Sd, 11, dir.path());
    spec.split_sizes = SplitSizes::new(20, 4, 12);
    let m = build_rich_regime(&spec).unwrap();

    let train: BTreeSet<_> = m.split(Split::Train).map(|r| r.variant).collect();
    let test: BTreeSet<_> = m.split(Split::Test).map(|r| r.variant).collect();
    assert_eq!(train, RichRegimeSpec::DEFAULT_TRAIN.into_iter().collect());
    assert_eq!(test, RichRegimeSpec::DEFAULT_HELDOUT.into_iter().collect());
    assert_eq!(m.split(Split::Train).count(), 9 * 20);
    assert_eq!(m.split(Split::Test).count(), 4 * 12);

    // composite loads back from disk, paths relative to the regime dir
    let loaded = Manifest::load(spec.regime_dir()).unwrap();
    assert_eq!(loaded.fingerprint().unwrap(), m.fingerprint().unwrap());

    // the oracle is a perfect model; a constant model sits at chance
    let mut preds = Vec::new();
    for s in ["0", "1", "2"] {
        preds.extend(oracle_predictions(&m, Split::Test, "oracle", s));
        preds.extend(m.split(Split::Test).map(|r| PredictionRecord {
            model: "zeros".into(),
            seed: s.into(),
            image_id: r.image_id.clone(),
            predicted_label: 0,
        }));
    }
    let cells = grade(&preds, &m, Split::Test).unwrap();
    assert_eq!(cells.len(), 2 * 3 * 4);
    let report = AccuracyReport::from_cells(cells, &RichRegimeSpec::DEFAULT_TRAIN);
    assert_eq!(report.rows.len(), 2 * 4);
    for row in &report.rows {
        assert!(!row.trained);
        assert_eq!(row.n_seeds, 3);
        match row.model.as_str() {
            "oracle" => assert!(row.mean == 1.0 && row.high && row.sem == Some(0.0)),
            _ => assert!(row.mean == 0.5 && !row.high),
        }
    }
    let svg = plot_svg(&report).unwrap();
    assert_eq!(svg.matches("class=\"bar\"").count(), 8);
    assert_eq!(svg.matches("class=\"hatch\"").count(), 0);

    let out = dir.path().join("report");
    report.write(&out).unwrap();
    let back = AccuracyReport::read(out.join("report.csv")).unwrap();
    assert_eq!(back.rows, report.rows);
}

#[test]
fn composite_batches_are_single_source() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = RichRegimeSpec::new(TaskKind::Sd, 5, dir.path());
    spec.split_sizes = SplitSizes::new(18, 2, 2);
    let m = build_rich_regime(&spec).unwrap();
    let batches = m.single_dataset_batches(Split::Train, 4, &mut SeededRng::new(9));
    let mut seen = BTreeSet::new();
    let mut first_variants = Vec::new();
    for b in &batches {
        assert!(!b.is_empty() && b.len() <= 4);
        let v: BTreeSet<_> = b.iter().map(|&i| m.records[i].variant).collect();
        assert_eq!(v.len(), 1);
        first_variants.push(*v.iter().next().unwrap());
        for &i in b {
            assert_eq!(m.records[i].split, Split::Train);
            assert!(seen.insert(i));
        }
    }
    assert_eq!(seen.len(), 9 * 18);
    // batches interleave sources rather than running variant by variant
    let runs = first_variants.windows(2).filter(|w| w[0] != w[1]).count();
    assert!(runs > 9, "{runs}");
    assert_eq!(
        batches,
        m.single_dataset_batches(Split::Train, 4, &mut SeededRng::new(9))
    );
}

#[test]
fn tampering_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let spec =
        DatasetSpec::new(TaskKind::Mts, VariantId::Filled, 3, dir.path()).with_split_sizes(SplitSizes::new(8, 2, 4));
    let m = build_dataset(&spec).unwrap();
    assert!(verify_dataset(spec.dataset_dir()).unwrap().passed());

    // flipped label in the manifest: checksums hold, the oracle disagrees
    let mut flipped = m.clone();
    flipped.records[0].label ^= 1;
    flipped.write().unwrap();
    let rep = verify_dataset_with(spec.dataset_dir(), VerifyOptions::default(), &|_| {}).unwrap();
    assert!(rep.checksums_ok == rep.records && !rep.passed());
    assert_eq!(rep.disagreements.len(), 1);
    assert_eq!(rep.disagreements[0].image_id, m.records[0].image_id);
    m.write().unwrap();

    // rewritten pixels
    let victim = &m.records[3];
    let path = m.image_path(victim);
    let mut img = decode_image(&std::fs::read(&path).unwrap()).unwrap();
    img.set(0, 0, premack::geom::Rgb([1, 2, 3]));
    std::fs::write(&path, premack::raster::encode_image(&img)).unwrap();
    match verify_dataset(spec.dataset_dir()) {
        Err(Error::CorruptDataset { image_id, .. }) => assert_eq!(image_id, victim.image_id),
        other => panic!("{other:?}"),
    }
}

#[test]
fn build_writes_exactly_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let spec = DatasetSpec::new(TaskKind::Rmts, VariantId::Scrambled, 8, dir.path()).with_desk_scale(Some(7000));
    let plan = plan_dataset(&spec).unwrap();
    let m = build_dataset(&spec).unwrap();
    assert_eq!(plan.len(), m.records.len());
    for (p, r) in plan.iter().zip(&m.records) {
        assert_eq!(
            (&p.image_id, p.split, p.label, p.seed),
            (&r.image_id, r.split, r.label, r.seed)
        );
        assert!(m.image_path(r).is_file());
    }
    let pngs = walk_pngs(&spec.dataset_dir());
    assert_eq!(pngs, plan.len());
}

fn walk_pngs(dir: &std::path::Path) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            if p.is_dir() {
                walk_pngs(&p)
            } else {
                usize::from(p.extension().is_some_and(|x| x == "png"))
            }
        })
        .sum()
}

#[test]
fn builds_across_tasks_agree_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    for task in TaskKind::ALL {
        for variant in [VariantId::Original, VariantId::ConnectedCircles, VariantId::Arrows] {
            let spec = DatasetSpec::new(task, variant, 21, dir.path()).with_split_sizes(SplitSizes::new(6, 2, 4));
            build_dataset(&spec).unwrap();
            let rep = verify_dataset(spec.dataset_dir()).unwrap();
            assert!(rep.passed(), "{task}/{variant}: {:?}", rep.disagreements);
            assert_eq!(rep.oracle_checked, 12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plans_are_balanced_unique_and_pure(seed in any::<u64>(), tr in 1usize..40, va in 0usize..10, te in 0usize..20) {
        let sizes = SplitSizes::new(2 * tr, 2 * va, 2 * te);
        let spec = DatasetSpec::new(TaskKind::Sosd, VariantId::Lines, seed, "unused").with_split_sizes(sizes);
        let plan = plan_dataset(&spec).unwrap();
        prop_assert_eq!(&plan, &plan_dataset(&spec).unwrap());
        prop_assert_eq!(plan.len(), sizes.total());
        for split in Split::ALL {
            let labels: Vec<u8> = plan.iter().filter(|p| p.split == split).map(|p| p.label).collect();
            prop_assert_eq!(labels.iter().filter(|&&l| l == 1).count() * 2, labels.len());
        }
        let seeds: BTreeSet<u64> = plan.iter().map(|p| p.seed).collect();
        prop_assert_eq!(seeds.len(), plan.len());
        let ids: BTreeSet<&str> = plan.iter().map(|p| p.image_id.as_str()).collect();
        prop_assert_eq!(ids.len(), plan.len());
    }

    #[test]
    fn odd_split_sizes_are_rejected(n in 0usize..50) {
        let spec = DatasetSpec::new(TaskKind::Sd, VariantId::Original, 0, "unused")
            .with_split_sizes(SplitSizes::new(2 * n + 1, 2, 2));
        prop_assert!(plan_dataset(&spec).is_err());
    }
}
