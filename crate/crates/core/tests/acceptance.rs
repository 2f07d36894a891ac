//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line each and exits non-zero if any fails.
//!
//! Runs without the libtest harness so the summary lines always reach the
//! console: `cargo test --release --test acceptance`.

use std::collections::{BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use premack::datasets::{
    build_dataset, build_rich_regime, plan_dataset, plan_rich_regime, verify_dataset, DatasetSpec, Manifest,
    RichRegimeSpec, Split, SplitSizes, VerificationReport,
};
use premack::esbnprobe::{
    discriminator_accuracy, flip_sweep, gen_paired_sd, ProbeMode, DEFAULT_THRESHOLD, FLIP_CONDITIONS,
    PAIRS_PER_CONDITION,
};
use premack::geom::{Rect, Rgb, CANVAS};
use premack::oracle::connected_components;
use premack::raster::{decode_image, rasterize, shape_mask, Image};
use premack::rng::SeededRng;
use premack::score::{
    grade, plot_svg, read_predictions, render_attribution, summarize, AccuracyReport, ReportRow, ATTRIBUTION_FLOOR,
};
use premack::shapegen::VariantId;
use premack::tasks::{compose, Relation, TaskInstance, TaskKind};

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

/// Desk-scale divisor giving about 1000 images per build.
fn desk_divisor(task: TaskKind) -> u32 {
    match task {
        TaskKind::Mts | TaskKind::Sd => 40,
        TaskKind::Sosd => 140,
        TaskKind::Rmts => 280,
    }
}

struct Build {
    task: TaskKind,
    variant: VariantId,
    manifest: Manifest,
    report: VerificationReport,
}

fn main() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();
    let mut results: Vec<(u8, &str, Check)> = Vec::new();
    let mut run = |id: u8, name: &'static str, f: &mut dyn FnMut() -> Check| {
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let tag = if out.is_ok() { "PASS" } else { "FAIL" };
        let detail = match &out {
            Ok(d) | Err(d) => d,
        };
        println!("{tag} [{id:>2}] {name}: {detail} ({:.1}s)", t.elapsed().as_secs_f64());
        results.push((id, name, out));
    };

    run(1, "split-size fidelity", &mut || split_sizes(root));

    let mut builds: Vec<Build> = Vec::new();
    run(3, "oracle agreement (4 tasks x 14 variants)", &mut || {
        oracle_agreement(root, &mut builds)
    });
    run(2, "label balance", &mut || label_balance(&builds));
    run(4, "determinism across --jobs", &mut || determinism(root));
    run(5, "layout constraints", &mut || layout(&builds));
    run(6, "variant-rule audits", &mut || variant_audits());
    run(7, "pixel-cosine shortcut", &mut || shortcut());
    run(8, "scoring fidelity", &mut || scoring(root));
    run(9, "rich-regime composition", &mut || rich_regime(root));
    run(10, "attribution rendering", &mut || attribution());

    results.sort_by_key(|r| r.0);
    let failed: Vec<_> = results.iter().filter(|r| r.2.is_err()).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        for (id, name, _) in &failed {
            println!("failed: [{id}] {name}");
        }
        std::process::exit(1);
    }
}

// 1 ------------------------------------------------------------------------

fn split_sizes(root: &Path) -> Check {
    let expected = [
        (TaskKind::Mts, [28000, 5600, 11200]),
        (TaskKind::Sd, [28000, 5600, 11200]),
        (TaskKind::Sosd, [98000, 14000, 28000]),
        (TaskKind::Rmts, [196000, 28000, 56000]),
    ];
    // every default plan, all 56 combinations
    for (task, sizes) in expected {
        for variant in VariantId::ALL {
            let plan = plan_dataset(&DatasetSpec::new(task, variant, 1, root)).map_err(|e| e.to_string())?;
            for (split, n) in Split::ALL.into_iter().zip(sizes) {
                let got: Vec<u8> = plan.iter().filter(|p| p.split == split).map(|p| p.label).collect();
                ensure!(got.len() == n, "{task}/{variant} {split}: planned {} != {n}", got.len());
                ensure!(
                    got.iter().filter(|&&l| l == 0).count() * 2 == n,
                    "{task}/{variant} {split} unbalanced"
                );
            }
        }
        // desk scaling keeps the 70/10/20 or 62.5/12.5/25 proportions
        let d = desk_divisor(task);
        let s = SplitSizes::new(sizes[0], sizes[1], sizes[2]).scaled(d);
        ensure!(
            s.train * sizes[1] == s.val * sizes[0] && s.train * sizes[2] == s.test * sizes[0],
            "{task}: scaled sizes {s:?} lose proportions"
        );
    }

    // one real full-size build, counted from the emitted manifest and files
    let spec = DatasetSpec::new(TaskKind::Sd, VariantId::Original, 2024, root.join("full"));
    build_dataset(&spec).map_err(|e| e.to_string())?;
    let m = Manifest::load(spec.dataset_dir()).map_err(|e| e.to_string())?;
    let counts: Vec<usize> = Split::ALL.iter().map(|&s| m.split(s).count()).collect();
    ensure!(counts == [28000, 5600, 11200], "full SD manifest rows {counts:?}");
    for (s, n) in Split::ALL.into_iter().zip(&counts) {
        let files = std::fs::read_dir(spec.dataset_dir().join(s.name()))
            .map_err(|e| e.to_string())?
            .count();
        ensure!(files == *n, "{s}: {files} files for {n} rows");
        let (z, o) = m.balance(s);
        ensure!(z == o, "full SD {s} balance {z}/{o}");
    }
    std::fs::remove_dir_all(root.join("full")).ok();
    Ok("56 default plans exact; full SD build emitted 28000/5600/11200 files".into())
}

// 3 ------------------------------------------------------------------------

fn oracle_agreement(root: &Path, builds: &mut Vec<Build>) -> Check {
    let t = Instant::now();
    let mut images = 0;
    for task in TaskKind::ALL {
        for variant in VariantId::ALL {
            let spec =
                DatasetSpec::new(task, variant, 31337, root.join("desk")).with_desk_scale(Some(desk_divisor(task)));
            let manifest = build_dataset(&spec).map_err(|e| format!("{task}/{variant}: {e}"))?;
            ensure!(
                manifest.records.len() >= 1000,
                "{task}/{variant}: only {} images",
                manifest.records.len()
            );
            let report = verify_dataset(spec.dataset_dir()).map_err(|e| format!("{task}/{variant}: {e}"))?;
            ensure!(
                report.oracle_checked == report.records && report.disagreements.is_empty(),
                "{task}/{variant}: {} disagreements, first {:?}",
                report.disagreements.len(),
                report.disagreements.first()
            );
            images += report.records;
            builds.push(Build {
                task,
                variant,
                manifest,
                report,
            });
        }
    }
    let elapsed = t.elapsed();
    ensure!(images >= 56_000, "only {images} images");
    ensure!(elapsed < Duration::from_secs(600), "took {elapsed:?}");
    Ok(format!(
        "{images} images, 100% agreement, build+verify {:.0}s",
        elapsed.as_secs_f64()
    ))
}

// 2 ------------------------------------------------------------------------

fn label_balance(builds: &[Build]) -> Check {
    ensure!(builds.len() == 56, "only {} builds available", builds.len());
    let mut splits = 0;
    for b in builds {
        for s in &b.report.balance {
            ensure!(
                s.label0 == s.label1,
                "{}/{} {}: {}/{}",
                b.task,
                b.variant,
                s.split,
                s.label0,
                s.label1
            );
            splits += 1;
        }
    }
    ensure!(splits == 56 * 3, "{splits} splits checked");
    Ok(format!(
        "{splits} splits exactly 50/50 (full-size plans checked under [1])"
    ))
}

// 4 ------------------------------------------------------------------------

fn build_with_jobs(spec: &DatasetSpec, jobs: usize) -> premack::Result<Manifest> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("pool")
        .install(|| build_dataset(spec))
}

fn determinism(root: &Path) -> Check {
    let mut checked = 0;
    for (task, variant) in [
        (TaskKind::Mts, VariantId::Arrows),
        (TaskKind::Sd, VariantId::Scrambled),
        (TaskKind::Sosd, VariantId::RandomColor),
        (TaskKind::Rmts, VariantId::ConnectedCircles),
    ] {
        let spec = |dir: &str| {
            DatasetSpec::new(task, variant, 77, root.join(dir)).with_split_sizes(SplitSizes::new(120, 40, 40))
        };
        let (a, b) = (spec("det1"), spec("det4"));
        let ma = build_with_jobs(&a, 1).map_err(|e| e.to_string())?;
        let mb = build_with_jobs(&b, 4).map_err(|e| e.to_string())?;
        let (fa, fb) = (ma.fingerprint().unwrap(), mb.fingerprint().unwrap());
        ensure!(fa == fb, "{task}/{variant}: fingerprints differ");
        let read = |p: &Path| std::fs::read(p).unwrap();
        ensure!(
            read(&a.dataset_dir().join("manifest.csv")) == read(&b.dataset_dir().join("manifest.csv")),
            "manifest bytes differ"
        );
        for r in &ma.records {
            ensure!(
                read(&ma.image_path(r)) == read(&mb.image_path(r)),
                "{} differs between job counts",
                r.image_id
            );
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} image files byte-identical with --jobs 1 and 4 across 4 tasks"
    ))
}

// 5 ------------------------------------------------------------------------

/// Zero means every non-white pixel is off the border, inside one allowed
/// area, and never 8-adjacent to a pixel of another area.
fn layout_violations(img: &Image, areas: &[Rect]) -> usize {
    let n = CANVAS;
    let on = |x: i32, y: i32| img.get(x as usize, y as usize) != Rgb::WHITE;
    let area_of = |x: i32, y: i32| areas.iter().position(|a| a.contains(x, y));
    let mut bad = 0;
    for y in 0..n {
        for x in 0..n {
            if !on(x, y) {
                continue;
            }
            if x == 0 || y == 0 || x == n - 1 || y == n - 1 {
                bad += 1;
                continue;
            }
            let Some(a) = area_of(x, y) else {
                bad += 1;
                continue;
            };
            for (dx, dy) in [(1, -1), (1, 0), (1, 1), (0, 1)] {
                let (u, v) = (x + dx, y + dy);
                if on(u, v) && area_of(u, v) != Some(a) {
                    bad += 1;
                }
            }
        }
    }
    bad
}

fn layout(builds: &[Build]) -> Check {
    let subareas = [
        Rect::new(32, 0, 64, 64),
        Rect::new(0, 64, 64, 64),
        Rect::new(64, 64, 64, 64),
    ];
    let mut scanned = 0;
    for task in TaskKind::ALL {
        let areas: Vec<Rect> = match task {
            TaskKind::Mts | TaskKind::Rmts => subareas.to_vec(),
            TaskKind::Sd | TaskKind::Sosd => vec![Rect::canvas()],
        };
        let mut n = 0;
        // 1000 images per task, spread over all variants
        'outer: for b in builds.iter().filter(|b| b.task == task) {
            for r in b.manifest.records.iter().take(1000usize.div_ceil(14)) {
                let bytes = std::fs::read(b.manifest.image_path(r)).map_err(|e| e.to_string())?;
                let img = decode_image(&bytes).map_err(|e| e.to_string())?;
                let bad = layout_violations(&img, &areas);
                ensure!(bad == 0, "{}: {bad} layout violations", r.image_id);
                if matches!(task, TaskKind::Mts | TaskKind::Rmts) {
                    for a in &subareas {
                        let used = (a.y0..=a.y1())
                            .any(|y| (a.x0..=a.x1()).any(|x| img.get(x as usize, y as usize) != Rgb::WHITE));
                        ensure!(used, "{}: subarea {a:?} empty", r.image_id);
                    }
                }
                n += 1;
                if n == 1000 {
                    break 'outer;
                }
            }
        }
        ensure!(n == 1000, "{task}: only {n} images scanned");
        scanned += n;
    }
    Ok(format!("{scanned} images, zero border or subarea violations"))
}

// 6 ------------------------------------------------------------------------

fn instances(variant: VariantId, count: usize) -> Result<Vec<TaskInstance>, String> {
    let root = SeededRng::new(4242);
    (0..count)
        .map(|i| {
            let task = TaskKind::ALL[i % 4];
            let mut rng = root.split(&format!("audit/{variant}"), i as u64);
            compose(task, variant, (i / 4 % 2) as u8, &mut rng).map_err(|e| e.to_string())
        })
        .collect()
}

/// Tilt in degrees of a rasterized digital straight line, if it is one.
fn line_tilt(px: &[(i32, i32, Rgb)]) -> Option<u32> {
    let set: HashSet<(i32, i32)> = px.iter().map(|p| (p.0, p.1)).collect();
    let (x0, x1) = (px.iter().map(|p| p.0).min()?, px.iter().map(|p| p.0).max()?);
    let (y0, y1) = (px.iter().map(|p| p.1).min()?, px.iter().map(|p| p.1).max()?);
    let (w, h) = (x1 - x0, y1 - y0);
    if h == 0 {
        return Some(0);
    }
    if w == 0 {
        return Some(90);
    }
    if w == h && set.len() as i32 == w + 1 {
        if (0..=w).all(|i| set.contains(&(x0 + i, y1 - i))) {
            return Some(45);
        }
        if (0..=w).all(|i| set.contains(&(x0 + i, y0 + i))) {
            return Some(135);
        }
    }
    None
}

fn variant_audits() -> Check {
    const N: usize = 500;

    // straight lines: one tilt per image, objects are full lines
    for inst in instances(VariantId::StraightLines, N)? {
        let img = rasterize(&inst.scene);
        let comps = connected_components(&img, Rgb::WHITE);
        ensure!(comps.len() == inst.kind.object_count(), "line split into pieces");
        let tilts: BTreeSet<Option<u32>> = comps.iter().map(|c| line_tilt(c.pixels())).collect();
        ensure!(tilts.len() == 1, "mixed tilts {tilts:?}");
        let t = tilts.into_iter().next().flatten();
        ensure!(matches!(t, Some(0 | 45 | 90 | 135)), "tilt {t:?}");
        for c in &comps {
            let b = c.bounds();
            ensure!(c.len() as i32 == b.width.max(b.height), "line has gaps or thickness");
        }
    }

    // rectangles: outlines; a different pair differs in exactly one side
    for inst in instances(VariantId::Rectangles, N)? {
        let img = rasterize(&inst.scene);
        for c in connected_components(&img, Rgb::WHITE) {
            let (w, h) = (c.bounds().width, c.bounds().height);
            ensure!(c.len() as i32 == 2 * (w + h) - 4, "not a rectangle outline");
        }
        let dims: Vec<(i32, i32)> = inst
            .scene
            .objects
            .iter()
            .map(|o| {
                let b = shape_mask(&o.shape).bounds().unwrap();
                (b.width, b.height)
            })
            .collect();
        for i in 0..dims.len() {
            for j in i + 1..dims.len() {
                let diff = usize::from(dims[i].0 != dims[j].0) + usize::from(dims[i].1 != dims[j].1);
                ensure!(
                    diff != 2,
                    "rectangles {:?} and {:?} differ in both sides",
                    dims[i],
                    dims[j]
                );
            }
        }
        let pairs: Vec<(usize, usize)> = match inst.kind {
            TaskKind::Mts => vec![(0, 1), (0, 2)],
            TaskKind::Sd => vec![(0, 1)],
            TaskKind::Sosd => vec![(0, 1), (2, 3)],
            TaskKind::Rmts => vec![(0, 1), (2, 3), (4, 5)],
        };
        for (&(i, j), rel) in pairs.iter().zip(&inst.meta.relations) {
            let diff = usize::from(dims[i].0 != dims[j].0) + usize::from(dims[i].1 != dims[j].1);
            let want = usize::from(*rel == Relation::Different);
            ensure!(diff == want, "{rel:?} pair {:?} vs {:?}", dims[i], dims[j]);
        }
    }

    // random colour: every drawn pixel has one shared, clearly visible colour
    for inst in instances(VariantId::RandomColor, N)? {
        let img = rasterize(&inst.scene);
        let colors: BTreeSet<[u8; 3]> = img
            .as_raw()
            .chunks(3)
            .filter(|c| *c != Rgb::WHITE.0)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        ensure!(colors.len() == 1, "{} colours in one image", colors.len());
        let c = colors.into_iter().next().unwrap();
        ensure!(!c.iter().all(|&v| v > 200), "near-white colour {c:?}");
    }

    // wider: image pixels equal the union of 2x2-dilated 1-px strokes
    for inst in instances(VariantId::Wider, N)? {
        let img = rasterize(&inst.scene);
        let mut expected = HashSet::new();
        for o in &inst.scene.objects {
            ensure!(o.shape.stroke_width == 2, "stroke {}", o.shape.stroke_width);
            let thin = shape_mask(&o.shape.clone().with_stroke_width(1));
            for &(x, y) in thin.pixels() {
                for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    expected.insert((x + dx + o.offset.0, y + dy + o.offset.1));
                }
            }
        }
        let mut drawn = HashSet::new();
        for y in 0..CANVAS {
            for x in 0..CANVAS {
                if img.get(x as usize, y as usize) != Rgb::WHITE {
                    drawn.insert((x, y));
                }
            }
        }
        ensure!(drawn == expected, "wide stroke mask differs from dilated thin mask");
    }
    Ok(format!(
        "{N} images each for StraightLines, Rectangles, RandomColor, Wider; zero violations"
    ))
}

// 7 ------------------------------------------------------------------------

fn shortcut() -> Check {
    let t = Instant::now();
    let rng = SeededRng::new(12);
    let centered = gen_paired_sd(ProbeMode::Centered, 2000, &rng).map_err(|e| e.to_string())?;
    let translated = gen_paired_sd(ProbeMode::Translated, 2000, &rng).map_err(|e| e.to_string())?;
    let ca = discriminator_accuracy(&centered, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
    let ta = discriminator_accuracy(&translated, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
    ensure!(ca >= 0.999, "centered accuracy {ca}");
    ensure!((ta - 0.5).abs() <= 0.03, "translated accuracy {ta}");

    let rows = flip_sweep(&rng, PAIRS_PER_CONDITION).map_err(|e| e.to_string())?;
    ensure!(rows.len() == FLIP_CONDITIONS, "{} conditions", rows.len());
    ensure!(
        rows.iter().enumerate().all(|(k, r)| r.k == k && r.pairs == 100),
        "condition table malformed"
    );
    ensure!(rows[0].mean == 1.0 && rows[0].sd == 0.0, "k=0 mean {}", rows[0].mean);

    // non-increasing trend: adjacent means may only rise within sampling
    // noise, and means of consecutive 50-condition windows strictly fall
    let mut worst_rise = 0.0f64;
    for w in rows.windows(2) {
        let se = ((w[0].sd.powi(2) + w[1].sd.powi(2)) / 100.0).sqrt();
        let rise = w[1].mean - w[0].mean;
        ensure!(rise <= 5.0 * se + 1e-12, "k={} rises by {rise} (se {se})", w[1].k);
        worst_rise = worst_rise.max(rise);
    }
    let windows: Vec<f64> = rows[1..]
        .chunks(50)
        .map(|c| c.iter().map(|r| r.mean).sum::<f64>() / c.len() as f64)
        .collect();
    ensure!(windows.windows(2).all(|w| w[1] < w[0]), "window means not decreasing");
    ensure!(
        rows.iter().all(|r| r.k == 0 || r.max < 1.0),
        "a flipped pair scored 1.0"
    );
    let elapsed = t.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!(
        "centered {:.2}%, translated {:.2}%, 1001x100 table, k=1000 mean {:.4}, largest adjacent rise {worst_rise:.2e}",
        100.0 * ca,
        100.0 * ta,
        rows[1000].mean
    ))
}

// 8 ------------------------------------------------------------------------

const FIXTURE_MANIFEST: &str = "\
image_id,path,split,label,seed,sha256,task,variant
a,test/a.png,test,0,1,x,sd,original
b,test/b.png,test,1,2,x,sd,original
c,test/c.png,test,0,3,x,sd,original
d,test/d.png,test,1,4,x,sd,original
e,test/e.png,test,0,5,x,sd,original
f,test/f.png,test,1,6,x,sd,original
g,test/g.png,test,0,7,x,sd,original
h,test/h.png,test,1,8,x,sd,original
i,test/i.png,test,0,9,x,sd,original
j,test/j.png,test,1,10,x,sd,original
";

// wrong on c, f and j
const FIXTURE_PREDICTIONS: &str = "\
model,seed,image_id,predicted_label
m,0,a,0
m,0,b,1
m,0,c,1
m,0,d,1
m,0,e,0
m,0,f,0
m,0,g,0
m,0,h,1
m,0,i,0
m,0,j,0
";

fn scoring(root: &Path) -> Check {
    let dir = root.join("fixture");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("manifest.csv"), FIXTURE_MANIFEST).unwrap();
    std::fs::write(
        dir.join("spec.json"),
        r#"{"format_version":1,"kind":"dataset","task":"sd","variants":["original"],"split_sizes":{"train":0,"val":0,"test":10},"desk_scale":null,"master_seed":0}"#,
    )
    .unwrap();
    std::fs::write(dir.join("predictions.csv"), FIXTURE_PREDICTIONS).unwrap();
    let m = Manifest::load(&dir).map_err(|e| e.to_string())?;
    let preds = read_predictions(dir.join("predictions.csv")).map_err(|e| e.to_string())?;
    let g = grade(&preds, &m, Split::Test).map_err(|e| e.to_string())?;
    ensure!(
        g.len() == 1 && g[0].accuracy == 0.7,
        "fixture accuracy {:?}",
        g.first().map(|c| c.accuracy)
    );

    let (mean, sem) = summarize(&[0.8, 0.9]).map_err(|e| e.to_string())?;
    ensure!(
        (mean - 0.85).abs() <= 1e-12 && (sem - 0.05).abs() <= 1e-12,
        "summarize gave ({mean}, {sem})"
    );

    // rich-regime style report covering all 14 variants
    let trained = RichRegimeSpec::DEFAULT_TRAIN;
    let rows: Vec<ReportRow> = VariantId::ALL
        .iter()
        .rev()
        .map(|&v| ReportRow {
            model: "gamr".into(),
            task: TaskKind::Sd,
            variant: v,
            n_seeds: 5,
            mean: 0.5 + 0.03 * v.order() as f64,
            sem: Some(0.01),
            trained: trained.contains(&v),
            high: false,
        })
        .collect();
    let svg = plot_svg(&AccuracyReport { cells: vec![], rows }).map_err(|e| e.to_string())?;
    let order: Vec<&str> = svg
        .split(r#"class="bar""#)
        .skip(1)
        .filter_map(|s| s.split(r#"data-variant=""#).nth(1)?.split('"').next())
        .collect();
    let want: Vec<&str> = VariantId::ALL.iter().map(|v| v.name()).collect();
    ensure!(order == want, "bar order {order:?}");
    ensure!(svg.matches(r#"class="sem""#).count() == 14, "missing SEM bars");
    ensure!(svg.matches(r#"class="chance""#).count() == 1, "missing chance line");
    let parts: Vec<&str> = svg.split(r#"fill="url(#hatch)""#).collect();
    // each hatch element carries its variant just before the fill attribute
    let hatched: BTreeSet<&str> = parts[..parts.len() - 1]
        .iter()
        .filter_map(|s| s.rsplit(r#"data-variant=""#).next()?.split('"').next())
        .collect();
    let want_hatched: BTreeSet<&str> = trained.iter().map(|v| v.name()).collect();
    ensure!(hatched == want_hatched, "hatched {hatched:?}");
    Ok("fixture 7/10 = 0.7, summarize (0.85, 0.05), 14 bars in dataset order with SEM, 9 hatched".into())
}

// 9 ------------------------------------------------------------------------

fn rich_regime(root: &Path) -> Check {
    let spec = RichRegimeSpec::new(TaskKind::Sd, 5, root.join("rich-full"));
    let plan = plan_rich_regime(&spec).map_err(|e| e.to_string())?;
    let train: Vec<_> = plan.iter().filter(|p| p.split == Split::Train).collect();
    ensure!(train.len() == 252_000, "composite train has {} records", train.len());
    let train_variants: BTreeSet<VariantId> = train.iter().map(|p| p.variant).collect();
    let want: BTreeSet<VariantId> = [
        VariantId::Original,
        VariantId::Irregular,
        VariantId::Regular,
        VariantId::Open,
        VariantId::Wider,
        VariantId::RandomColor,
        VariantId::Filled,
        VariantId::Lines,
        VariantId::Arrows,
    ]
    .into();
    ensure!(train_variants == want, "train variants {train_variants:?}");
    for v in &want {
        ensure!(
            train.iter().filter(|p| p.variant == *v).count() == 28_000,
            "{v} contributes wrong count"
        );
    }
    let test_variants: BTreeSet<VariantId> = plan
        .iter()
        .filter(|p| p.split == Split::Test)
        .map(|p| p.variant)
        .collect();
    let held: BTreeSet<VariantId> = [
        VariantId::Rectangles,
        VariantId::StraightLines,
        VariantId::ConnectedSquares,
        VariantId::ConnectedCircles,
    ]
    .into();
    ensure!(test_variants == held, "test variants {test_variants:?}");
    ensure!(
        plan.iter().filter(|p| p.split == Split::Test).count() == 4 * 11_200,
        "held-out test size"
    );

    // the emitted composite manifest keeps the same structure
    let mut desk = RichRegimeSpec::new(TaskKind::Sd, 5, root.join("rich-desk"));
    desk.desk_scale = Some(200);
    let m = build_rich_regime(&desk).map_err(|e| e.to_string())?;
    let on_disk = Manifest::load(desk.regime_dir()).map_err(|e| e.to_string())?;
    let tv: BTreeSet<VariantId> = on_disk.split(Split::Train).map(|r| r.variant).collect();
    let hv: BTreeSet<VariantId> = on_disk.split(Split::Test).map(|r| r.variant).collect();
    ensure!(tv == want && hv == held, "emitted composite variants {tv:?} / {hv:?}");
    ensure!(
        on_disk.split(Split::Train).count() == 9 * 140,
        "emitted composite train size"
    );
    let report = verify_dataset(desk.regime_dir()).map_err(|e| e.to_string())?;
    ensure!(report.passed(), "composite verification failed");
    ensure!(m.records == on_disk.records, "composite manifest round trip");
    Ok("252000 planned train records over the 9 variants, held-out tests for 4; desk composite verified".into())
}

// 10 -----------------------------------------------------------------------

fn luminance(c: Rgb) -> f64 {
    0.2126 * c.0[0] as f64 + 0.7152 * c.0[1] as f64 + 0.0722 * c.0[2] as f64
}

fn attribution() -> Check {
    use rand::Rng;
    let mut rng = SeededRng::new(8);
    let n = Image::WIDTH * Image::HEIGHT;
    // log-uniform magnitudes over 1e-8..1e1 with random signs
    let values: Vec<f64> = (0..n)
        .map(|_| {
            let m = 10f64.powf(rng.gen_range(-8.0..1.0));
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    let img = render_attribution(&values).map_err(|e| e.to_string())?;
    let color = |i: usize| img.get(i % Image::WIDTH, i / Image::WIDTH);

    let floor: BTreeSet<[u8; 3]> = (0..n)
        .filter(|&i| values[i].abs() < ATTRIBUTION_FLOOR)
        .map(|i| color(i).0)
        .collect();
    ensure!(floor.len() == 1, "{} colours below the clip floor", floor.len());

    let mut above: Vec<(f64, Rgb)> = (0..n)
        .filter(|&i| values[i].abs() >= ATTRIBUTION_FLOOR)
        .map(|i| (values[i].abs(), color(i)))
        .collect();
    above.sort_by(|a, b| a.0.total_cmp(&b.0));
    let floor_color = Rgb(*floor.iter().next().unwrap());
    let mut prev = luminance(floor_color);
    let mut inversions = 0;
    for &(_, c) in &above {
        let l = luminance(c);
        if l < prev {
            inversions += 1;
        }
        prev = l;
    }
    ensure!(inversions == 0, "{inversions} colour rank inversions");
    let distinct: HashSet<[u8; 3]> = above.iter().map(|a| a.1 .0).collect();
    ensure!(
        distinct.len() > 100,
        "only {} distinct colours above the floor",
        distinct.len()
    );

    // uniform scaling keeps the rank order
    let scaled: Vec<f64> = values.iter().map(|v| v * 37.0).collect();
    let img2 = render_attribution(&scaled).map_err(|e| e.to_string())?;
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (scaled[i].abs(), luminance(img2.get(i % Image::WIDTH, i / Image::WIDTH))))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    ensure!(
        pairs.windows(2).all(|w| w[1].1 >= w[0].1),
        "rank order lost under scaling"
    );
    Ok(format!(
        "{} clipped pixels share one colour, {} ranked pixels with zero inversions",
        n - above.len(),
        above.len()
    ))
}
