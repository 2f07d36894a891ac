//! Reproducible dataset builds: split planning, parallel image emission,
//! manifests, verification and the multi-variant rich training regime.
//!
//! Layout of a single build:
//!
//! ```text
//! <out>/<task>/<variant>/manifest.csv
//! <out>/<task>/<variant>/spec.json
//! <out>/<task>/<variant>/{train,val,test}/NNNNNN.png
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::oracle;
use crate::raster::{decode_image, encode_image, rasterize};
use crate::rng::SeededRng;
use crate::shapegen::VariantId;
use crate::tasks::{compose, TaskKind};

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const SPEC_FILE: &str = "spec.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Usage(format!("unknown split '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSizes {
    pub const fn new(train: usize, val: usize, test: usize) -> Self {
        SplitSizes { train, val, test }
    }

    pub fn default_for(task: TaskKind) -> Self {
        match task {
            TaskKind::Mts | TaskKind::Sd => SplitSizes::new(28_000, 5_600, 11_200),
            TaskKind::Sosd => SplitSizes::new(98_000, 14_000, 28_000),
            TaskKind::Rmts => SplitSizes::new(196_000, 28_000, 56_000),
        }
    }

    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    /// Divide every split by `divisor`, rounding down to an even count. A
    /// non-empty split never shrinks below 2 images.
    pub fn scaled(&self, divisor: u32) -> SplitSizes {
        let d = divisor.max(1) as usize;
        let f = |n: usize| if n == 0 { 0 } else { ((n / d) & !1).max(2) };
        SplitSizes::new(f(self.train), f(self.val), f(self.test))
    }

    pub fn validate(&self) -> Result<()> {
        for s in Split::ALL {
            if !self.get(s).is_multiple_of(2) {
                return Err(Error::InvalidParams(format!(
                    "{s} size {} is odd; labels cannot be balanced",
                    self.get(s)
                )));
            }
        }
        Ok(())
    }
}

impl FromStr for SplitSizes {
    type Err = Error;

    /// Parses `train,val,test`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Usage(format!("split sizes must look like 28000,5600,11200, got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let n: Vec<usize> = parts
            .iter()
            .map(|p| p.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        Ok(SplitSizes::new(n[0], n[1], n[2]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub task: TaskKind,
    pub variant: VariantId,
    pub split_sizes: SplitSizes,
    pub master_seed: u64,
    pub output_path: PathBuf,
    pub desk_scale: Option<u32>,
}

impl DatasetSpec {
    /// Spec with the task's default split sizes.
    pub fn new(task: TaskKind, variant: VariantId, master_seed: u64, output_path: impl Into<PathBuf>) -> Self {
        DatasetSpec {
            task,
            variant,
            split_sizes: SplitSizes::default_for(task),
            master_seed,
            output_path: output_path.into(),
            desk_scale: None,
        }
    }

    pub fn with_split_sizes(mut self, sizes: SplitSizes) -> Self {
        self.split_sizes = sizes;
        self
    }

    pub fn with_desk_scale(mut self, divisor: Option<u32>) -> Self {
        self.desk_scale = divisor;
        self
    }

    /// Split sizes after the desk-scale divisor.
    pub fn effective_sizes(&self) -> SplitSizes {
        match self.desk_scale {
            Some(d) if d > 1 => self.split_sizes.scaled(d),
            _ => self.split_sizes,
        }
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.output_path.join(self.task.name()).join(self.variant.name())
    }

    fn echo(&self) -> SpecEcho {
        SpecEcho {
            format_version: FORMAT_VERSION,
            kind: "dataset".into(),
            task: self.task,
            variants: vec![self.variant],
            heldout_variants: Vec::new(),
            split_sizes: self.effective_sizes(),
            desk_scale: self.desk_scale,
            master_seed: self.master_seed,
        }
    }
}

/// Structured echo of the build parameters, written next to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecEcho {
    pub format_version: u32,
    /// `dataset` for single builds, `rich` for composites.
    pub kind: String,
    pub task: TaskKind,
    pub variants: Vec<VariantId>,
    #[serde(default)]
    pub heldout_variants: Vec<VariantId>,
    /// Per-component split sizes, after desk scaling.
    pub split_sizes: SplitSizes,
    pub desk_scale: Option<u32>,
    pub master_seed: u64,
}

/// One image before it has been generated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedImage {
    pub image_id: String,
    pub path: String,
    pub split: Split,
    pub index: usize,
    pub label: u8,
    pub seed: u64,
    pub task: TaskKind,
    pub variant: VariantId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub image_id: String,
    /// Relative to the directory holding the manifest.
    pub path: String,
    pub split: Split,
    pub label: u8,
    pub seed: u64,
    pub sha256: String,
    pub task: TaskKind,
    pub variant: VariantId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
    pub echo: SpecEcho,
    /// Directory the record paths are relative to.
    pub root: PathBuf,
}

impl Manifest {
    /// Load from a manifest file or from the directory containing one.
    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let (root, file) = if path.is_dir() {
            (path.to_path_buf(), path.join(MANIFEST_FILE))
        } else {
            let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (root, path.to_path_buf())
        };
        let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
        let mut reader = csv::Reader::from_reader(bytes.as_slice());
        let records = reader
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestRecord>, _>>()?;
        let spec_path = root.join(SPEC_FILE);
        let spec = fs::read(&spec_path).map_err(|e| Error::io(&spec_path, e))?;
        let echo = serde_json::from_slice(&spec)?;
        Ok(Manifest { records, echo, root })
    }

    /// Write `manifest.csv` and `spec.json` into `root`.
    pub fn write(&self) -> Result<()> {
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let file = self.root.join(MANIFEST_FILE);
        fs::write(&file, self.to_csv()?).map_err(|e| Error::io(&file, e))?;
        let spec = self.root.join(SPEC_FILE);
        let mut json = serde_json::to_vec_pretty(&self.echo)?;
        json.push(b'\n');
        fs::write(&spec, json).map_err(|e| Error::io(&spec, e))
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)?;
        }
        w.into_inner()
            .map_err(|e| Error::io(self.root.join(MANIFEST_FILE), e.into_error()))
    }

    /// Hex sha256 over the manifest bytes. Image checksums are part of the
    /// manifest, so equal fingerprints imply byte-identical image files.
    pub fn fingerprint(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_csv()?)))
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn image_path(&self, record: &ManifestRecord) -> PathBuf {
        self.root.join(&record.path)
    }

    /// Label counts `(zeros, ones)` for a split.
    pub fn balance(&self, split: Split) -> (usize, usize) {
        self.split(split)
            .fold((0, 0), |(z, o), r| if r.label == 0 { (z + 1, o) } else { (z, o + 1) })
    }

    /// Shuffled batches of record indices where every batch draws from a
    /// single source variant. Batch order is shuffled across variants.
    pub fn single_dataset_batches(&self, split: Split, batch_size: usize, rng: &mut SeededRng) -> Vec<Vec<usize>> {
        let mut by_variant: BTreeMap<VariantId, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate().filter(|(_, r)| r.split == split) {
            by_variant.entry(r.variant).or_default().push(i);
        }
        let mut batches = Vec::new();
        for mut idx in by_variant.into_values() {
            idx.shuffle(rng);
            batches.extend(idx.chunks(batch_size.max(1)).map(<[usize]>::to_vec));
        }
        batches.shuffle(rng);
        batches
    }
}

/// Progress notification emitted while building or verifying.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress<'a> {
    pub stage: &'a str,
    pub done: usize,
    pub total: usize,
}

fn split_key(task: TaskKind, variant: VariantId, split: Split) -> String {
    format!("{task}/{variant}/{split}")
}

/// Images, labels and per-image seeds of a build, without generating
/// anything. Labels are half 0 and half 1 per split under a seeded shuffle.
pub fn plan_dataset(spec: &DatasetSpec) -> Result<Vec<PlannedImage>> {
    let sizes = spec.effective_sizes();
    sizes.validate()?;
    let master = SeededRng::new(spec.master_seed);
    let mut plan = Vec::with_capacity(sizes.total());
    for split in Split::ALL {
        let n = sizes.get(split);
        let key = split_key(spec.task, spec.variant, split);
        let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i >= n / 2)).collect();
        labels.shuffle(&mut master.split(&format!("{key}/labels"), 0));
        for (index, label) in labels.into_iter().enumerate() {
            plan.push(PlannedImage {
                image_id: format!("{}-{}-{}-{index:06}", spec.task, spec.variant, split),
                path: format!("{split}/{index:06}.png"),
                split,
                index,
                label,
                seed: master.split_seed(&key, index as u64),
                task: spec.task,
                variant: spec.variant,
            });
        }
    }
    Ok(plan)
}

/// Generate the PNG bytes of one planned image.
pub fn render_planned(p: &PlannedImage) -> Result<Vec<u8>> {
    let mut rng = SeededRng::new(p.seed);
    let inst = compose(p.task, p.variant, p.label, &mut rng).map_err(|e| Error::ImageGeneration {
        split: p.split.to_string(),
        index: p.index,
        source: Box::new(e),
    })?;
    Ok(encode_image(&rasterize(&inst.scene)))
}

pub fn build_dataset(spec: &DatasetSpec) -> Result<Manifest> {
    build_dataset_with(spec, &|_| {})
}

/// Build with a progress callback. Parallel over images on the current
/// rayon pool; the output does not depend on the pool size.
pub fn build_dataset_with(spec: &DatasetSpec, progress: &(dyn Fn(Progress) + Sync)) -> Result<Manifest> {
    let plan = plan_dataset(spec)?;
    let root = spec.dataset_dir();
    let records = emit(&root, &plan, "generate", progress)?;
    let manifest = Manifest {
        records,
        echo: spec.echo(),
        root,
    };
    manifest.write()?;
    Ok(manifest)
}

fn emit(
    root: &Path,
    plan: &[PlannedImage],
    stage: &str,
    progress: &(dyn Fn(Progress) + Sync),
) -> Result<Vec<ManifestRecord>> {
    for split in Split::ALL {
        if plan.iter().any(|p| p.split == split) {
            let dir = root.join(split.name());
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
    }
    let total = plan.len();
    let done = AtomicUsize::new(0);
    let step = (total / 20).max(1);
    progress(Progress { stage, done: 0, total });
    let records = plan
        .par_iter()
        .map(|p| {
            let bytes = render_planned(p)?;
            let path = root.join(&p.path);
            fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
            let n = done.fetch_add(1, Ordering::Relaxed) + 1;
            if n.is_multiple_of(step) && n != total {
                progress(Progress { stage, done: n, total });
            }
            Ok(ManifestRecord {
                image_id: p.image_id.clone(),
                path: p.path.clone(),
                split: p.split,
                label: p.label,
                seed: p.seed,
                sha256: hex::encode(Sha256::digest(&bytes)),
                task: p.task,
                variant: p.variant,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    progress(Progress {
        stage,
        done: total,
        total,
    });
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Re-solve every n-th record with the oracle; 0 disables the oracle.
    pub oracle_every: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { oracle_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitBalance {
    pub split: Split,
    pub label0: usize,
    pub label1: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub image_id: String,
    pub stored: u8,
    /// `None` when the oracle could not solve the image.
    pub solved: Option<u8>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub records: usize,
    pub checksums_ok: usize,
    pub balance: Vec<SplitBalance>,
    pub oracle_checked: usize,
    pub oracle_agreed: usize,
    pub disagreements: Vec<Disagreement>,
    pub fingerprint: String,
}

impl VerificationReport {
    pub fn balanced(&self) -> bool {
        self.balance.iter().all(|b| b.label0 == b.label1)
    }

    pub fn agreement(&self) -> f64 {
        if self.oracle_checked == 0 {
            1.0
        } else {
            self.oracle_agreed as f64 / self.oracle_checked as f64
        }
    }

    pub fn passed(&self) -> bool {
        self.checksums_ok == self.records && self.balanced() && self.disagreements.is_empty()
    }
}

pub fn verify_dataset(dir: impl AsRef<Path>) -> Result<VerificationReport> {
    verify_dataset_with(dir, VerifyOptions::default(), &|_| {})
}

/// Check files and checksums of every record, label balance per split and
/// oracle agreement. A missing or altered image is an error naming the
/// first offending record in manifest order; oracle disagreements are
/// collected in the report instead.
pub fn verify_dataset_with(
    dir: impl AsRef<Path>,
    opts: VerifyOptions,
    progress: &(dyn Fn(Progress) + Sync),
) -> Result<VerificationReport> {
    let manifest = Manifest::load(dir)?;
    let total = manifest.records.len();
    let done = AtomicUsize::new(0);
    let step = (total / 20).max(1);
    progress(Progress {
        stage: "verify",
        done: 0,
        total,
    });

    let mut seen = HashSet::new();
    for r in &manifest.records {
        if !seen.insert(r.image_id.as_str()) {
            return Err(corrupt(r, "duplicate image_id"));
        }
    }

    let outcomes = manifest
        .records
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let path = manifest.image_path(r);
            let bytes = fs::read(&path).map_err(|e| corrupt(r, &format!("cannot read {}: {e}", path.display())))?;
            if hex::encode(Sha256::digest(&bytes)) != r.sha256 {
                return Err(corrupt(r, "checksum mismatch"));
            }
            let n = done.fetch_add(1, Ordering::Relaxed) + 1;
            if n.is_multiple_of(step) && n != total {
                progress(Progress {
                    stage: "verify",
                    done: n,
                    total,
                });
            }
            if opts.oracle_every == 0 || i % opts.oracle_every != 0 {
                return Ok(None);
            }
            let img = decode_image(&bytes).map_err(|e| corrupt(r, &e.to_string()))?;
            Ok(Some(match oracle::solve(&img, r.task) {
                Ok(l) if l == r.label => None,
                Ok(l) => Some(Disagreement {
                    image_id: r.image_id.clone(),
                    stored: r.label,
                    solved: Some(l),
                    reason: "label mismatch".into(),
                }),
                Err(e) => Some(Disagreement {
                    image_id: r.image_id.clone(),
                    stored: r.label,
                    solved: None,
                    reason: e.to_string(),
                }),
            }))
        })
        .collect::<Result<Vec<Option<Option<Disagreement>>>>>()?;
    progress(Progress {
        stage: "verify",
        done: total,
        total,
    });

    let oracle_checked = outcomes.iter().filter(|o| o.is_some()).count();
    let disagreements: Vec<Disagreement> = outcomes.into_iter().flatten().flatten().collect();
    let balance = Split::ALL
        .into_iter()
        .filter(|&s| manifest.split(s).next().is_some())
        .map(|s| {
            let (label0, label1) = manifest.balance(s);
            SplitBalance {
                split: s,
                label0,
                label1,
            }
        })
        .collect();
    Ok(VerificationReport {
        records: total,
        checksums_ok: total,
        balance,
        oracle_checked,
        oracle_agreed: oracle_checked - disagreements.len(),
        disagreements,
        fingerprint: manifest.fingerprint()?,
    })
}

fn corrupt(r: &ManifestRecord, reason: &str) -> Error {
    Error::CorruptDataset {
        image_id: r.image_id.clone(),
        reason: reason.to_string(),
    }
}

/// Multi-variant training composition: train and val splits of the training
/// variants, test splits of the held-out ones.
#[derive(Debug, Clone, PartialEq)]
pub struct RichRegimeSpec {
    pub task: TaskKind,
    pub train_variants: Vec<VariantId>,
    pub heldout_variants: Vec<VariantId>,
    pub master_seed: u64,
    pub output_path: PathBuf,
    /// Per-component sizes; defaults to the task's standard splits.
    pub split_sizes: SplitSizes,
    pub desk_scale: Option<u32>,
}

impl RichRegimeSpec {
    pub const DEFAULT_TRAIN: [VariantId; 9] = [
        VariantId::Original,
        VariantId::Irregular,
        VariantId::Regular,
        VariantId::Open,
        VariantId::Wider,
        VariantId::RandomColor,
        VariantId::Filled,
        VariantId::Lines,
        VariantId::Arrows,
    ];

    pub const DEFAULT_HELDOUT: [VariantId; 4] = [
        VariantId::Rectangles,
        VariantId::StraightLines,
        VariantId::ConnectedSquares,
        VariantId::ConnectedCircles,
    ];

    pub fn new(task: TaskKind, master_seed: u64, output_path: impl Into<PathBuf>) -> Self {
        RichRegimeSpec {
            task,
            train_variants: Self::DEFAULT_TRAIN.to_vec(),
            heldout_variants: Self::DEFAULT_HELDOUT.to_vec(),
            master_seed,
            output_path: output_path.into(),
            split_sizes: SplitSizes::default_for(task),
            desk_scale: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_variants.is_empty() {
            return Err(Error::InvalidParams(
                "rich regime needs at least one training variant".into(),
            ));
        }
        let train: HashSet<_> = self.train_variants.iter().collect();
        if train.len() != self.train_variants.len() {
            return Err(Error::InvalidParams("duplicate training variant".into()));
        }
        if let Some(v) = self.heldout_variants.iter().find(|v| train.contains(v)) {
            return Err(Error::InvalidParams(format!("{v} is both trained and held out")));
        }
        Ok(())
    }

    /// Directory of the composite manifest.
    pub fn regime_dir(&self) -> PathBuf {
        self.output_path.join("rich").join(self.task.name())
    }

    fn components(&self) -> Vec<DatasetSpec> {
        let s = self.split_sizes;
        let base = |v: VariantId, sizes: SplitSizes| DatasetSpec {
            task: self.task,
            variant: v,
            split_sizes: sizes,
            master_seed: self.master_seed,
            output_path: self.output_path.join("rich"),
            desk_scale: self.desk_scale,
        };
        let train = self
            .train_variants
            .iter()
            .map(|&v| base(v, SplitSizes::new(s.train, s.val, 0)));
        let held = self
            .heldout_variants
            .iter()
            .map(|&v| base(v, SplitSizes::new(0, 0, s.test)));
        train.chain(held).collect()
    }

    fn echo(&self) -> SpecEcho {
        SpecEcho {
            format_version: FORMAT_VERSION,
            kind: "rich".into(),
            task: self.task,
            variants: self.train_variants.clone(),
            heldout_variants: self.heldout_variants.clone(),
            split_sizes: match self.desk_scale {
                Some(d) if d > 1 => self.split_sizes.scaled(d),
                _ => self.split_sizes,
            },
            desk_scale: self.desk_scale,
            master_seed: self.master_seed,
        }
    }
}

/// The composite plan, with paths relative to [`RichRegimeSpec::regime_dir`].
/// Component images use the same seeds as standalone builds of the variant.
pub fn plan_rich_regime(spec: &RichRegimeSpec) -> Result<Vec<PlannedImage>> {
    spec.validate()?;
    let mut plan = Vec::new();
    for c in spec.components() {
        plan.extend(plan_dataset(&c)?.into_iter().map(|mut p| {
            p.path = format!("{}/{}", c.variant, p.path);
            p
        }));
    }
    Ok(plan)
}

pub fn build_rich_regime(spec: &RichRegimeSpec) -> Result<Manifest> {
    build_rich_regime_with(spec, &|_| {})
}

/// Build every component under `<out>/rich/<task>/<variant>` and write a
/// composite manifest at `<out>/rich/<task>` whose records keep their
/// source variant.
pub fn build_rich_regime_with(spec: &RichRegimeSpec, progress: &(dyn Fn(Progress) + Sync)) -> Result<Manifest> {
    spec.validate()?;
    let mut records = Vec::new();
    for c in spec.components() {
        let stage = format!("generate {}", c.variant);
        let m = build_dataset_with(&c, &|p| progress(Progress { stage: &stage, ..p }))?;
        records.extend(m.records.into_iter().map(|mut r| {
            r.path = format!("{}/{}", c.variant, r.path);
            r
        }));
    }
    let manifest = Manifest {
        records,
        echo: spec.echo(),
        root: spec.regime_dir(),
    };
    manifest.write()?;
    Ok(manifest)
}
