//! Grading of external predictions, seed aggregation, grouped-bar plots and
//! attribution heatmaps.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{Manifest, Split};
use crate::error::{Error, Result};
use crate::geom::Rgb;
use crate::raster::Image;
use crate::shapegen::VariantId;
use crate::tasks::TaskKind;

/// Accuracy above which a cell is flagged as high.
pub const HIGH_ACCURACY: f64 = 0.9;

/// Attribution magnitudes below this floor share the lowest colour.
pub const ATTRIBUTION_FLOOR: f64 = 1e-4;

/// Number of distinct heatmap colours. Chosen so that consecutive levels
/// have strictly increasing luminance after 8-bit rounding.
pub const ATTRIBUTION_LEVELS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub seed: String,
    pub image_id: String,
    pub predicted_label: u8,
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let recs = csv::Reader::from_reader(bytes.as_slice())
        .deserialize()
        .collect::<std::result::Result<Vec<PredictionRecord>, _>>()?;
    Ok(recs)
}

pub fn write_predictions(path: impl AsRef<Path>, preds: &[PredictionRecord]) -> Result<()> {
    write_csv(path.as_ref(), preds)
}

/// Accuracy of one (model, seed) run on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedAccuracy {
    pub model: String,
    pub seed: String,
    pub task: TaskKind,
    pub variant: VariantId,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Accuracy of every (model, seed) run on `split`. Composite manifests are
/// graded per source variant. Every image of the split needs exactly one
/// prediction per run.
pub fn grade(preds: &[PredictionRecord], manifest: &Manifest, split: Split) -> Result<Vec<SeedAccuracy>> {
    let records: Vec<_> = manifest.split(split).collect();
    let index: HashMap<&str, usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.image_id.as_str(), i))
        .collect();

    let mut runs: BTreeMap<(&str, &str), Vec<&PredictionRecord>> = BTreeMap::new();
    for p in preds {
        if p.predicted_label > 1 {
            return Err(Error::InvalidParams(format!(
                "prediction {} for {} is not 0 or 1",
                p.predicted_label, p.image_id
            )));
        }
        runs.entry((p.model.as_str(), p.seed.as_str())).or_default().push(p);
    }

    let graded = runs
        .into_par_iter()
        .map(|((model, seed), run)| {
            let mut got: Vec<Option<u8>> = vec![None; records.len()];
            for p in run {
                let &i = index
                    .get(p.image_id.as_str())
                    .ok_or_else(|| Error::UnknownImage(p.image_id.clone()))?;
                if got[i].replace(p.predicted_label).is_some() {
                    return Err(Error::DuplicatePrediction(p.image_id.clone()));
                }
            }
            if let Some(i) = got.iter().position(Option::is_none) {
                return Err(Error::MissingPrediction(records[i].image_id.clone()));
            }
            let mut per: BTreeMap<(TaskKind, VariantId), (usize, usize)> = BTreeMap::new();
            for (r, g) in records.iter().zip(&got) {
                let e = per.entry((r.task, r.variant)).or_default();
                e.0 += usize::from(Some(r.label) == *g);
                e.1 += 1;
            }
            Ok(per
                .into_iter()
                .map(|((task, variant), (correct, total))| SeedAccuracy {
                    model: model.to_string(),
                    seed: seed.to_string(),
                    task,
                    variant,
                    correct,
                    total,
                    accuracy: correct as f64 / total as f64,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(graded.into_iter().flatten().collect())
}

/// Mean and standard error of the mean (sample sd / sqrt(n)).
pub fn summarize(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientSeeds(n));
    }
    let rough = values.iter().sum::<f64>() / n as f64;
    // second pass removes the rounding error of the first
    let mean = rough + values.iter().map(|v| v - rough).sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub task: TaskKind,
    pub variant: VariantId,
    pub n_seeds: usize,
    pub mean: f64,
    /// Absent for a single seed.
    pub sem: Option<f64>,
    /// Whether the variant was part of the training data.
    pub trained: bool,
    pub high: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AccuracyReport {
    pub cells: Vec<SeedAccuracy>,
    pub rows: Vec<ReportRow>,
}

impl AccuracyReport {
    /// Aggregate per-seed accuracies over seeds. `trained` marks the
    /// variants seen in training; pass the training set of a rich regime or
    /// an empty slice.
    pub fn from_cells(cells: Vec<SeedAccuracy>, trained: &[VariantId]) -> AccuracyReport {
        let mut groups: BTreeMap<(TaskKind, String, VariantId), Vec<f64>> = BTreeMap::new();
        for c in &cells {
            groups
                .entry((c.task, c.model.clone(), c.variant))
                .or_default()
                .push(c.accuracy);
        }
        let rows = groups
            .into_iter()
            .map(|((task, model, variant), accs)| {
                let (mean, sem) = match summarize(&accs) {
                    Ok((m, s)) => (m, Some(s)),
                    Err(_) => (accs[0], None),
                };
                ReportRow {
                    model,
                    task,
                    variant,
                    n_seeds: accs.len(),
                    mean,
                    sem,
                    trained: trained.contains(&variant),
                    high: mean > HIGH_ACCURACY,
                }
            })
            .collect();
        AccuracyReport { cells, rows }
    }

    /// Write `report.csv` (aggregates) and `cells.csv` (per seed) into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_csv(&dir.join("report.csv"), &self.rows)?;
        write_csv(&dir.join("cells.csv"), &self.cells)
    }

    /// Read a `report.csv`; per-seed cells are not needed for plotting.
    pub fn read(path: impl AsRef<Path>) -> Result<AccuracyReport> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let rows = csv::Reader::from_reader(bytes.as_slice())
            .deserialize()
            .collect::<std::result::Result<Vec<ReportRow>, _>>()?;
        Ok(AccuracyReport {
            cells: Vec::new(),
            rows,
        })
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

const PALETTE: [&str; 8] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c",
];

/// Grouped bar chart as SVG: one panel per task, variants on the x axis in
/// dataset order, one bar per model with SEM whiskers and a dashed chance
/// line. Bars of trained variants are hatched.
pub fn plot_svg(report: &AccuracyReport) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::InvalidParams("nothing to plot: empty report".into()));
    }
    let mut models: Vec<&str> = Vec::new();
    for r in &report.rows {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let mut variants: Vec<VariantId> = report.rows.iter().map(|r| r.variant).collect();
    variants.sort_by_key(|v| v.order());
    variants.dedup();
    let tasks: Vec<TaskKind> = TaskKind::ALL
        .into_iter()
        .filter(|t| report.rows.iter().any(|r| r.task == *t))
        .collect();

    let (bar_w, gap, left, top) = (12.0, 14.0, 56.0, 40.0);
    let (plot_h, panel_h) = (160.0, 260.0);
    let group_w = bar_w * models.len() as f64 + gap;
    let width = left + group_w * variants.len() as f64 + 20.0;
    let height = top + panel_h * tasks.len() as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">"#
    );
    s.push_str(
        r##"<defs><pattern id="hatch" patternUnits="userSpaceOnUse" width="5" height="5" patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="5" stroke="#000" stroke-width="1.2"/></pattern></defs>
"##,
    );
    s.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    s.push('\n');
    for (m, name) in models.iter().enumerate() {
        let x = left + 110.0 * m as f64;
        let _ = writeln!(
            s,
            r#"<rect class="legend" x="{x}" y="10" width="10" height="10" fill="{}"/><text x="{}" y="19">{}</text>"#,
            PALETTE[m % PALETTE.len()],
            x + 14.0,
            xml_escape(name)
        );
    }

    for (ti, task) in tasks.iter().enumerate() {
        let y0 = top + panel_h * ti as f64;
        let y_of = |acc: f64| y0 + 10.0 + plot_h * (1.0 - acc.clamp(0.0, 1.0));
        let _ = writeln!(
            s,
            r#"<text class="panel" x="8" y="{}" font-weight="bold">{}</text>"#,
            y0 + 10.0,
            task.name().to_uppercase()
        );
        for tick in [0.0, 0.5, 1.0] {
            let y = y_of(tick);
            let _ = writeln!(
                s,
                r##"<line x1="{}" y1="{y}" x2="{left}" y2="{y}" stroke="#000"/><text x="{}" y="{}" text-anchor="end">{tick:.1}</text>"##,
                left - 4.0,
                left - 6.0,
                y + 3.0
            );
        }
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{}" x2="{left}" y2="{}" stroke="#000"/>"##,
            y_of(1.0),
            y_of(0.0)
        );
        for (vi, v) in variants.iter().enumerate() {
            let gx = left + gap / 2.0 + group_w * vi as f64;
            for (mi, model) in models.iter().enumerate() {
                let Some(row) = report
                    .rows
                    .iter()
                    .find(|r| r.task == *task && r.variant == *v && r.model == *model)
                else {
                    continue;
                };
                let x = gx + bar_w * mi as f64;
                let (yt, yb) = (y_of(row.mean), y_of(0.0));
                let _ = writeln!(
                    s,
                    r#"<rect class="bar" data-task="{task}" data-model="{}" data-variant="{v}" x="{x}" y="{yt:.2}" width="{bar_w}" height="{:.2}" fill="{}"/>"#,
                    xml_escape(model),
                    yb - yt,
                    PALETTE[mi % PALETTE.len()]
                );
                if row.trained {
                    let _ = writeln!(
                        s,
                        r#"<rect class="hatch" data-variant="{v}" x="{x}" y="{yt:.2}" width="{bar_w}" height="{:.2}" fill="url(#hatch)"/>"#,
                        yb - yt
                    );
                }
                if let Some(sem) = row.sem {
                    let cx = x + bar_w / 2.0;
                    let (hi, lo) = (y_of(row.mean + sem), y_of(row.mean - sem));
                    let _ = writeln!(
                        s,
                        r##"<g class="sem" data-variant="{v}"><line x1="{cx}" y1="{hi:.2}" x2="{cx}" y2="{lo:.2}" stroke="#000"/><line x1="{}" y1="{hi:.2}" x2="{}" y2="{hi:.2}" stroke="#000"/><line x1="{}" y1="{lo:.2}" x2="{}" y2="{lo:.2}" stroke="#000"/></g>"##,
                        cx - 3.0,
                        cx + 3.0,
                        cx - 3.0,
                        cx + 3.0
                    );
                }
            }
            let lx = gx + bar_w * models.len() as f64 / 2.0;
            let ly = y_of(0.0) + 8.0;
            let _ = writeln!(
                s,
                r#"<text class="variant" x="{lx}" y="{ly}" transform="rotate(45 {lx} {ly})">{}</text>"#,
                v.display_name()
            );
        }
        let yc = y_of(0.5);
        let _ = writeln!(
            s,
            r##"<line class="chance" x1="{left}" y1="{yc}" x2="{}" y2="{yc}" stroke="#444" stroke-dasharray="4 3"/>"##,
            width - 20.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn plot_results(report: &AccuracyReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, plot_svg(report)?).map_err(|e| Error::io(path, e))
}

pub(crate) fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const VIRIDIS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

/// Sequential colour for `t` in `[0, 1]`, piecewise linear between viridis
/// anchors.
pub fn viridis(t: f64) -> Rgb {
    let x = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (x as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |k: usize| (a[k] as f64 + (b[k] as f64 - a[k] as f64) * f).round() as u8;
    Rgb([mix(0), mix(1), mix(2)])
}

/// Colour level of every value: magnitudes are clipped below the floor,
/// taken to log10 and scaled linearly from the floor to the maximum.
pub fn attribution_levels(values: &[f64]) -> Vec<usize> {
    let lo = ATTRIBUTION_FLOOR.log10();
    let logs: Vec<f64> = values.iter().map(|v| v.abs().max(ATTRIBUTION_FLOOR).log10()).collect();
    let hi = logs.iter().copied().fold(lo, f64::max);
    let top = (ATTRIBUTION_LEVELS - 1) as f64;
    logs.iter()
        .map(|&l| {
            if hi > lo {
                ((l - lo) / (hi - lo) * top).round() as usize
            } else {
                0
            }
        })
        .collect()
}

/// Heatmap of a 128×128 attribution grid given in row-major order.
pub fn render_attribution(values: &[f64]) -> Result<Image> {
    let n = Image::WIDTH * Image::HEIGHT;
    if values.len() != n {
        return Err(Error::DegenerateInput(format!(
            "expected {n} values, got {}",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput(format!("non-finite attribution {v}")));
    }
    let lut: Vec<Rgb> = (0..ATTRIBUTION_LEVELS)
        .map(|i| viridis(i as f64 / (ATTRIBUTION_LEVELS - 1) as f64))
        .collect();
    let mut img = Image::filled(lut[0]);
    for (i, level) in attribution_levels(values).into_iter().enumerate() {
        img.set(i % Image::WIDTH, i / Image::WIDTH, lut[level]);
    }
    Ok(img)
}
