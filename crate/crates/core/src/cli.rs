//! Command-line front end. Every run is determined by its flags; progress
//! goes to stderr as one JSON object per line, results to stdout.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::datasets::{
    build_dataset_with, build_rich_regime_with, verify_dataset_with, DatasetSpec, Manifest, Progress, RichRegimeSpec,
    Split, SplitSizes, VerifyOptions,
};
use crate::error::{Error, Result};
use crate::esbnprobe::{
    curve_svg, flip_sweep, gen_paired_sd, write_curve_csv, write_paired, ProbeMode, DEFAULT_THRESHOLD,
    PAIRS_PER_CONDITION,
};
use crate::rng::SeededRng;
use crate::score::{grade, plot_results, read_predictions, AccuracyReport};
use crate::shapegen::VariantId;
use crate::tasks::TaskKind;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error (bad or missing flags)
  3  i/o, csv or json failure
  4  generation failure (shape, placement or parameters)
  5  corrupt dataset (missing file, checksum, decode, failed verification)
  6  oracle could not segment or solve an image
  7  grading error (missing, duplicate or unknown prediction; too few seeds)
  8  degenerate probe input";

#[derive(Debug, Parser)]
#[command(name = "premack", version, about = "Generate, verify and score same/different visual reasoning datasets", after_help = EXIT_CODES)]
struct Cli {
    /// Divide sizes by this factor for quick runs (verification checks
    /// every n-th image with the oracle instead).
    #[arg(long, global = true, value_name = "N")]
    desk_scale: Option<u32>,

    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Output {
    /// Output root directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build one dataset under <out>/<task>/<variant>.
    Gen {
        /// mts, sd, sosd or rmts.
        #[arg(long)]
        task: TaskKind,
        /// original, irregular, regular, open, wider, scrambled, random_color,
        /// filled, lines, arrows, rectangles, straight_lines,
        /// connected_squares or connected_circles.
        #[arg(long)]
        variant: VariantId,
        /// Master seed; every image seed is derived from it.
        #[arg(long)]
        seed: u64,
        /// train,val,test; defaults to the task's standard sizes.
        #[arg(long, value_name = "TRAIN,VAL,TEST")]
        split_sizes: Option<SplitSizes>,
        #[command(flatten)]
        out: Output,
    },
    /// Build the multi-variant training regime under <out>/rich/<task>.
    Rich {
        #[arg(long, default_value = "sd")]
        task: TaskKind,
        /// Master seed shared by all component datasets.
        #[arg(long)]
        seed: u64,
        #[arg(long, value_name = "TRAIN,VAL,TEST")]
        split_sizes: Option<SplitSizes>,
        /// Comma-separated training variants.
        #[arg(long, value_delimiter = ',')]
        train_variants: Option<Vec<VariantId>>,
        /// Comma-separated held-out variants.
        #[arg(long, value_delimiter = ',')]
        heldout_variants: Option<Vec<VariantId>>,
        #[command(flatten)]
        out: Output,
    },
    /// Check files, checksums, label balance and oracle agreement.
    Verify {
        /// manifest.csv or the directory holding it.
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Re-solve images with the oracle and print the agreement rate.
    OracleCheck {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Grade a predictions file and write report.csv and cells.csv.
    Grade {
        #[arg(long)]
        manifest: PathBuf,
        /// CSV with columns model,seed,image_id,predicted_label.
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        /// Variants seen in training, marked as trained in the report.
        #[arg(long, value_delimiter = ',')]
        trained: Option<Vec<VariantId>>,
        #[command(flatten)]
        out: Output,
    },
    /// Render a report.csv as a grouped bar chart (accuracy.svg).
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Pixel-cosine shortcut probe: paired datasets and the flip sweep.
    Probe {
        /// Master seed for the paired datasets and the noise sweep.
        #[arg(long)]
        seed: u64,
        /// centered, translated, or both when omitted.
        #[arg(long)]
        mode: Option<ProbeMode>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Pairs per paired dataset.
        #[arg(long, default_value_t = 2000)]
        pairs: usize,
        #[command(flatten)]
        out: Output,
    },
}

/// Run with the given argv (program name first) and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    if cli.desk_scale == Some(0) {
        return Err(Error::Usage("--desk-scale must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(cli.command, cli.desk_scale))
}

fn report_progress(p: Progress) {
    eprintln!(
        "{}",
        json!({"event": "progress", "stage": p.stage, "done": p.done, "total": p.total})
    );
}

fn event(name: &str, fields: serde_json::Value) {
    let mut v = json!({ "event": name });
    if let (Some(o), Some(f)) = (v.as_object_mut(), fields.as_object()) {
        o.extend(f.clone());
    }
    eprintln!("{v}");
}

fn verify_opts(desk_scale: Option<u32>) -> VerifyOptions {
    VerifyOptions {
        oracle_every: desk_scale.unwrap_or(1).max(1) as usize,
    }
}

fn scaled_count(n: usize, desk_scale: Option<u32>) -> usize {
    let d = desk_scale.unwrap_or(1).max(1) as usize;
    ((n / d) & !1).max(2)
}

fn dispatch(cmd: Command, desk_scale: Option<u32>) -> Result<()> {
    match cmd {
        Command::Gen {
            task,
            variant,
            seed,
            split_sizes,
            out,
        } => {
            let mut spec = DatasetSpec::new(task, variant, seed, out.out).with_desk_scale(desk_scale);
            if let Some(s) = split_sizes {
                spec.split_sizes = s;
            }
            let m = build_dataset_with(&spec, &report_progress)?;
            let fp = m.fingerprint()?;
            event("done", json!({"records": m.records.len(), "fingerprint": fp}));
            println!("{}", m.root.join(crate::datasets::MANIFEST_FILE).display());
            println!("records {}  fingerprint {fp}", m.records.len());
        }
        Command::Rich {
            task,
            seed,
            split_sizes,
            train_variants,
            heldout_variants,
            out,
        } => {
            let mut spec = RichRegimeSpec::new(task, seed, out.out);
            spec.desk_scale = desk_scale;
            if let Some(s) = split_sizes {
                spec.split_sizes = s;
            }
            if let Some(v) = train_variants {
                spec.train_variants = v;
            }
            if let Some(v) = heldout_variants {
                spec.heldout_variants = v;
            }
            let m = build_rich_regime_with(&spec, &report_progress)?;
            let fp = m.fingerprint()?;
            event("done", json!({"records": m.records.len(), "fingerprint": fp}));
            println!("{}", m.root.join(crate::datasets::MANIFEST_FILE).display());
            for s in Split::ALL {
                println!("{s} {}", m.split(s).count());
            }
            println!("fingerprint {fp}");
        }
        Command::Verify { manifest } => {
            let r = verify_dataset_with(&manifest, verify_opts(desk_scale), &report_progress)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
            if !r.balanced() {
                return Err(Error::CorruptDataset {
                    image_id: "-".into(),
                    reason: "labels are not balanced".into(),
                });
            }
            if let Some(d) = r.disagreements.first() {
                return Err(Error::CorruptDataset {
                    image_id: d.image_id.clone(),
                    reason: format!("oracle disagrees: {}", d.reason),
                });
            }
        }
        Command::OracleCheck { manifest } => {
            let r = verify_dataset_with(&manifest, verify_opts(desk_scale), &report_progress)?;
            println!(
                "agreement {:.4} ({}/{})",
                r.agreement(),
                r.oracle_agreed,
                r.oracle_checked
            );
            for d in &r.disagreements {
                println!(
                    "disagree {} stored={} solved={:?} {}",
                    d.image_id, d.stored, d.solved, d.reason
                );
            }
            if let Some(d) = r.disagreements.first() {
                return Err(Error::InconsistentScene(format!("oracle disagrees on {}", d.image_id)));
            }
        }
        Command::Grade {
            manifest,
            predictions,
            split,
            trained,
            out,
        } => {
            let m = Manifest::load(&manifest)?;
            let preds = read_predictions(&predictions)?;
            let cells = grade(&preds, &m, split)?;
            let trained = trained.unwrap_or_else(|| {
                if m.echo.kind == "rich" {
                    m.echo.variants.clone()
                } else {
                    Vec::new()
                }
            });
            let report = AccuracyReport::from_cells(cells, &trained);
            report.write(&out.out)?;
            for r in &report.rows {
                let sem = r.sem.map_or("-".to_string(), |s| format!("{s:.4}"));
                println!(
                    "{} {} {} mean {:.4} sem {sem} seeds {}",
                    r.model, r.task, r.variant, r.mean, r.n_seeds
                );
            }
            event("done", json!({"report": out.out.join("report.csv")}));
        }
        Command::Plot { report, out } => {
            let r = AccuracyReport::read(&report)?;
            std::fs::create_dir_all(&out.out).map_err(|e| Error::io(&out.out, e))?;
            let path = out.out.join("accuracy.svg");
            plot_results(&r, &path)?;
            println!("{}", path.display());
        }
        Command::Probe {
            seed,
            mode,
            threshold,
            pairs,
            out,
        } => {
            let root = SeededRng::new(seed);
            let dir = out.out.join("probe");
            let n = scaled_count(pairs, desk_scale);
            let modes = match mode {
                Some(m) => vec![m],
                None => vec![ProbeMode::Centered, ProbeMode::Translated],
            };
            let mut summary = serde_json::Map::new();
            for m in modes {
                event(
                    "progress",
                    json!({"stage": format!("paired {}", m.name()), "done": 0, "total": n}),
                );
                let samples = gen_paired_sd(m, n, &root)?;
                let acc = write_paired(&samples, threshold, dir.join(m.name()))?;
                println!("{} accuracy {acc:.4} ({n} pairs, threshold {threshold})", m.name());
                summary.insert(format!("{}_accuracy", m.name()), json!(acc));
            }
            let per_k = scaled_count(PAIRS_PER_CONDITION, desk_scale);
            event(
                "progress",
                json!({"stage": "flip sweep", "done": 0, "total": per_k * 1001}),
            );
            let rows = flip_sweep(&root, per_k)?;
            write_curve_csv(&rows, dir.join("flip_similarity.csv"))?;
            let svg = dir.join("flip_similarity.svg");
            std::fs::write(&svg, curve_svg(&rows)).map_err(|e| Error::io(&svg, e))?;
            println!(
                "flip sweep: {} conditions x {per_k} pairs, mean similarity k=0 {:.4}, k={} {:.4}",
                rows.len(),
                rows[0].mean,
                rows[rows.len() - 1].k,
                rows[rows.len() - 1].mean
            );
            summary.insert("threshold".into(), json!(threshold));
            summary.insert("pairs_per_condition".into(), json!(per_k));
            let path = dir.join("summary.json");
            std::fs::write(&path, serde_json::to_vec_pretty(&summary)?).map_err(|e| Error::io(&path, e))?;
            event("done", json!({"dir": dir}));
        }
    }
    Ok(())
}
