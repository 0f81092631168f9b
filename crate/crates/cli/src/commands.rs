//! Subcommand implementations.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use lwcnn_core::augment::{augment_image, normalize};
use lwcnn_core::dataset::{scan_dataset, stratified_split, ClassLabel, DatasetIndex, LoadedSet};
use lwcnn_core::metrics::{render_report, ConfusionMatrix, Report, ReportStyle};
use lwcnn_core::nn::{load_weights, param_count, save_weights};
use lwcnn_core::preprocess::crop_pipeline;
use lwcnn_core::synthetic::write_fixture_tree;
use lwcnn_core::trainer::{evaluate, fit};
use lwcnn_core::tuner::{retrain_best, search};
use lwcnn_core::{seed, CropParams, Network, Rgb8};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::featuremaps::tile_channels;
use crate::{Cli, Command};

pub const TRAINING_DIR: &str = "Training";
pub const TESTING_DIR: &str = "Testing";

/// Writes every log line to stderr and to `run.log`.
struct Tee(Mutex<File>);

impl Write for &Tee {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        std::io::stderr().write_all(buf)?;
        self.0.lock().expect("log file lock").write_all(buf)?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.0.lock().expect("log file lock").flush()
    }
}

struct TeeTarget(&'static Tee);

impl Write for TeeTarget {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        { self.0 }.write(buf)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        { self.0 }.flush()
    }
}

fn init_logging(log_file: Option<&Path>) -> Result<()> {
    let mut builder = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"));
    builder.format_timestamp(None);
    if let Some(path) = log_file {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let tee: &'static Tee = Box::leak(Box::new(Tee(Mutex::new(file))));
        builder.target(env_logger::Target::Pipe(Box::new(TeeTarget(tee))));
    }
    // a second initialisation (in-process callers) keeps the first logger
    let _ = builder.try_init();
    Ok(())
}

fn prepare_output(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    init_logging(Some(&dir.join("run.log")))?;
    cfg.write_effective(&dir)?;
    log::info!("output directory {}", dir.display());
    Ok(dir)
}

/// The named split under `root`, or `root` itself when it holds class folders.
pub fn split_root(root: &Path, split: &str) -> PathBuf {
    let nested = root.join(split);
    if nested.is_dir() {
        nested
    } else {
        root.to_path_buf()
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(cli: &Cli) -> Result<()> {
    let base = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cfg = base.resolve(&cli.common.overrides())?;
    match &cli.command {
        Command::Stats => {
            init_logging(None)?;
            print!("{}", stats_csv(cfg.dataset_root()?)?);
            Ok(())
        }
        Command::MakeFixture { train_per_class, test_per_class, size } => {
            init_logging(None)?;
            make_fixture(&cfg.output_dir, *train_per_class, *test_per_class, *size, cfg.seed)
        }
        Command::Crop => {
            let out = prepare_output(&cfg)?;
            crop_tree(cfg.dataset_root()?, &out, &cfg.crop)
        }
        Command::Train => {
            let out = prepare_output(&cfg)?;
            train(&cfg, &out)
        }
        Command::Tune => {
            let out = prepare_output(&cfg)?;
            tune(&cfg, &out)
        }
        Command::Evaluate { weights } => {
            let out = prepare_output(&cfg)?;
            let network = load_weights(weights)?;
            let test_root = split_root(cfg.dataset_root()?, TESTING_DIR);
            let set = load_set(&scan_dataset(&test_root)?, &cfg, network.config().input_size)?;
            evaluate_and_write(&network, &set, cfg.train.batch_size, &out)?;
            Ok(())
        }
        Command::Featuremaps { weights, image } => {
            let out = prepare_output(&cfg)?;
            featuremaps(&load_weights(weights)?, image, &cfg.crop, &out)
        }
        Command::AugmentPreview { image, count } => {
            let out = prepare_output(&cfg)?;
            augment_preview(&cfg, image, *count, &out)
        }
    }
}

/// `split,class,count` rows for each split present, then totals.
pub fn stats_csv(root: &Path) -> Result<String> {
    let mut out = String::from("split,class,count\n");
    let mut grand = 0;
    let mut found = false;
    for split in [TRAINING_DIR, TESTING_DIR] {
        let dir = root.join(split);
        if !dir.is_dir() {
            continue;
        }
        found = true;
        let counts = scan_dataset(&dir)?.class_counts();
        for (class, n) in ClassLabel::ALL.iter().zip(counts) {
            out += &format!("{split},{class},{n}\n");
        }
        let total: usize = counts.iter().sum();
        out += &format!("{split},total,{total}\n");
        grand += total;
    }
    if !found {
        bail!("{} contains neither {TRAINING_DIR}/ nor {TESTING_DIR}/", root.display());
    }
    out += &format!("all,total,{grand}\n");
    Ok(out)
}

pub fn make_fixture(
    out: &Path,
    train_per_class: usize,
    test_per_class: usize,
    size: usize,
    seed_value: u64,
) -> Result<()> {
    write_fixture_tree(out.join(TRAINING_DIR), train_per_class, seed::mix(&[seed_value, 1]), size)?;
    write_fixture_tree(out.join(TESTING_DIR), test_per_class, seed::mix(&[seed_value, 2]), size)?;
    log::info!("wrote synthetic fixture to {}", out.display());
    Ok(())
}

fn crop_tree(in_root: &Path, out_root: &Path, params: &CropParams) -> Result<()> {
    let splits: Vec<(&str, PathBuf)> = [TRAINING_DIR, TESTING_DIR]
        .into_iter()
        .filter(|s| in_root.join(s).is_dir())
        .map(|s| (s, in_root.join(s)))
        .collect();
    let splits = if splits.is_empty() { vec![("", in_root.to_path_buf())] } else { splits };
    let mut log_csv = String::from("path,top,bottom,left,right,fallback\n");
    let (mut written, mut failed) = (0, 0);
    for (split, dir) in splits {
        let index = scan_dataset(&dir)?;
        let results: Vec<_> = (0..index.len())
            .into_par_iter()
            .map(|i| {
                let sample = &index.samples()[i];
                let rel = Path::new(split).join(index.relative_path(i)).with_extension("png");
                let result = (|| -> Result<_> {
                    let outcome = crop_pipeline(&Rgb8::open(&sample.path)?, params)?;
                    let dest = out_root.join(&rel);
                    std::fs::create_dir_all(dest.parent().expect("file has a parent"))?;
                    outcome.image.save_png(&dest)?;
                    Ok(outcome)
                })();
                (rel, result)
            })
            .collect();
        for (rel, result) in results {
            match result {
                Ok(o) => {
                    let b = o.bbox;
                    let p = rel.to_string_lossy().replace('\\', "/");
                    log_csv += &format!("{p},{},{},{},{},{}\n", b.top, b.bottom, b.left, b.right, o.fallback);
                    written += 1;
                }
                Err(e) => {
                    log::warn!("skipping {}: {e:#}", rel.display());
                    failed += 1;
                }
            }
        }
    }
    write_text(&out_root.join("crop_log.csv"), &log_csv)?;
    log::info!("cropped {written} images ({failed} failed)");
    Ok(())
}

fn load_set(index: &DatasetIndex, cfg: &RunConfig, size: usize) -> Result<LoadedSet> {
    let crop = cfg.crop_params().map(|c| CropParams { size, ..c.clone() });
    log::info!("loading {} images from {}", index.len(), index.root().display());
    Ok(LoadedSet::load(index, crop.as_ref(), size)?)
}

fn report_rows() -> Vec<&'static str> {
    ClassLabel::ALL.iter().map(|c| c.display_name()).collect()
}

/// Evaluates and writes `report.csv`, `report.txt` and `confusion.csv`.
fn evaluate_and_write(network: &Network, set: &LoadedSet, batch_size: usize, out: &Path) -> Result<Report> {
    let ev = evaluate(network, set, batch_size)?;
    let truth: Vec<usize> = set.samples.iter().map(|s| s.label.index()).collect();
    let names = ClassLabel::ALL.iter().map(|c| c.name().to_string()).collect();
    let cm = ConfusionMatrix::from_labels(&truth, &ev.predictions, names)?;
    let report = Report::from_confusion(&cm, &report_rows())?;
    write_text(&out.join("report.csv"), &render_report(&report, ReportStyle::Csv))?;
    let text = render_report(&report, ReportStyle::Text);
    write_text(&out.join("report.txt"), &text)?;
    write_text(&out.join("confusion.csv"), &cm.to_csv())?;
    log::info!("evaluation on {} images: loss {:.4}, accuracy {:.4}\n{text}", set.len(), ev.loss, ev.accuracy);
    Ok(report)
}

fn train(cfg: &RunConfig, out: &Path) -> Result<()> {
    let index = scan_dataset(split_root(cfg.dataset_root()?, TRAINING_DIR))?;
    let split = stratified_split(&index, 0.8, cfg.seed)?;
    let data = load_set(&index, cfg, cfg.network.input_size)?;
    let (train, val) = (data.subset(&split.train), data.subset(&split.val));
    let network = Network::build(&cfg.network, cfg.seed)?;
    log::info!("parameters: {} (closed form {})", network.stored_param_count(), param_count(&cfg.network)?);
    log::info!("training on {} images, validating on {}", train.len(), val.len());
    let outcome = fit(network, &train, &val, &cfg.train)?;
    log::info!("restored weights from epoch {}", outcome.best_epoch);
    save_weights(&outcome.network, out.join("weights.lwcnn"))?;
    outcome.history.write_csv(out.join("history.csv"))?;
    evaluate_and_write(&outcome.network, &val, cfg.train.batch_size, out)?;
    Ok(())
}

fn tune(cfg: &RunConfig, out: &Path) -> Result<()> {
    let root = cfg.dataset_root()?;
    let test_root = root.join(TESTING_DIR);
    if !test_root.is_dir() {
        bail!("tune needs {}/ under {}", TESTING_DIR, root.display());
    }
    let index = scan_dataset(root.join(TRAINING_DIR))?;
    let data = load_set(&index, cfg, cfg.network.input_size)?;
    let report = search(&cfg.search, &index, &data, &cfg.train, cfg.seed)?;
    write_text(&out.join("tuner_report.json"), &(report.to_json()? + "\n"))?;
    log::info!(
        "best trial {} (mean fold accuracy {:.4}) after {} fold trainings",
        report.best_id,
        report.best().mean,
        report.fold_trainings
    );
    let outcome = retrain_best(&report, &index, &data, &cfg.train, &out.join("weights.lwcnn"))?;
    outcome.history.write_csv(out.join("history.csv"))?;
    let test = load_set(&scan_dataset(&test_root)?, cfg, cfg.network.input_size)?;
    evaluate_and_write(&outcome.network, &test, cfg.train.batch_size, out)?;
    Ok(())
}

fn batch_of_one(img: &Rgb8, size: usize) -> Result<lwcnn_core::Tensor> {
    Ok(normalize(img, size)?.reshape(vec![1, size, size, 3])?)
}

fn featuremaps(network: &Network, image: &Path, crop: &CropParams, out: &Path) -> Result<()> {
    let size = network.config().input_size;
    let params = CropParams { size, ..crop.clone() };
    let cropped = crop_pipeline(&Rgb8::open(image)?, &params)?.image;
    cropped.save_png(out.join("input.png"))?;
    let acts = network.conv_activations(&batch_of_one(&cropped, size)?, 2)?;
    for (i, act) in acts.iter().enumerate() {
        let grid = tile_channels(act)?;
        let path = out.join(format!("conv{}.pgm", i + 1));
        grid.save_pgm(&path)?;
        let (_, h, w, c) = act.nhwc()?;
        log::info!("conv{}: {c} maps of {h}×{w} → {}", i + 1, path.display());
    }
    Ok(())
}

fn augment_preview(cfg: &RunConfig, image: &Path, count: usize, out: &Path) -> Result<()> {
    let size = cfg.network.input_size;
    let params = CropParams { size, ..cfg.crop.clone() };
    let base = crop_pipeline(&Rgb8::open(image)?, &params)?.image;
    base.save_png(out.join("original.png"))?;
    for i in 0..count {
        augment_image(&base, &cfg.train.augment, cfg.seed, 0, i as u64)
            .save_png(out.join(format!("augment_{i:03}.png")))?;
    }
    log::info!("wrote {count} augmented variants");
    Ok(())
}
