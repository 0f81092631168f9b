//! Class-per-directory dataset ingestion, stratified splits and batch loading.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::NUM_CLASSES;
use crate::preprocess::{crop_pipeline, resize_bilinear, CropParams, Rgb8};
use crate::seed;
use crate::tensor::Tensor;

/// Tumor class, in alphabetical directory order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Glioma = 0,
    Meningioma = 1,
    Notumor = 2,
    Pituitary = 3,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; NUM_CLASSES] =
        [ClassLabel::Glioma, ClassLabel::Meningioma, ClassLabel::Notumor, ClassLabel::Pituitary];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL.get(i).copied().ok_or_else(|| Error::InvalidArgument(format!("class index {i} out of range")))
    }

    /// Directory name.
    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Glioma => "glioma",
            ClassLabel::Meningioma => "meningioma",
            ClassLabel::Notumor => "notumor",
            ClassLabel::Pituitary => "pituitary",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Row label used in reports.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassLabel::Glioma => "Glioma",
            ClassLabel::Meningioma => "Meningioma",
            ClassLabel::Notumor => "No Tumor",
            ClassLabel::Pituitary => "Pituitary",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub path: PathBuf,
    pub label: ClassLabel,
}

/// Ordered list of samples under one root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetIndex {
    root: PathBuf,
    samples: Vec<Sample>,
}

impl DatasetIndex {
    pub fn new(root: impl Into<PathBuf>, samples: Vec<Sample>) -> Self {
        Self { root: root.into(), samples }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for s in &self.samples {
            counts[s.label.index()] += 1;
        }
        counts
    }

    /// Positions of each class's samples, in index order.
    pub fn positions_by_class(&self) -> [Vec<usize>; NUM_CLASSES] {
        let mut out: [Vec<usize>; NUM_CLASSES] = Default::default();
        for (i, s) in self.samples.iter().enumerate() {
            out[s.label.index()].push(i);
        }
        out
    }

    /// New index holding the samples at `positions`, in that order.
    pub fn subset(&self, positions: &[usize]) -> Self {
        Self { root: self.root.clone(), samples: positions.iter().map(|&i| self.samples[i].clone()).collect() }
    }

    /// Sample path relative to the root, with `/` separators.
    pub fn relative_path(&self, position: usize) -> String {
        let p = &self.samples[position].path;
        let rel = p.strip_prefix(&self.root).unwrap_or(p);
        rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
    }
}

const EXTENSIONS: [&str; 3] = ["jpg", "jpeg", "png"];

fn has_image_extension(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn is_hidden(name: &str) -> bool {
    name.starts_with('.')
}

fn header_ok(path: &Path) -> std::result::Result<(), String> {
    let reader = image::ImageReader::open(path).map_err(|e| e.to_string())?;
    let reader = reader.with_guessed_format().map_err(|e| e.to_string())?;
    let (w, h) = reader.into_dimensions().map_err(|e| e.to_string())?;
    if w == 0 || h == 0 {
        return Err("zero-sized image".into());
    }
    Ok(())
}

fn sorted_entries(dir: &Path) -> Result<Vec<std::fs::DirEntry>> {
    let mut entries = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort_by_key(|e| e.file_name());
    Ok(entries)
}

/// Indexes `root/{glioma,meningioma,notumor,pituitary}/*.{jpg,jpeg,png}`.
///
/// Files whose header cannot be read are skipped with a warning.
pub fn scan_dataset(root: impl AsRef<Path>) -> Result<DatasetIndex> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::Layout(format!("{} is not a directory", root.display())));
    }
    let mut found = [false; NUM_CLASSES];
    for entry in sorted_entries(root)? {
        let name = entry.file_name().to_string_lossy().into_owned();
        if is_hidden(&name) || !entry.path().is_dir() {
            continue;
        }
        match ClassLabel::from_name(&name) {
            Some(c) => found[c.index()] = true,
            None => return Err(Error::Layout(format!("unexpected directory {name:?} in {}", root.display()))),
        }
    }
    if let Some(missing) = ClassLabel::ALL.iter().find(|c| !found[c.index()]) {
        return Err(Error::Layout(format!("missing class directory {:?} in {}", missing.name(), root.display())));
    }

    let mut samples = Vec::new();
    for class in ClassLabel::ALL {
        let dir = root.join(class.name());
        let before = samples.len();
        for entry in sorted_entries(&dir)? {
            let path = entry.path();
            if !path.is_file() || !has_image_extension(&path) {
                continue;
            }
            match header_ok(&path) {
                Ok(()) => samples.push(Sample { path, label: class }),
                Err(reason) => log::warn!("skipping undecodable {}: {reason}", path.display()),
            }
        }
        if samples.len() == before {
            return Err(Error::Layout(format!("class {class} has no images in {}", dir.display())));
        }
    }
    Ok(DatasetIndex::new(root, samples))
}

/// Train/validation positions into a [`DatasetIndex`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

fn shuffled_class(positions: &[usize], parts: &[u64]) -> Vec<usize> {
    let mut v = positions.to_vec();
    v.shuffle(&mut seed::stream(parts));
    v
}

/// Per class: seeded shuffle, the first `round(frac·n)` go to training.
///
/// The training share is clamped to `[1, n − 1]` so both sides see every class.
pub fn stratified_split(index: &DatasetIndex, frac: f64, seed_value: u64) -> Result<Split> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::InvalidArgument(format!("split fraction {frac} must lie in (0, 1)")));
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (c, positions) in index.positions_by_class().iter().enumerate() {
        let n = positions.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "class {} has {n} samples; a split needs at least 2",
                ClassLabel::ALL[c]
            )));
        }
        let take = ((frac * n as f64).round() as usize).clamp(1, n - 1);
        let order = shuffled_class(positions, &[seed_value, seed::tag::SPLIT, c as u64]);
        train.extend_from_slice(&order[..take]);
        val.extend_from_slice(&order[take..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok(Split { train, val })
}

/// Fold id of every sample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    /// Training positions (all other folds) and validation positions (`fold`).
    pub fn split(&self, fold: usize) -> Split {
        let (val, train): (Vec<usize>, Vec<usize>) = (0..self.fold_of.len()).partition(|&i| self.fold_of[i] == fold);
        Split { train, val }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Per class: seeded shuffle, then round-robin over the folds. The
/// round-robin position carries over between classes so overall fold sizes
/// also stay within one of each other.
pub fn stratified_kfold(index: &DatasetIndex, k: usize, seed_value: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} must be at least 2")));
    }
    let mut fold_of = vec![0; index.len()];
    let mut next = 0;
    for (c, positions) in index.positions_by_class().iter().enumerate() {
        if positions.len() < k {
            return Err(Error::InvalidArgument(format!(
                "class {} has {} samples, fewer than k = {k}",
                ClassLabel::ALL[c],
                positions.len()
            )));
        }
        for p in shuffled_class(positions, &[seed_value, seed::tag::FOLD, c as u64]) {
            fold_of[p] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Decodes one image and brings it to `size×size`, cropping first when
/// `crop` is given.
pub fn load_image(path: &Path, crop: Option<&CropParams>, size: usize) -> Result<Rgb8> {
    let img = Rgb8::open(path)?;
    if let Some(params) = crop {
        let params = CropParams { size, ..params.clone() };
        return Ok(crop_pipeline(&img, &params)?.image);
    }
    if img.width() == size && img.height() == size {
        Ok(img)
    } else {
        resize_bilinear(&img, size, size)
    }
}

/// One-hot rows for `labels`.
pub fn one_hot(labels: &[ClassLabel]) -> Result<Tensor> {
    Tensor::from_fn(vec![labels.len(), NUM_CLASSES], |i| {
        if labels[i / NUM_CLASSES].index() == i % NUM_CLASSES {
            1.0
        } else {
            0.0
        }
    })
}

/// Decoded images kept in memory with their labels.
#[derive(Clone, Debug)]
pub struct LoadedSet {
    pub samples: Vec<Sample>,
    pub images: Vec<Rgb8>,
    pub size: usize,
}

impl LoadedSet {
    pub fn from_images(samples: Vec<Sample>, images: Vec<Rgb8>, size: usize) -> Result<Self> {
        if samples.len() != images.len() {
            return Err(Error::Shape(format!("{} samples but {} images", samples.len(), images.len())));
        }
        if let Some(img) = images.iter().find(|m| m.width() != size || m.height() != size) {
            return Err(Error::Shape(format!("image {}×{} is not {size}×{size}", img.width(), img.height())));
        }
        Ok(Self { samples, images, size })
    }

    /// Decodes every sample in parallel; order follows the index.
    pub fn load(index: &DatasetIndex, crop: Option<&CropParams>, size: usize) -> Result<Self> {
        let images = index.samples().par_iter().map(|s| load_image(&s.path, crop, size)).collect::<Result<Vec<_>>>()?;
        Self::from_images(index.samples().to_vec(), images, size)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn subset(&self, positions: &[usize]) -> Self {
        Self {
            samples: positions.iter().map(|&i| self.samples[i].clone()).collect(),
            images: positions.iter().map(|&i| self.images[i].clone()).collect(),
            size: self.size,
        }
    }
}

/// Raw 8-bit values as an `N×size×size×3` tensor plus one-hot labels.
pub fn load_batch(samples: &[Sample], crop: Option<&CropParams>, size: usize) -> Result<(Tensor, Tensor)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let images = samples.par_iter().map(|s| load_image(&s.path, crop, size)).collect::<Result<Vec<_>>>()?;
    let data: Vec<f32> = images.iter().flat_map(|m| m.pixels().iter().map(|&v| v as f32)).collect();
    let x = Tensor::new(vec![samples.len(), size, size, 3], data)?;
    let labels: Vec<ClassLabel> = samples.iter().map(|s| s.label).collect();
    Ok((x, one_hot(&labels)?))
}
