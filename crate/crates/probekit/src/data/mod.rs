//! Datasets, the cache layout, and two-class task construction.

pub mod idx;
pub mod ssim;

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Environment variable that overrides the default dataset cache
/// directory when no explicit path is given.
pub const DATA_DIR_ENV: &str = "PROBEKIT_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// The two supported image datasets. Both are 28x28 grayscale with ten
/// classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Mnist,
    Fashion,
}

impl DatasetKind {
    /// Directory name under the cache root.
    pub fn dir_name(self) -> &'static str {
        match self {
            DatasetKind::Mnist => "mnist",
            DatasetKind::Fashion => "fashion",
        }
    }

    /// Class pair with the highest structural similarity gap, used as the
    /// default easy task.
    pub fn default_easy_pair(self) -> (u8, u8) {
        match self {
            DatasetKind::Mnist => (0, 7),
            DatasetKind::Fashion => (3, 2),
        }
    }

    /// Class pair with the most similar class means, used as the default
    /// hard task.
    pub fn default_hard_pair(self) -> (u8, u8) {
        match self {
            DatasetKind::Mnist => (7, 9),
            DatasetKind::Fashion => (3, 1),
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnist" => Ok(DatasetKind::Mnist),
            "fashion" | "fashion-mnist" => Ok(DatasetKind::Fashion),
            other => Err(Error::invalid(format!(
                "unknown dataset {other:?}, expected mnist or fashion"
            ))),
        }
    }
}

/// One grayscale image; `pixels` is row-major with `rows * cols` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    /// Pixels as `f64` scaled into `[0, 1]`.
    pub fn to_unit_matrix(&self) -> Matrix {
        Matrix::from_vec(
            self.rows,
            self.cols,
            self.pixels.iter().map(|&p| p as f64 / 255.0).collect(),
        )
    }
}

/// A labeled image collection with uniform image shape and labels in
/// `0..=9`.
#[derive(Debug, Clone)]
pub struct ImageDataset {
    images: Vec<Image>,
    labels: Vec<u8>,
    split: Split,
}

impl ImageDataset {
    pub fn new(images: Vec<Image>, labels: Vec<u8>, split: Split) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: images.len(),
                right: labels.len(),
            });
        }
        if images.is_empty() {
            return Err(Error::EmptySample);
        }
        let shape = (images[0].rows, images[0].cols);
        for im in &images {
            if (im.rows, im.cols) != shape {
                return Err(Error::format("dataset mixes image shapes"));
            }
            if im.pixels.len() != im.rows * im.cols {
                return Err(Error::format("image pixel count does not match its shape"));
            }
        }
        for (index, &label) in labels.iter().enumerate() {
            if label > 9 {
                return Err(Error::LabelRange { index, label });
            }
        }
        Ok(ImageDataset {
            images,
            labels,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn image_shape(&self) -> (usize, usize) {
        (self.images[0].rows, self.images[0].cols)
    }

    pub fn class_counts(&self) -> [usize; 10] {
        let mut counts = [0usize; 10];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }
}

/// File paths for one split in the cache layout
/// `<cache>/<dataset>/<split>-images.idx` and `<split>-labels.idx`.
pub fn dataset_paths(cache_dir: &Path, dataset: DatasetKind, split: Split) -> (PathBuf, PathBuf) {
    let dir = cache_dir.join(dataset.dir_name());
    (
        dir.join(format!("{}-images.idx", split.as_str())),
        dir.join(format!("{}-labels.idx", split.as_str())),
    )
}

/// Resolves the cache directory: explicit path, else the environment
/// override, else `./data`.
pub fn resolve_cache_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Ok(v) = std::env::var(DATA_DIR_ENV) {
        if !v.is_empty() {
            return PathBuf::from(v);
        }
    }
    PathBuf::from("data")
}

fn read_data_file(path: &Path) -> Result<Vec<u8>> {
    match fs::read(path) {
        Ok(bytes) => Ok(bytes),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingData {
            path: path.to_path_buf(),
        }),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// Loads one split of a dataset from the cache. Files may be stored
/// either raw or gzip compressed.
pub fn load_dataset(cache_dir: &Path, dataset: DatasetKind, split: Split) -> Result<ImageDataset> {
    let (images_path, labels_path) = dataset_paths(cache_dir, dataset, split);
    let images = idx::parse_idx_images(&read_data_file(&images_path)?)?;
    let labels = idx::parse_idx_labels(&read_data_file(&labels_path)?)?;
    ImageDataset::new(images, labels, split)
}

/// A binary classification task built from one class pair. `class_a`
/// maps to target 0 and `class_b` to target 1; inputs are flattened
/// images scaled into `[0, 1]`.
#[derive(Debug, Clone)]
pub struct PairTask {
    pub class_a: u8,
    pub class_b: u8,
    pub train_inputs: Matrix,
    pub train_targets: Vec<u8>,
    pub test_inputs: Matrix,
    pub test_targets: Vec<u8>,
}

impl PairTask {
    pub fn feature_dim(&self) -> usize {
        self.train_inputs.cols()
    }
}

fn select_pair(ds: &ImageDataset, class_a: u8, class_b: u8) -> Result<(Matrix, Vec<u8>)> {
    let mut rows: Vec<usize> = Vec::new();
    let mut targets: Vec<u8> = Vec::new();
    let mut seen = [0usize; 2];
    for (i, &label) in ds.labels().iter().enumerate() {
        if label == class_a {
            rows.push(i);
            targets.push(0);
            seen[0] += 1;
        } else if label == class_b {
            rows.push(i);
            targets.push(1);
            seen[1] += 1;
        }
    }
    if seen[0] == 0 {
        return Err(Error::EmptyClass { class: class_a });
    }
    if seen[1] == 0 {
        return Err(Error::EmptyClass { class: class_b });
    }
    let (h, w) = ds.image_shape();
    let dim = h * w;
    let mut values = Vec::with_capacity(rows.len() * dim);
    for &i in &rows {
        values.extend(ds.images()[i].pixels.iter().map(|&p| p as f64 / 255.0));
    }
    Ok((Matrix::from_vec(rows.len(), dim, values), targets))
}

/// Builds the two-class task for `(class_a, class_b)` from matching train
/// and test splits, preserving each split's example order.
pub fn make_pair_task(
    train: &ImageDataset,
    test: &ImageDataset,
    class_a: u8,
    class_b: u8,
) -> Result<PairTask> {
    if class_a == class_b || class_a > 9 || class_b > 9 {
        return Err(Error::InvalidClassPair {
            a: class_a,
            b: class_b,
        });
    }
    if train.image_shape() != test.image_shape() {
        return Err(Error::format("train and test image shapes differ"));
    }
    let (train_inputs, train_targets) = select_pair(train, class_a, class_b)?;
    let (test_inputs, test_targets) = select_pair(test, class_a, class_b)?;
    Ok(PairTask {
        class_a,
        class_b,
        train_inputs,
        train_targets,
        test_inputs,
        test_targets,
    })
}
