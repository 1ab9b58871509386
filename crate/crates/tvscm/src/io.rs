//! Dataset files: MNIST IDX pairs and segmented-beat ECG CSV.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use tvscm_core::data::{ecg_from_rows, mnist_from_idx, parse_idx_labels, Dataset};
use tvscm_core::Error as CoreError;

use crate::{Error, Result};

pub const MNIST_TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const MNIST_TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const MNIST_TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const MNIST_TEST_LABELS: &str = "t10k-labels-idx1-ubyte";
pub const ECG_TRAIN_CSV: &str = "mitbih_train.csv";
pub const ECG_TEST_CSV: &str = "mitbih_test.csv";

pub(crate) fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn stem(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Loads an IDX image file and its label file.
pub fn load_mnist(images: &Path, labels: &Path) -> Result<Dataset> {
    let image_bytes = read(images)?;
    let label_bytes = read(labels)?;
    let at = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Data { path, source }
    };
    // Validate labels on their own first so a broken label file is named.
    parse_idx_labels(&label_bytes).map_err(at(labels))?;
    mnist_from_idx(&stem(images), &image_bytes, &label_bytes).map_err(at(images))
}

/// Loads the canonical train and test splits from a directory holding the
/// four uncompressed MNIST files.
pub fn load_mnist_dir(dir: &Path) -> Result<(Dataset, Dataset)> {
    let train = load_mnist(&dir.join(MNIST_TRAIN_IMAGES), &dir.join(MNIST_TRAIN_LABELS))?;
    let test = load_mnist(&dir.join(MNIST_TEST_IMAGES), &dir.join(MNIST_TEST_LABELS))?;
    Ok((train, test))
}

/// Loads a headerless CSV of 187 features plus an integer label per row.
///
/// Rows with features outside `[0, 1]` are min-max rescaled and reported
/// through a log warning.
pub fn load_ecg_csv(path: &Path) -> Result<Dataset> {
    let bytes = read(path)?;
    let data_err = |source| Error::Data {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes.as_slice());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut row = Vec::with_capacity(record.len());
        for (j, cell) in record.iter().enumerate() {
            let value = cell.trim().parse::<f64>().map_err(|_| {
                data_err(CoreError::NonNumeric {
                    row: i + 1,
                    column: j + 1,
                    cell: cell.to_string(),
                })
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    let load = ecg_from_rows(&stem(path), &rows).map_err(data_err)?;
    if !load.rescaled_rows.is_empty() {
        warn!(
            "{}: {} row(s) outside [0, 1] were min-max rescaled (first: row {})",
            path.display(),
            load.rescaled_rows.len(),
            load.rescaled_rows[0]
        );
    }
    Ok(load.dataset)
}

/// Loads `mitbih_train.csv` and `mitbih_test.csv` from `dir`.
pub fn load_ecg_dir(dir: &Path) -> Result<(Dataset, Dataset)> {
    Ok((
        load_ecg_csv(&dir.join(ECG_TRAIN_CSV))?,
        load_ecg_csv(&dir.join(ECG_TEST_CSV))?,
    ))
}

/// Both ECG files exist in `dir`.
pub fn ecg_dir_present(dir: &Path) -> bool {
    [ECG_TRAIN_CSV, ECG_TEST_CSV]
        .iter()
        .all(|f| dir.join(f).is_file())
}

/// All four MNIST files exist in `dir`.
pub fn mnist_dir_present(dir: &Path) -> bool {
    [
        MNIST_TRAIN_IMAGES,
        MNIST_TRAIN_LABELS,
        MNIST_TEST_IMAGES,
        MNIST_TEST_LABELS,
    ]
    .iter()
    .all(|f| dir.join(f).is_file())
}

pub(crate) fn write(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<PathBuf> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}
