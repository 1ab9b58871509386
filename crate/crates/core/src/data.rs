//! Datasets: IDX (MNIST) decoding, ECG beat rows, and a seeded synthetic
//! generator.

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Matrix;
use crate::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 2051;
pub const IDX_LABELS_MAGIC: u32 = 2049;
pub const MNIST_DIM: usize = 784;
pub const MNIST_CLASSES: usize = 10;
pub const ECG_DIM: usize = 187;
pub const ECG_CLASSES: usize = 5;
pub const SYNTHETIC_NOISE: f64 = 0.3;

/// Feature matrix plus integer labels in `0..classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    features: Matrix,
    labels: Vec<usize>,
    classes: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        labels: Vec<usize>,
        classes: usize,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.rows(),
                actual: labels.len(),
            });
        }
        for (row, x) in features.iter_rows().enumerate() {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteFeature { row });
            }
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(Error::LabelOutOfRange {
                index,
                label,
                classes,
            });
        }
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Rows and labels at `indices`, in that order.
    pub fn gather(&self, indices: &[usize]) -> (Matrix, Vec<usize>) {
        (
            self.features.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let (features, labels) = self.gather(indices);
        Dataset {
            name: self.name.clone(),
            features,
            labels,
            classes: self.classes,
        }
    }
}

// ---------------------------------------------------------------------------
// IDX

/// Decoded IDX image file (unsigned-byte payload).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::Truncated {
            expected: offset + 4,
            actual: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = read_u32(bytes, 0)?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

fn payload(bytes: &[u8], header: usize, len: usize) -> Result<&[u8]> {
    let end = header
        .checked_add(len)
        .ok_or(Error::Truncated {
            expected: usize::MAX,
            actual: bytes.len(),
        })?;
    bytes.get(header..end).ok_or(Error::Truncated {
        expected: end,
        actual: bytes.len(),
    })
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IDX_IMAGES_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let len = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or(Error::Truncated {
            expected: usize::MAX,
            actual: bytes.len(),
        })?;
    let pixels = payload(bytes, 16, len)?.to_vec();
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels,
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, IDX_LABELS_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    Ok(payload(bytes, 8, count)?.to_vec())
}

pub fn write_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [
        IDX_IMAGES_MAGIC,
        images.count as u32,
        images.rows as u32,
        images.cols as u32,
    ] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn write_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// MNIST from raw IDX image and label files; pixels scaled to `[0, 1]`.
pub fn mnist_from_idx(name: &str, image_bytes: &[u8], label_bytes: &[u8]) -> Result<Dataset> {
    let images = parse_idx_images(image_bytes)?;
    let labels = parse_idx_labels(label_bytes)?;
    if images.count != labels.len() {
        return Err(Error::CountMismatch {
            images: images.count,
            labels: labels.len(),
        });
    }
    let dim = images.rows * images.cols;
    if dim != MNIST_DIM {
        return Err(Error::DimensionMismatch {
            expected: MNIST_DIM,
            actual: dim,
        });
    }
    let features = images.pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let features = Matrix::from_vec(images.count, dim, features)?;
    let labels = labels.into_iter().map(usize::from).collect();
    Dataset::new(name, features, labels, MNIST_CLASSES)
}

// ---------------------------------------------------------------------------
// ECG beats

/// Outcome of assembling an ECG dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgLoad {
    pub dataset: Dataset,
    /// 1-based rows that fell outside `[0, 1]` and were min-max rescaled.
    pub rescaled_rows: Vec<usize>,
}

/// Builds an ECG dataset from numeric rows of 187 features plus a label.
///
/// Rows are numbered from 1 in errors. Rows with any feature outside `[0, 1]`
/// are min-max rescaled individually; in-range rows are left untouched.
pub fn ecg_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<EcgLoad> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let width = ECG_DIM + 1;
    let mut features = Vec::with_capacity(rows.len() * ECG_DIM);
    let mut labels = Vec::with_capacity(rows.len());
    let mut rescaled_rows = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let row_no = i + 1;
        if row.len() != width {
            return Err(Error::Arity {
                row: row_no,
                expected: width,
                found: row.len(),
            });
        }
        let (x, label) = row.split_at(ECG_DIM);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row: row_no });
        }
        let label = label[0];
        if !(libm::trunc(label) == label && (0.0..ECG_CLASSES as f64).contains(&label)) {
            return Err(Error::InvalidLabel {
                row: row_no,
                value: label,
                classes: ECG_CLASSES,
            });
        }
        labels.push(label as usize);
        if x.iter().all(|v| (0.0..=1.0).contains(v)) {
            features.extend_from_slice(x);
        } else {
            rescaled_rows.push(row_no);
            let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            features.extend(x.iter().map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 }));
        }
    }
    let features = Matrix::from_vec(rows.len(), ECG_DIM, features)?;
    Ok(EcgLoad {
        dataset: Dataset::new(name, features, labels, ECG_CLASSES)?,
        rescaled_rows,
    })
}

// ---------------------------------------------------------------------------
// Synthetic

/// `K` Gaussian clusters around random unit-norm centroids, `σ = 0.3`.
/// Labels cycle `0, 1, …, K−1`.
pub fn make_synthetic(seed: u64, samples: usize, dim: usize, classes: usize) -> Result<Dataset> {
    make_synthetic_with_noise(seed, samples, dim, classes, SYNTHETIC_NOISE)
}

pub fn make_synthetic_with_noise(
    seed: u64,
    samples: usize,
    dim: usize,
    classes: usize,
    sigma: f64,
) -> Result<Dataset> {
    Ok(make_synthetic_split(seed, samples, 0, dim, classes, sigma)?.0)
}

/// Train and held-out sets drawn around the same centroids. The training part
/// equals `make_synthetic_with_noise(seed, train, …)`.
pub fn make_synthetic_split(
    seed: u64,
    train: usize,
    test: usize,
    dim: usize,
    classes: usize,
    sigma: f64,
) -> Result<(Dataset, Dataset)> {
    if dim == 0 || classes == 0 {
        return Err(Error::Config("synthetic data needs dim ≥ 1 and classes ≥ 1".into()));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Config("noise level must be finite and non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = Matrix::zeros(classes, dim);
    for k in 0..classes {
        let row = centroids.row_mut(k);
        loop {
            for v in row.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let norm = libm::sqrt(row.iter().map(|v| v * v).sum::<f64>());
            if norm > 1e-12 {
                row.iter_mut().for_each(|v| *v /= norm);
                break;
            }
        }
    }
    let total = train + test;
    let mut features = Matrix::zeros(total, dim);
    let mut labels = Vec::with_capacity(total);
    for i in 0..total {
        let label = i % classes;
        labels.push(label);
        let c = centroids.row(label);
        for (x, &m) in features.row_mut(i).iter_mut().zip(c) {
            let noise: f64 = StandardNormal.sample(&mut rng);
            *x = m + sigma * noise;
        }
    }
    let all = Dataset::new("synthetic", features, labels, classes)?;
    let train_idx: Vec<usize> = (0..train).collect();
    let test_idx: Vec<usize> = (train..total).collect();
    Ok((all.subset(&train_idx), all.subset(&test_idx)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fixture() -> (Vec<u8>, Vec<u8>) {
        let mut pixels = vec![0u8; 2 * 784];
        pixels[0] = 255;
        pixels[783] = 128;
        pixels[784 + 10] = 1;
        let images = IdxImages {
            count: 2,
            rows: 28,
            cols: 28,
            pixels,
        };
        (write_idx_images(&images), write_idx_labels(&[7, 2]))
    }

    #[test]
    fn idx_fixture_decodes() {
        let (img, lab) = fixture();
        assert_eq!(&img[..4], &[0, 0, 8, 3]);
        assert_eq!(&lab[..4], &[0, 0, 8, 1]);
        let ds = mnist_from_idx("fixture", &img, &lab).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 784);
        assert_eq!(ds.labels(), &[7, 2]);
        let mut expected0 = vec![0.0; 784];
        expected0[0] = 1.0;
        expected0[783] = 128.0 / 255.0;
        assert_eq!(ds.features().row(0), expected0.as_slice());
        let mut expected1 = vec![0.0; 784];
        expected1[10] = 1.0 / 255.0;
        assert_eq!(ds.features().row(1), expected1.as_slice());
    }

    #[test]
    fn idx_round_trip_bytes() {
        let (img, lab) = fixture();
        assert_eq!(write_idx_images(&parse_idx_images(&img).unwrap()), img);
        assert_eq!(write_idx_labels(&parse_idx_labels(&lab).unwrap()), lab);
    }

    #[test]
    fn idx_errors_are_distinct() {
        let (img, lab) = fixture();
        assert_eq!(
            mnist_from_idx("x", &lab, &lab).unwrap_err(),
            Error::BadMagic {
                expected: 2051,
                found: 2049
            }
        );
        assert!(matches!(
            parse_idx_images(&img[..img.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(parse_idx_labels(&lab[..5]), Err(Error::Truncated { .. })));
        let three = write_idx_labels(&[1, 2, 3]);
        assert_eq!(
            mnist_from_idx("x", &img, &three).unwrap_err(),
            Error::CountMismatch {
                images: 2,
                labels: 3
            }
        );
        let bad_label = write_idx_labels(&[1, 10]);
        assert!(matches!(
            mnist_from_idx("x", &img, &bad_label),
            Err(Error::LabelOutOfRange { index: 1, label: 10, .. })
        ));
    }

    #[test]
    fn ecg_single_row() {
        let mut row: Vec<f64> = (0..ECG_DIM).map(|i| i as f64 / 200.0).collect();
        row.push(3.0);
        let load = ecg_from_rows("ecg", &[row.clone()]).unwrap();
        assert_eq!(load.dataset.labels(), &[3]);
        assert_eq!(load.dataset.features().row(0), &row[..ECG_DIM]);
        assert!(load.rescaled_rows.is_empty());
    }

    #[test]
    fn ecg_errors() {
        assert_eq!(ecg_from_rows("ecg", &[]).unwrap_err(), Error::EmptyDataset);
        assert_eq!(
            ecg_from_rows("ecg", &[vec![0.0; 100]]).unwrap_err(),
            Error::Arity {
                row: 1,
                expected: 188,
                found: 100
            }
        );
        let mut row = vec![0.5; ECG_DIM];
        row.push(5.0);
        assert!(matches!(
            ecg_from_rows("ecg", &[row.clone()]),
            Err(Error::InvalidLabel { row: 1, .. })
        ));
        row[ECG_DIM] = 1.5;
        assert!(ecg_from_rows("ecg", &[row]).is_err());
    }

    #[test]
    fn ecg_out_of_range_rows_are_rescaled() {
        let mut row: Vec<f64> = (0..ECG_DIM).map(|i| i as f64).collect();
        row.push(0.0);
        let mut ok = vec![0.25; ECG_DIM];
        ok.push(1.0);
        let load = ecg_from_rows("ecg", &[ok, row]).unwrap();
        assert_eq!(load.rescaled_rows, vec![2]);
        let r = load.dataset.features().row(1);
        assert_eq!(r[0], 0.0);
        assert_eq!(r[ECG_DIM - 1], 1.0);
        assert!(load.dataset.features().row(0).iter().all(|&v| v == 0.25));
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = make_synthetic(42, 50, 8, 3).unwrap();
        let b = make_synthetic(42, 50, 8, 3).unwrap();
        assert_eq!(a, b);
        let c = make_synthetic(43, 50, 8, 3).unwrap();
        assert_ne!(a.features(), c.features());
        let (train, test) = make_synthetic_split(42, 50, 10, 8, 3, SYNTHETIC_NOISE).unwrap();
        assert_eq!(train, a);
        assert_eq!(test.len(), 10);
    }

    #[test]
    fn noiseless_synthetic_is_nearest_centroid_separable() {
        let ds = make_synthetic_with_noise(9, 200, 16, 4, 0.0).unwrap();
        // With σ = 0 every sample of class k is exactly centroid k.
        let centroids: Vec<&[f64]> = (0..4).map(|k| ds.features().row(k)).collect();
        let mut correct = 0;
        for (x, &label) in ds.features().iter_rows().zip(ds.labels()) {
            let nearest = (0..4)
                .min_by(|&i, &j| {
                    let d = |c: &[f64]| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                    d(centroids[i]).partial_cmp(&d(centroids[j])).unwrap()
                })
                .unwrap();
            correct += usize::from(nearest == label);
        }
        assert_eq!(correct, ds.len());
    }
}
