//! IDX file ingestion and dataset preparation.
//!
//! The IDX layout is the standard MNIST container, read bit-exactly:
//! a 4-byte big-endian magic (2051 for images, 2049 for labels), 4-byte
//! big-endian dimension sizes (count, then rows and columns for images),
//! then row-major unsigned bytes.
//!
//! [`prepare`] filters to a digit subset, scales pixels to [0, 1], one-hot
//! encodes labels, and draws class-balanced subsets deterministically. The
//! train subset is drawn only from the train partition and the test subset
//! only from the test partition.

use std::io;
use std::path::{Path, PathBuf};

use ensemble_vqc_core::rng::substream;
use rand::seq::SliceRandom;

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

/// Conventional MNIST file names looked up inside a data directory.
pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

// seed streams used by prepare(); per-partition so draws are independent
const STREAM_TRAIN_POOL: u64 = 10;
const STREAM_TRAIN_ORDER: u64 = 11;
const STREAM_TEST_POOL: u64 = 12;
const STREAM_TEST_ORDER: u64 = 13;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: bad magic {got:#010x}, expected {expected:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        got: u32,
    },
    #[error("{path}: truncated file, need {expected} bytes but found {got}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        got: usize,
    },
    #[error("label value {value} is not a digit 0..=9")]
    LabelValue { value: u8 },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("digit list must be a non-empty set of digits 0..=9 without repeats")]
    InvalidDigits,
    #[error("not enough samples of digit {digit}: need {needed}, have {available}")]
    InsufficientSamples {
        digit: u8,
        needed: usize,
        available: usize,
    },
    #[error("{0}")]
    Malformed(String),
}

/// Raw image tensor from an IDX file.
#[derive(Clone, Debug)]
pub struct RawImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// count * rows * cols bytes, sample-major.
    pub pixels: Vec<u8>,
}

impl RawImages {
    pub fn feature_dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn sample(&self, i: usize) -> &[u8] {
        let d = self.feature_dim();
        &self.pixels[i * d..(i + 1) * d]
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    std::fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_u32_be(bytes: &[u8], offset: usize, path: &Path) -> Result<u32, DataError> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
            expected: end,
            got: bytes.len(),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Reads an IDX image file (magic 2051).
pub fn load_idx_images(path: &Path) -> Result<RawImages, DataError> {
    let bytes = read_file(path)?;
    let magic = read_u32_be(&bytes, 0, path)?;
    if magic != IMAGE_MAGIC {
        return Err(DataError::BadMagic {
            path: path.to_path_buf(),
            expected: IMAGE_MAGIC,
            got: magic,
        });
    }
    let count = read_u32_be(&bytes, 4, path)? as usize;
    let rows = read_u32_be(&bytes, 8, path)? as usize;
    let cols = read_u32_be(&bytes, 12, path)? as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() != expected {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
            expected,
            got: bytes.len(),
        });
    }
    Ok(RawImages {
        count,
        rows,
        cols,
        pixels: bytes[16..].to_vec(),
    })
}

/// Reads an IDX label file (magic 2049); every label must be a digit.
pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>, DataError> {
    let bytes = read_file(path)?;
    let magic = read_u32_be(&bytes, 0, path)?;
    if magic != LABEL_MAGIC {
        return Err(DataError::BadMagic {
            path: path.to_path_buf(),
            expected: LABEL_MAGIC,
            got: magic,
        });
    }
    let count = read_u32_be(&bytes, 4, path)? as usize;
    let expected = 8 + count;
    if bytes.len() != expected {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
            expected,
            got: bytes.len(),
        });
    }
    let labels = bytes[8..].to_vec();
    if let Some(&value) = labels.iter().find(|&&v| v > 9) {
        return Err(DataError::LabelValue { value });
    }
    Ok(labels)
}

/// One loaded and paired IDX partition.
#[derive(Clone, Debug)]
pub struct Partition {
    pub images: RawImages,
    pub labels: Vec<u8>,
}

impl Partition {
    pub fn load(images_path: &Path, labels_path: &Path) -> Result<Self, DataError> {
        let images = load_idx_images(images_path)?;
        let labels = load_idx_labels(labels_path)?;
        if images.count != labels.len() {
            return Err(DataError::CountMismatch {
                images: images.count,
                labels: labels.len(),
            });
        }
        Ok(Partition { images, labels })
    }
}

/// Train and test partitions, as found in a standard MNIST directory.
#[derive(Clone, Debug)]
pub struct MnistData {
    pub train: Partition,
    pub test: Partition,
}

pub fn load_mnist_dir(dir: &Path) -> Result<MnistData, DataError> {
    Ok(MnistData {
        train: Partition::load(&dir.join(TRAIN_IMAGES), &dir.join(TRAIN_LABELS))?,
        test: Partition::load(&dir.join(TEST_IMAGES), &dir.join(TEST_LABELS))?,
    })
}

/// Normalized samples with one-hot labels over an ordered digit subset.
#[derive(Clone, Debug)]
pub struct Dataset {
    /// Pixel vectors scaled by 1/255.
    pub images: Vec<Vec<f64>>,
    /// One-hot vectors of dimension `class_set.len()`.
    pub labels: Vec<Vec<f64>>,
    /// Retained digits; one-hot position = index in this list.
    pub class_set: Vec<u8>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.images.first().map_or(0, Vec::len)
    }
}

fn validate_digits(digits: &[u8]) -> Result<(), DataError> {
    if digits.is_empty() || digits.len() > 10 || digits.iter().any(|&d| d > 9) {
        return Err(DataError::InvalidDigits);
    }
    for (i, d) in digits.iter().enumerate() {
        if digits[..i].contains(d) {
            return Err(DataError::InvalidDigits);
        }
    }
    Ok(())
}

/// Draws `size` samples from one partition, class-balanced over `digits`
/// (per-class counts differ by at most one; the first `size % C` digits in
/// list order get the extra sample). `size == 0` keeps every matching
/// sample without balancing.
fn prepare_partition(
    partition: &Partition,
    digits: &[u8],
    size: usize,
    seed: u64,
    pool_stream: u64,
    order_stream: u64,
) -> Result<Dataset, DataError> {
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); digits.len()];
    for (idx, label) in partition.labels.iter().enumerate() {
        if let Some(class) = digits.iter().position(|d| d == label) {
            pools[class].push(idx);
        }
    }

    let mut rng = substream(seed, pool_stream);
    let mut chosen: Vec<(usize, usize)> = Vec::new(); // (sample index, class)
    if size == 0 {
        for (class, pool) in pools.iter().enumerate() {
            chosen.extend(pool.iter().map(|&i| (i, class)));
        }
    } else {
        let base = size / digits.len();
        let extra = size % digits.len();
        for (class, pool) in pools.iter_mut().enumerate() {
            let want = base + usize::from(class < extra);
            if pool.len() < want {
                return Err(DataError::InsufficientSamples {
                    digit: digits[class],
                    needed: want,
                    available: pool.len(),
                });
            }
            pool.shuffle(&mut rng);
            chosen.extend(pool[..want].iter().map(|&i| (i, class)));
        }
    }

    let mut order_rng = substream(seed, order_stream);
    chosen.shuffle(&mut order_rng);

    let mut images = Vec::with_capacity(chosen.len());
    let mut labels = Vec::with_capacity(chosen.len());
    for (idx, class) in chosen {
        images.push(
            partition
                .images
                .sample(idx)
                .iter()
                .map(|&b| f64::from(b) / 255.0)
                .collect(),
        );
        let mut one_hot = vec![0.0; digits.len()];
        one_hot[class] = 1.0;
        labels.push(one_hot);
    }
    Ok(Dataset {
        images,
        labels,
        class_set: digits.to_vec(),
    })
}

/// Builds the train and test datasets for an experiment: digit filtering,
/// 1/255 scaling, one-hot labels, deterministic class-balanced subsampling.
pub fn prepare(
    data: &MnistData,
    digits: &[u8],
    train_size: usize,
    test_size: usize,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    validate_digits(digits)?;
    let train = prepare_partition(
        &data.train,
        digits,
        train_size,
        seed,
        STREAM_TRAIN_POOL,
        STREAM_TRAIN_ORDER,
    )?;
    let test = prepare_partition(
        &data.test,
        digits,
        test_size,
        seed,
        STREAM_TEST_POOL,
        STREAM_TEST_ORDER,
    )?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// In-memory IDX fixtures.
    pub fn write_idx_images(path: &Path, samples: &[Vec<u8>], rows: usize, cols: usize) {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&(samples.len() as u32).to_be_bytes());
        bytes.extend_from_slice(&(rows as u32).to_be_bytes());
        bytes.extend_from_slice(&(cols as u32).to_be_bytes());
        for s in samples {
            assert_eq!(s.len(), rows * cols);
            bytes.extend_from_slice(s);
        }
        std::fs::write(path, bytes).unwrap();
    }

    pub fn write_idx_labels(path: &Path, labels: &[u8]) {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        bytes.extend_from_slice(labels);
        std::fs::write(path, bytes).unwrap();
    }

    #[test]
    fn synthetic_image_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("imgs");
        write_idx_images(&path, &[vec![0, 128, 255, 64]], 2, 2);
        let raw = load_idx_images(&path).unwrap();
        assert_eq!((raw.count, raw.rows, raw.cols), (1, 2, 2));
        assert_eq!(raw.sample(0), &[0, 128, 255, 64]);
    }

    #[test]
    fn synthetic_label_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lbls");
        write_idx_labels(&path, &[0, 1, 2]);
        assert_eq!(load_idx_labels(&path).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("imgs");
        write_idx_labels(&path, &[0]); // label magic in an image slot
        assert!(matches!(
            load_idx_images(&path),
            Err(DataError::BadMagic { .. })
        ));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("imgs");
        write_idx_images(&path, &[vec![1, 2, 3, 4]], 2, 2);
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.pop();
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_idx_images(&path),
            Err(DataError::Truncated { .. })
        ));
    }

    #[test]
    fn non_digit_label_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lbls");
        write_idx_labels(&path, &[0, 10]);
        assert!(matches!(
            load_idx_labels(&path),
            Err(DataError::LabelValue { value: 10 })
        ));
    }

    #[test]
    fn count_mismatch_detected_at_pairing() {
        let dir = tempfile::tempdir().unwrap();
        let imgs = dir.path().join("imgs");
        let lbls = dir.path().join("lbls");
        write_idx_images(&imgs, &[vec![5; 4], vec![9; 4]], 2, 2);
        write_idx_labels(&lbls, &[1]);
        assert!(matches!(
            Partition::load(&imgs, &lbls),
            Err(DataError::CountMismatch {
                images: 2,
                labels: 1
            })
        ));
    }

    fn fixture(counts: &[(u8, usize)]) -> MnistData {
        let mut samples = Vec::new();
        let mut labels = Vec::new();
        for &(digit, count) in counts {
            for i in 0..count {
                samples.push(vec![digit * 20 + (i % 5) as u8; 4]);
                labels.push(digit);
            }
        }
        let images = RawImages {
            count: samples.len(),
            rows: 2,
            cols: 2,
            pixels: samples.concat(),
        };
        let partition = Partition { images, labels };
        MnistData {
            train: partition.clone(),
            test: partition,
        }
    }

    #[test]
    fn prepare_one_hot_and_scaling() {
        let data = fixture(&[(0, 4), (1, 4), (7, 2)]);
        let (train, test) = prepare(&data, &[0, 1], 4, 2, 3).unwrap();
        assert_eq!(train.len(), 4);
        assert_eq!(test.len(), 2);
        assert_eq!(train.class_set, vec![0, 1]);
        for (img, label) in train.images.iter().zip(&train.labels) {
            assert_eq!(label.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(label.len(), 2);
            assert!(img.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
        // digit-0 samples have pixel bytes < 20, digit-1 in 20..25
        for (img, label) in train.images.iter().zip(&train.labels) {
            let is_zero = label[0] == 1.0;
            let raw = (img[0] * 255.0).round() as u8;
            assert_eq!(is_zero, raw < 20);
        }
    }

    #[test]
    fn pixel_scaling_endpoints() {
        let images = RawImages {
            count: 2,
            rows: 1,
            cols: 2,
            pixels: vec![0, 255, 128, 51],
        };
        let partition = Partition {
            images,
            labels: vec![0, 1],
        };
        let data = MnistData {
            train: partition.clone(),
            test: partition,
        };
        let (train, _) = prepare(&data, &[0, 1], 0, 0, 0).unwrap();
        let mut pixels: Vec<f64> = train.images.iter().flatten().cloned().collect();
        pixels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(pixels[0], 0.0);
        assert_eq!(pixels[3], 1.0);
        assert_eq!(pixels[1], 51.0 / 255.0);
    }

    #[test]
    fn prepare_three_classes() {
        let data = fixture(&[(0, 3), (1, 3), (2, 3)]);
        let (train, _) = prepare(&data, &[0, 1, 2], 6, 3, 1).unwrap();
        for label in &train.labels {
            assert_eq!(label.len(), 3);
        }
    }

    #[test]
    fn prepare_is_class_balanced_and_deterministic() {
        let data = fixture(&[(0, 10), (1, 10), (2, 10)]);
        let (train_a, test_a) = prepare(&data, &[0, 1, 2], 7, 6, 9).unwrap();
        let mut counts = [0usize; 3];
        for label in &train_a.labels {
            counts[label.iter().position(|&v| v == 1.0).unwrap()] += 1;
        }
        let max = counts.iter().max().unwrap();
        let min = counts.iter().min().unwrap();
        assert!(max - min <= 1, "class counts {counts:?}");
        assert_eq!(counts.iter().sum::<usize>(), 7);

        let (train_b, test_b) = prepare(&data, &[0, 1, 2], 7, 6, 9).unwrap();
        assert_eq!(train_a.images, train_b.images);
        assert_eq!(train_a.labels, train_b.labels);
        assert_eq!(test_a.images, test_b.images);
        assert_eq!(test_b.labels, test_b.labels);
    }

    #[test]
    fn prepare_rejects_bad_digit_sets_and_shortages() {
        let data = fixture(&[(0, 2), (1, 2)]);
        assert!(matches!(
            prepare(&data, &[], 1, 1, 0),
            Err(DataError::InvalidDigits)
        ));
        assert!(matches!(
            prepare(&data, &[3, 3], 1, 1, 0),
            Err(DataError::InvalidDigits)
        ));
        assert!(matches!(
            prepare(&data, &[0, 1], 10, 1, 0),
            Err(DataError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn size_zero_takes_all_matching_samples() {
        let data = fixture(&[(0, 4), (1, 6), (2, 5)]);
        let (train, _) = prepare(&data, &[0, 1], 0, 0, 2).unwrap();
        assert_eq!(train.len(), 10);
    }
}
