//! Labeled digit data in the IDX container format.
//!
//! IDX files start with a big-endian magic number (`0x00000803` for `u8`
//! image tensors of rank 3, `0x00000801` for `u8` label vectors), followed by
//! one big-endian `u32` per dimension and the raw bytes. Pixels are scaled by
//! `1 / 255` into `[0, 1]` on load.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, IdxError, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const NUM_CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Raw,
    Jittered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<Vec<f64>>,
    labels: Vec<usize>,
    shape: (usize, usize),
    provenance: Provenance,
}

impl LabeledDataset {
    /// Builds a dataset from in-memory samples laid out as `rows x cols` images.
    pub fn new(
        samples: Vec<Vec<f64>>,
        labels: Vec<usize>,
        shape: (usize, usize),
    ) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(IdxError::CountMismatch {
                images: samples.len(),
                labels: labels.len(),
            }
            .into());
        }
        let d = shape.0 * shape.1;
        if let Some(s) = samples.iter().find(|s| s.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: s.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= NUM_CLASSES) {
            return Err(Error::Config(format!("label {l} is not a digit class")));
        }
        Ok(Self {
            samples,
            labels,
            shape,
            provenance: Provenance::Raw,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Input dimensionality `rows * cols`.
    pub fn dim(&self) -> usize {
        self.shape.0 * self.shape.1
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> (&[f64], usize) {
        (&self.samples[i], self.labels[i])
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    fn select(&self, indices: &[usize]) -> Self {
        Self {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            shape: self.shape,
            provenance: self.provenance,
        }
    }
}

/// Reads an image file and a label file into a dataset.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let image_bytes = read(images_path)?;
    let label_bytes = read(labels_path)?;
    let (shape, pixels) = parse_images(&image_bytes, images_path)?;
    let labels = parse_labels(&label_bytes, labels_path)?;
    let d = shape.0 * shape.1;
    let count = if d == 0 { 0 } else { pixels.len() / d };
    if count != labels.len() {
        return Err(IdxError::CountMismatch {
            images: count,
            labels: labels.len(),
        }
        .into());
    }
    let samples = pixels
        .chunks_exact(d.max(1))
        .take(count)
        .map(|img| img.iter().map(|&b| f64::from(b) / 255.0).collect())
        .collect();
    Ok(LabeledDataset {
        samples,
        labels,
        shape,
        provenance: Provenance::Raw,
    })
}

/// Writes a dataset as IDX files, mapping pixels back to bytes with `round(v * 255)`.
pub fn write_idx(
    ds: &LabeledDataset,
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<()> {
    let (rows, cols) = ds.shape;
    let mut img = Vec::with_capacity(16 + ds.len() * rows * cols);
    img.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    for dim in [ds.len(), rows, cols] {
        img.extend_from_slice(&(dim as u32).to_be_bytes());
    }
    for s in &ds.samples {
        img.extend(s.iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
    }
    let mut lab = Vec::with_capacity(8 + ds.len());
    lab.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    lab.extend(ds.labels.iter().map(|&l| l as u8));
    write(images_path.as_ref(), &img)?;
    write(labels_path.as_ref(), &lab)?;
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>, IdxError> {
    fs::read(path).map_err(|source| IdxError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), IdxError> {
    fs::write(path, bytes).map_err(|source| IdxError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, field: &'static str) -> Result<&'a [u8], IdxError> {
        let available = self.bytes.len() - self.pos;
        if available < len {
            return Err(IdxError::Truncated {
                path: PathBuf::from(self.path),
                field,
                needed: len,
                available,
            });
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u32(&mut self, field: &'static str) -> Result<u32, IdxError> {
        let b = self.take(4, field)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<(), IdxError> {
        let found = self.u32("magic number")?;
        if found != expected {
            return Err(IdxError::BadMagic {
                path: PathBuf::from(self.path),
                found,
                expected,
            });
        }
        Ok(())
    }
}

fn parse_images<'a>(bytes: &'a [u8], path: &'a Path) -> Result<((usize, usize), &'a [u8]), IdxError> {
    let mut c = Cursor { bytes, pos: 0, path };
    c.magic(IMAGE_MAGIC)?;
    let count = c.u32("image count")? as usize;
    let rows = c.u32("row count")? as usize;
    let cols = c.u32("column count")? as usize;
    let pixels = c.take(count * rows * cols, "pixel data")?;
    Ok(((rows, cols), pixels))
}

fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<usize>, IdxError> {
    let mut c = Cursor { bytes, pos: 0, path };
    c.magic(LABEL_MAGIC)?;
    let count = c.u32("label count")? as usize;
    let raw = c.take(count, "label data")?;
    raw.iter()
        .enumerate()
        .map(|(index, &label)| {
            if usize::from(label) < NUM_CLASSES {
                Ok(usize::from(label))
            } else {
                Err(IdxError::LabelOutOfRange {
                    path: path.to_path_buf(),
                    index,
                    label,
                })
            }
        })
        .collect()
}

/// The eight one-pixel shifts `(dx, dy)`; positive `dx` moves content right,
/// positive `dy` moves it down.
pub const JITTER_OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Shifts an image by `(dx, dy)`; pixels moved out are dropped, pixels moved
/// in are background (zero).
pub fn shift_image(img: &[f64], shape: (usize, usize), dx: isize, dy: isize) -> Vec<f64> {
    let (rows, cols) = shape;
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let (tr, tc) = (r as isize + dy, c as isize + dx);
            if tr >= 0 && tc >= 0 && (tr as usize) < rows && (tc as usize) < cols {
                out[tr as usize * cols + tc as usize] = img[r * cols + c];
            }
        }
    }
    out
}

/// Each raw sample followed by its eight one-pixel shifts.
pub fn jitter8(ds: &LabeledDataset) -> Result<LabeledDataset> {
    if ds.provenance != Provenance::Raw {
        return Err(Error::Config("dataset is already jittered".into()));
    }
    let mut samples = Vec::with_capacity(ds.len() * 9);
    let mut labels = Vec::with_capacity(ds.len() * 9);
    for (img, &label) in ds.samples.iter().zip(&ds.labels) {
        samples.push(img.clone());
        samples.extend(
            JITTER_OFFSETS
                .iter()
                .map(|&(dx, dy)| shift_image(img, ds.shape, dx, dy)),
        );
        labels.extend(std::iter::repeat_n(label, 9));
    }
    Ok(LabeledDataset {
        samples,
        labels,
        shape: ds.shape,
        provenance: Provenance::Jittered,
    })
}

/// One-of-`c` target vector.
pub fn one_hot(label: usize, c: usize) -> Result<Vec<f64>> {
    if label >= c {
        return Err(Error::Config(format!("label {label} out of range for {c} classes")));
    }
    let mut t = vec![0.0; c];
    t[label] = 1.0;
    Ok(t)
}

/// Deterministic uniform subset of `k` samples drawn without replacement.
///
/// For `k >= 500` the draw is repeated once with a derived seed when some
/// class count strays more than 20% from `k / 10`.
pub fn subset(ds: &LabeledDataset, k: usize, seed: u64) -> Result<LabeledDataset> {
    if k > ds.len() {
        return Err(Error::Config(format!(
            "subset of {k} requested from {} samples",
            ds.len()
        )));
    }
    let draw = |stream: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        ds.select(&index::sample(&mut rng, ds.len(), k).into_vec())
    };
    let first = draw(0);
    if k >= 500 && !balanced(&first, k) {
        return Ok(draw(1));
    }
    Ok(first)
}

fn balanced(ds: &LabeledDataset, k: usize) -> bool {
    let expected = k as f64 / NUM_CLASSES as f64;
    ds.class_counts()
        .iter()
        .all(|&c| (c as f64 - expected).abs() <= 0.2 * expected)
}
