//! MNIST IDX files: big-endian `u32` magic and dimension sizes, then raw bytes.

use std::fs;
use std::path::Path;

use curvinit_core::{Dataset, Matrix, Targets};

use crate::error::{CliError, CliResult};

pub const IMAGES_MAGIC: u32 = 2051;
pub const LABELS_MAGIC: u32 = 2049;
const NUM_CLASSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn u32(&mut self) -> CliResult<u32> {
        let end = self.pos + 4;
        let b = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| CliError::Data(format!("{} file truncated in header", self.what)))?;
        self.pos = end;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> CliResult<()> {
        let m = self.u32()?;
        if m != expected {
            return Err(CliError::Data(format!("{} file has magic {m}, expected {expected}", self.what)));
        }
        Ok(())
    }

    fn body(&self, len: usize) -> CliResult<&'a [u8]> {
        let have = self.bytes.len() - self.pos;
        if have < len {
            return Err(CliError::Data(format!(
                "{} file truncated: {len} payload bytes expected, {have} present",
                self.what
            )));
        }
        Ok(&self.bytes[self.pos..self.pos + len])
    }
}

pub fn parse_images(bytes: &[u8]) -> CliResult<IdxImages> {
    let mut r = Reader { bytes, pos: 0, what: "image" };
    r.magic(IMAGES_MAGIC)?;
    let count = r.u32()? as usize;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let len = count
        .checked_mul(rows)
        .and_then(|a| a.checked_mul(cols))
        .ok_or_else(|| CliError::Data("image dimensions overflow".into()))?;
    let pixels = r.body(len)?.to_vec();
    Ok(IdxImages { count, rows, cols, pixels })
}

pub fn parse_labels(bytes: &[u8]) -> CliResult<Vec<u8>> {
    let mut r = Reader { bytes, pos: 0, what: "label" };
    r.magic(LABELS_MAGIC)?;
    let count = r.u32()? as usize;
    Ok(r.body(count)?.to_vec())
}

/// Builds a dataset from raw IDX bytes; pixels become `byte / 255`. `limit`
/// keeps only the first images.
pub fn mnist_from_bytes(images: &[u8], labels: &[u8], limit: Option<usize>) -> CliResult<Dataset> {
    let img = parse_images(images)?;
    let lab = parse_labels(labels)?;
    if img.count != lab.len() {
        return Err(CliError::Data(format!("{} images but {} labels", img.count, lab.len())));
    }
    if img.count == 0 {
        return Err(CliError::Data("IDX files contain no images".into()));
    }
    let n = limit.map_or(img.count, |l| l.min(img.count));
    let d = img.rows * img.cols;
    let inputs: Vec<f64> = img.pixels[..n * d].iter().map(|&p| f64::from(p) / 255.0).collect();
    let labels: Vec<usize> = lab[..n].iter().map(|&c| usize::from(c)).collect();
    if let Some(&bad) = labels.iter().find(|&&c| c >= NUM_CLASSES) {
        return Err(CliError::Data(format!("label {bad} is not a digit")));
    }
    Ok(Dataset::new(
        Matrix::from_vec(n, d, inputs)?,
        Targets::Classes { labels, num_classes: NUM_CLASSES },
        "mnist",
    )?)
}

pub fn load_mnist_idx(images: &Path, labels: &Path, limit: Option<usize>) -> CliResult<Dataset> {
    let ib = fs::read(images).map_err(|e| CliError::io(images, e))?;
    let lb = fs::read(labels).map_err(|e| CliError::io(labels, e))?;
    mnist_from_bytes(&ib, &lb, limit)
}
