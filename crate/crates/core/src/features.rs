//! Per-image feature vectors for the distribution metrics.
//!
//! The built-in extractor is a deterministic stand-in for a learned encoder:
//! a `g`×`g` grid of block means followed by a 32-bin intensity histogram.
//! Vectors from any external extractor can be brought in through the
//! `MDMKFEAT` file format.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image_io::ImageGray;

pub const HISTOGRAM_BINS: usize = 32;
pub const DEFAULT_GRID: usize = 16;
pub const DEFAULT_FEATURE_DIM: usize = DEFAULT_GRID * DEFAULT_GRID + HISTOGRAM_BINS;

const MAGIC: &[u8; 8] = b"MDMKFEAT";
const VERSION: u8 = 1;

/// `n`×`d` feature matrix (row-major) with one source id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    vectors: Vec<f64>,
    ids: Vec<String>,
    dim: usize,
}

impl FeatureSet {
    pub fn new(rows: Vec<Vec<f64>>, ids: Vec<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::arg("feature set needs at least one row"));
        }
        if rows.len() != ids.len() {
            return Err(Error::arg(format!(
                "{} rows but {} ids",
                rows.len(),
                ids.len()
            )));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::arg("feature dimension must be positive"));
        }
        let mut vectors = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::arg(format!(
                    "row {i} has length {}, expected {dim}",
                    row.len()
                )));
            }
            vectors.extend_from_slice(row);
        }
        Self::from_flat(vectors, ids, dim)
    }

    pub fn from_flat(vectors: Vec<f64>, ids: Vec<String>, dim: usize) -> Result<Self> {
        if dim == 0 || ids.is_empty() || vectors.len() != ids.len() * dim {
            return Err(Error::arg(format!(
                "flat buffer of {} values does not form {} rows of dimension {dim}",
                vectors.len(),
                ids.len()
            )));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("feature vectors must be finite"));
        }
        Ok(Self { vectors, ids, dim })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.vectors.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.vectors
    }
}

/// Grid edge `g` such that `out_dim = g² + 32`.
pub fn grid_for_dim(out_dim: usize) -> Result<usize> {
    let grid_cells = out_dim
        .checked_sub(HISTOGRAM_BINS)
        .filter(|&c| c > 0)
        .ok_or_else(|| {
            Error::arg(format!(
                "feature dimension {out_dim} must exceed {HISTOGRAM_BINS}"
            ))
        })?;
    let g = (grid_cells as f64).sqrt().round() as usize;
    if g * g != grid_cells {
        return Err(Error::arg(format!(
            "feature dimension {out_dim} is not g^2 + {HISTOGRAM_BINS}"
        )));
    }
    Ok(g)
}

pub fn extract_features_builtin(img: &ImageGray, out_dim: usize) -> Result<Vec<f64>> {
    let g = grid_for_dim(out_dim)?;
    let (w, h) = (img.width(), img.height());
    if w < g || h < g {
        return Err(Error::arg(format!(
            "image {w}x{h} is smaller than the {g}x{g} feature grid"
        )));
    }

    let mut out = Vec::with_capacity(out_dim);
    for gy in 0..g {
        let (y0, y1) = (gy * h / g, (gy + 1) * h / g);
        for gx in 0..g {
            let (x0, x1) = (gx * w / g, (gx + 1) * w / g);
            let mut sum = 0.0;
            for y in y0..y1 {
                sum += img.pixels()[y * w + x0..y * w + x1].iter().sum::<f64>();
            }
            out.push(sum / ((x1 - x0) * (y1 - y0)) as f64);
        }
    }

    let mut hist = [0usize; HISTOGRAM_BINS];
    for &p in img.pixels() {
        let bin = (p.clamp(0.0, 1.0) * HISTOGRAM_BINS as f64) as usize;
        hist[bin.min(HISTOGRAM_BINS - 1)] += 1;
    }
    let total = img.pixels().len() as f64;
    out.extend(hist.iter().map(|&c| c as f64 / total));
    Ok(out)
}

/// Serializes to the `MDMKFEAT` v1 layout: magic, version byte, `n` and `d`
/// as LE u32, `n·d` LE f64 row-major, then `n` ids each as LE u32 byte length
/// plus UTF-8 bytes.
pub fn encode_features(fs: &FeatureSet) -> Result<Vec<u8>> {
    let n = u32::try_from(fs.len()).map_err(|_| Error::arg("too many feature rows"))?;
    let d = u32::try_from(fs.dim()).map_err(|_| Error::arg("feature dimension too large"))?;
    let mut buf = Vec::with_capacity(17 + fs.as_flat().len() * 8);
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&d.to_le_bytes());
    for v in fs.as_flat() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for id in fs.ids() {
        let len = u32::try_from(id.len()).map_err(|_| Error::arg("id too long"))?;
        buf.extend_from_slice(&len.to_le_bytes());
        buf.extend_from_slice(id.as_bytes());
    }
    Ok(buf)
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureSet> {
    let mut cur = bytes;
    let mut take = |len: usize, what: &str| -> Result<&[u8]> {
        if cur.len() < len {
            return Err(Error::Format(format!(
                "truncated feature file while reading {what}"
            )));
        }
        let (head, tail) = cur.split_at(len);
        cur = tail;
        Ok(head)
    };
    if take(8, "magic")? != MAGIC {
        return Err(Error::Format("bad magic, expected MDMKFEAT".into()));
    }
    let version = take(1, "version")?[0];
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported feature file version {version}"
        )));
    }
    let n = u32::from_le_bytes(take(4, "row count")?.try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(take(4, "dimension")?.try_into().unwrap()) as usize;
    if n == 0 {
        return Err(Error::Format("feature file holds zero rows".into()));
    }
    if d == 0 {
        return Err(Error::Format("feature file has zero dimension".into()));
    }
    let count = n
        .checked_mul(d)
        .ok_or_else(|| Error::Format("row count times dimension overflows".into()))?;
    let raw = take(count.saturating_mul(8), "matrix")?;
    let vectors: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        let len = u32::from_le_bytes(take(4, "id length")?.try_into().unwrap()) as usize;
        let s = std::str::from_utf8(take(len, "id")?)
            .map_err(|e| Error::Format(format!("id is not UTF-8: {e}")))?;
        ids.push(s.to_owned());
    }
    if !cur.is_empty() {
        return Err(Error::Format(format!(
            "{} trailing bytes after feature data",
            cur.len()
        )));
    }
    FeatureSet::from_flat(vectors, ids, d).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_features(fs: &FeatureSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_features(fs)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_features(&bytes)
}
