//! Lossless compressed size as a diversity proxy.
//!
//! Each row of the 8-bit image is predicted with one of the five PNG filters
//! (chosen per row by minimum sum of absolute signed residuals), then the
//! filtered stream is DEFLATE-compressed at a fixed level. Sizes are only
//! comparable between datasets measured with this exact configuration.

use std::io::Write;

use flate2::write::DeflateEncoder;
use flate2::Compression;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image_io::{load_image, quantize, BitDepth, DatasetManifest, ImageGray};

pub const DEFLATE_LEVEL: u32 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
enum RowFilter {
    None = 0,
    Left = 1,
    Up = 2,
    Average = 3,
    Paeth = 4,
}

const FILTERS: [RowFilter; 5] = [
    RowFilter::None,
    RowFilter::Left,
    RowFilter::Up,
    RowFilter::Average,
    RowFilter::Paeth,
];

fn paeth(a: u8, b: u8, c: u8) -> u8 {
    let p = i16::from(a) + i16::from(b) - i16::from(c);
    let pa = (p - i16::from(a)).abs();
    let pb = (p - i16::from(b)).abs();
    let pc = (p - i16::from(c)).abs();
    if pa <= pb && pa <= pc {
        a
    } else if pb <= pc {
        b
    } else {
        c
    }
}

fn apply_filter(filter: RowFilter, row: &[u8], prev: &[u8], out: &mut [u8]) {
    for i in 0..row.len() {
        let left = if i > 0 { row[i - 1] } else { 0 };
        let up = prev[i];
        let up_left = if i > 0 { prev[i - 1] } else { 0 };
        let pred = match filter {
            RowFilter::None => 0,
            RowFilter::Left => left,
            RowFilter::Up => up,
            RowFilter::Average => ((u16::from(left) + u16::from(up)) / 2) as u8,
            RowFilter::Paeth => paeth(left, up, up_left),
        };
        out[i] = row[i].wrapping_sub(pred);
    }
}

fn residual_cost(residuals: &[u8]) -> u64 {
    residuals
        .iter()
        .map(|&r| u64::from((r as i8).unsigned_abs()))
        .sum()
}

/// Filtered byte stream: one filter tag byte followed by the residual row.
fn filter_rows(img: &ImageGray) -> Vec<u8> {
    let w = img.width();
    let levels: Vec<u8> = img
        .pixels()
        .iter()
        .map(|&p| quantize(p, BitDepth::Eight) as u8)
        .collect();
    let zero_row = vec![0u8; w];
    let mut out = Vec::with_capacity((w + 1) * img.height());
    let mut best = vec![0u8; w];
    let mut trial = vec![0u8; w];
    for (y, row) in levels.chunks_exact(w).enumerate() {
        let prev = if y == 0 {
            &zero_row[..]
        } else {
            &levels[(y - 1) * w..y * w]
        };
        let mut best_filter = RowFilter::None;
        let mut best_cost = u64::MAX;
        for filter in FILTERS {
            apply_filter(filter, row, prev, &mut trial);
            let cost = residual_cost(&trial);
            if cost < best_cost {
                best_cost = cost;
                best_filter = filter;
                std::mem::swap(&mut best, &mut trial);
            }
        }
        out.push(best_filter as u8);
        out.extend_from_slice(&best);
    }
    out
}

/// Bytes produced by the fixed filter + DEFLATE pipeline.
pub fn lossless_compress_size(img: &ImageGray) -> usize {
    let filtered = filter_rows(img);
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::new(DEFLATE_LEVEL));
    enc.write_all(&filtered)
        .expect("writing to a Vec cannot fail");
    enc.finish().expect("writing to a Vec cannot fail").len()
}

/// Mean compressed size over already-decoded images.
pub fn mean_compressed_size(images: &[ImageGray]) -> Result<f64> {
    if images.is_empty() {
        return Err(Error::arg("variety needs at least one image"));
    }
    let sizes: Vec<usize> = images.par_iter().map(lossless_compress_size).collect();
    Ok(sizes.iter().sum::<usize>() as f64 / sizes.len() as f64)
}

/// Mean compressed size over the images of a dataset.
pub fn variety(manifest: &DatasetManifest) -> Result<f64> {
    if manifest.is_empty() {
        return Err(Error::arg("variety needs a nonempty dataset"));
    }
    let sizes = manifest
        .entries
        .par_iter()
        .map(|e| load_image(manifest.full_path(e)).map(|img| lossless_compress_size(&img)))
        .collect::<Result<Vec<_>>>()?;
    Ok(sizes.iter().sum::<usize>() as f64 / sizes.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image_io::{save_image, scan_dataset, ManifestEntry};
    use rand::{Rng, SeedableRng};

    fn noise(w: usize, h: usize, seed: u64) -> ImageGray {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ImageGray::from_pixels(w, h, (0..w * h).map(|_| rng.gen::<f64>()).collect()).unwrap()
    }

    fn gradient(w: usize, h: usize) -> ImageGray {
        let px = (0..w * h)
            .map(|i| ((i % w) + (i / w)) as f64 / (w + h) as f64)
            .collect();
        ImageGray::from_pixels(w, h, px).unwrap()
    }

    #[test]
    fn paeth_matches_png_definition() {
        assert_eq!(paeth(10, 20, 10), 20);
        assert_eq!(paeth(20, 10, 10), 20);
        assert_eq!(paeth(5, 5, 5), 5);
        assert_eq!(paeth(0, 0, 255), 0);
    }

    #[test]
    fn deterministic_and_entropy_ordered() {
        let n = noise(256, 256, 7);
        assert_eq!(lossless_compress_size(&n), lossless_compress_size(&n));

        let flat = ImageGray::filled(256, 256, 0.37).unwrap();
        let flat_size = lossless_compress_size(&flat);
        assert!(
            flat_size < 65536 / 100,
            "constant image compressed to {flat_size} bytes"
        );

        let g = gradient(256, 256);
        assert!(lossless_compress_size(&n) > lossless_compress_size(&g));
        assert!(flat_size < lossless_compress_size(&n));
    }

    #[test]
    fn constant_rows_filter_to_zero_residuals() {
        let flat = ImageGray::filled(8, 3, 0.5).unwrap();
        let f = filter_rows(&flat);
        assert_eq!(f.len(), 27);
        // rows after the first are pure "up" predictions
        for row in f.chunks_exact(9).skip(1) {
            assert_eq!(row[0], RowFilter::Up as u8);
            assert!(row[1..].iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn variety_of_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let imgs = [
            noise(64, 64, 1),
            noise(64, 64, 2),
            gradient(64, 64),
            ImageGray::filled(64, 64, 0.2).unwrap(),
        ];
        for (i, img) in imgs.iter().enumerate() {
            save_image(img, dir.path().join(format!("{i}.png")), BitDepth::Eight).unwrap();
        }
        let manifest = scan_dataset(dir.path(), false).unwrap();
        let v = variety(&manifest).unwrap();
        assert!((v - mean_compressed_size(&imgs).unwrap()).abs() < 1e-9);

        // mean of the halves weighted by their sizes
        let half = |range: std::ops::Range<usize>| DatasetManifest {
            root: manifest.root.clone(),
            entries: manifest.entries[range].to_vec(),
        };
        let (a, b) = (variety(&half(0..1)).unwrap(), variety(&half(1..4)).unwrap());
        assert!((v - (a + 3.0 * b) / 4.0).abs() < 1e-9);

        let mut shuffled = manifest.clone();
        shuffled.entries.reverse();
        assert_eq!(variety(&shuffled).unwrap(), v);

        let same = DatasetManifest {
            root: manifest.root.clone(),
            entries: vec![manifest.entries[2].clone(); 3],
        };
        let single =
            lossless_compress_size(&load_image(manifest.full_path(&manifest.entries[2])).unwrap());
        assert_eq!(variety(&same).unwrap(), single as f64);

        let empty = DatasetManifest {
            root: manifest.root.clone(),
            entries: Vec::<ManifestEntry>::new(),
        };
        assert!(matches!(variety(&empty), Err(Error::Argument(_))));
    }
}
