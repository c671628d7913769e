//! Seeded procedural chest-radiograph-like phantoms for desk-scale runs.
//!
//! Every image mixes a smooth illumination gradient, soft-edged ellipses for
//! lungs, mediastinum and ribs-ish bands, low-frequency texture and detector
//! grain. Odd indices belong to the second pseudo-class, which adds a dense
//! blob at one lung base. Image `i` draws from ChaCha stream `i` of the seed,
//! so output does not depend on generation order.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image_io::{resize_bilinear, save_image, BitDepth, ImageGray};

pub const CORPUS_SIZE: usize = 512;
pub const CLASS_NAMES: [&str; 2] = ["class_a", "class_b"];

const FLOOR: f64 = 0.04;
const CEIL: f64 = 0.96;
const GRAIN_SIGMA: f64 = 0.02;
const TEXTURE_GRID: usize = 24;
const TEXTURE_SIGMA: f64 = 0.03;

struct Ellipse {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    /// Additive intensity at the centre.
    amp: f64,
    /// Edge softness in normalized radius units.
    soft: f64,
}

impl Ellipse {
    fn weight(&self, x: f64, y: f64) -> f64 {
        let r = (((x - self.cx) / self.rx).powi(2) + ((y - self.cy) / self.ry).powi(2)).sqrt();
        let t = ((1.0 + self.soft - r) / (2.0 * self.soft)).clamp(0.0, 1.0);
        t * t * (3.0 - 2.0 * t)
    }
}

fn jitter(rng: &mut ChaCha8Rng, centre: f64, spread: f64) -> f64 {
    centre + rng.gen_range(-spread..spread)
}

/// Class of image `index` (0 or 1).
pub fn class_of(index: usize) -> usize {
    index % 2
}

/// Renders image `index` of the corpus for `seed` at `size`×`size`.
pub fn generate_image(seed: u64, index: usize, size: usize) -> ImageGray {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);

    let base = jitter(&mut rng, 0.55, 0.08);
    let gx = rng.gen_range(-0.12..0.12);
    let gy = rng.gen_range(-0.05..0.15);

    let mut shapes = vec![
        // body outline
        Ellipse {
            cx: jitter(&mut rng, 0.5, 0.02),
            cy: 0.55,
            rx: jitter(&mut rng, 0.46, 0.03),
            ry: 0.6,
            amp: 0.12,
            soft: 0.08,
        },
        // lungs
        Ellipse {
            cx: jitter(&mut rng, 0.31, 0.03),
            cy: jitter(&mut rng, 0.47, 0.03),
            rx: jitter(&mut rng, 0.14, 0.02),
            ry: jitter(&mut rng, 0.3, 0.03),
            amp: -jitter(&mut rng, 0.3, 0.05),
            soft: 0.15,
        },
        Ellipse {
            cx: jitter(&mut rng, 0.69, 0.03),
            cy: jitter(&mut rng, 0.47, 0.03),
            rx: jitter(&mut rng, 0.14, 0.02),
            ry: jitter(&mut rng, 0.3, 0.03),
            amp: -jitter(&mut rng, 0.3, 0.05),
            soft: 0.15,
        },
        // mediastinum and heart
        Ellipse {
            cx: 0.5,
            cy: 0.45,
            rx: jitter(&mut rng, 0.07, 0.01),
            ry: 0.35,
            amp: 0.1,
            soft: 0.3,
        },
        Ellipse {
            cx: jitter(&mut rng, 0.55, 0.03),
            cy: jitter(&mut rng, 0.62, 0.03),
            rx: jitter(&mut rng, 0.13, 0.02),
            ry: jitter(&mut rng, 0.11, 0.02),
            amp: 0.14,
            soft: 0.25,
        },
    ];
    let n_bands = rng.gen_range(4..7);
    for k in 0..n_bands {
        let cy = 0.25 + 0.09 * k as f64 + rng.gen_range(-0.01..0.01);
        for side in [0.31, 0.69] {
            shapes.push(Ellipse {
                cx: side,
                cy,
                rx: 0.17,
                ry: 0.012,
                amp: 0.035,
                soft: 0.6,
            });
        }
    }
    if class_of(index) == 1 {
        let side = if rng.gen_bool(0.5) { 0.31 } else { 0.69 };
        shapes.push(Ellipse {
            cx: jitter(&mut rng, side, 0.03),
            cy: jitter(&mut rng, 0.72, 0.03),
            rx: jitter(&mut rng, 0.12, 0.02),
            ry: jitter(&mut rng, 0.07, 0.02),
            amp: jitter(&mut rng, 0.22, 0.04),
            soft: 0.35,
        });
    }

    let texture_noise = Normal::new(0.0, TEXTURE_SIGMA).expect("valid sigma");
    let coarse: Vec<f64> = (0..TEXTURE_GRID * TEXTURE_GRID)
        .map(|_| texture_noise.sample(&mut rng))
        .collect();
    let coarse =
        ImageGray::from_pixels(TEXTURE_GRID, TEXTURE_GRID, coarse).expect("finite texture");
    let texture = resize_bilinear(&coarse, size, size).expect("positive size");

    let grain = Normal::new(0.0, GRAIN_SIGMA).expect("valid sigma");
    let inv = 1.0 / size as f64;
    let mut pixels = Vec::with_capacity(size * size);
    for y in 0..size {
        let fy = (y as f64 + 0.5) * inv;
        for x in 0..size {
            let fx = (x as f64 + 0.5) * inv;
            let mut v = base + gx * (fx - 0.5) + gy * (fy - 0.5);
            for s in &shapes {
                v += s.amp * s.weight(fx, fy);
            }
            v += texture.get(x, y) + grain.sample(&mut rng);
            pixels.push(v.clamp(FLOOR, CEIL));
        }
    }
    ImageGray::from_pixels(size, size, pixels).expect("finite pixels")
}

/// Relative output path of image `index`.
pub fn corpus_path(index: usize) -> PathBuf {
    Path::new(CLASS_NAMES[class_of(index)]).join(format!("img_{index:05}.png"))
}

/// Writes `n` 8-bit PNGs under `out_dir/<class>/`. Returns the relative paths
/// in index order.
pub fn gen_corpus(out_dir: impl AsRef<Path>, n: usize, seed: u64) -> Result<Vec<PathBuf>> {
    if n == 0 {
        return Err(Error::arg("corpus size must be at least 1"));
    }
    let out_dir = out_dir.as_ref();
    for class in CLASS_NAMES {
        let dir = out_dir.join(class);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let rel = corpus_path(i);
            save_image(
                &generate_image(seed, i, CORPUS_SIZE),
                out_dir.join(&rel),
                BitDepth::Eight,
            )?;
            Ok(rel)
        })
        .collect()
}
