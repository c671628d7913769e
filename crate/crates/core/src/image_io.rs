//! Grayscale image ingestion and export.
//!
//! Everything downstream works on [`ImageGray`], a row-major `f64` plane whose
//! intensities live in `[0, 1]`. PNG (8/16-bit gray or RGB) and PGM (P2/P5)
//! are accepted; RGB is collapsed to BT.601 luma.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, ImageEncoder, ImageError, ImageReader};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// File extensions picked up by [`scan_dataset`].
pub const SUPPORTED_EXTENSIONS: &[&str] = &["png", "pgm"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    pub fn max_value(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(Error::arg(format!(
                "bit depth must be 8 or 16, got {other}"
            ))),
        }
    }
}

/// Grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGray {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    source_bit_depth: BitDepth,
}

impl ImageGray {
    /// Wraps a row-major pixel buffer. Values are taken as-is, processing
    /// stages are allowed to leave the unit range; [`save_image`] clamps.
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::arg(format!(
                "pixel buffer has {} entries, expected {}x{} = {}",
                pixels.len(),
                width,
                height,
                width * height
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::arg("pixel buffer contains non-finite values"));
        }
        Ok(Self {
            width,
            height,
            pixels,
            source_bit_depth: BitDepth::Eight,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::from_pixels(width, height, vec![value; width * height])
    }

    pub fn with_source_bit_depth(mut self, depth: BitDepth) -> Self {
        self.source_bit_depth = depth;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn source_bit_depth(&self) -> BitDepth {
        self.source_bit_depth
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn clamp_unit(&mut self) {
        for p in &mut self.pixels {
            *p = p.clamp(0.0, 1.0);
        }
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    pub fn same_dims(&self, other: &ImageGray) -> bool {
        self.width == other.width && self.height == other.height
    }
}

fn map_image_error(path: &Path, err: ImageError) -> Error {
    match err {
        ImageError::IoError(e) => Error::io(path, e),
        other => Error::Format(format!("{}: {other}", path.display())),
    }
}

/// Decodes a PNG or PGM file into the canonical `[0, 1]` representation.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageGray> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    match reader.format() {
        Some(image::ImageFormat::Png) | Some(image::ImageFormat::Pnm) => {}
        Some(other) => {
            return Err(Error::Format(format!(
                "{}: unsupported image format {other:?}",
                path.display()
            )))
        }
        None => {
            return Err(Error::Format(format!(
                "{}: unrecognized image format",
                path.display()
            )))
        }
    }
    let decoded = reader.decode().map_err(|e| map_image_error(path, e))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);

    let (pixels, depth) = match decoded {
        DynamicImage::ImageLuma8(buf) => (
            buf.into_raw()
                .into_iter()
                .map(|v| f64::from(v) / 255.0)
                .collect(),
            BitDepth::Eight,
        ),
        DynamicImage::ImageLuma16(buf) => (
            buf.into_raw()
                .into_iter()
                .map(|v| f64::from(v) / 65535.0)
                .collect(),
            BitDepth::Sixteen,
        ),
        DynamicImage::ImageRgb8(buf) => (rgb_to_luma(buf.as_raw(), 255.0), BitDepth::Eight),
        DynamicImage::ImageRgb16(buf) => (rgb_to_luma(buf.as_raw(), 65535.0), BitDepth::Sixteen),
        other => {
            return Err(Error::Format(format!(
                "{}: unsupported color type {:?}",
                path.display(),
                other.color()
            )))
        }
    };

    let mut img = ImageGray::from_pixels(width, height, pixels)?.with_source_bit_depth(depth);
    img.clamp_unit();
    Ok(img)
}

fn rgb_to_luma<T: Copy + Into<f64>>(raw: &[T], max: f64) -> Vec<f64> {
    raw.chunks_exact(3)
        .map(|px| {
            let (r, g, b) = (px[0].into(), px[1].into(), px[2].into());
            (LUMA_R * r + LUMA_G * g + LUMA_B * b) / max
        })
        .collect()
}

/// Round-half-up quantization of a `[0, 1]` intensity to an integer level.
#[inline]
pub fn quantize(value: f64, depth: BitDepth) -> u32 {
    let max = depth.max_value();
    let v = value.clamp(0.0, 1.0) * max;
    (v + 0.5).floor().min(max) as u32
}

/// Writes `img` as PGM (P5) when the extension is `.pgm`, PNG otherwise.
pub fn save_image(img: &ImageGray, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let (bytes, color): (Vec<u8>, image::ExtendedColorType) = match depth {
        BitDepth::Eight => (
            img.pixels()
                .iter()
                .map(|&p| quantize(p, depth) as u8)
                .collect(),
            image::ExtendedColorType::L8,
        ),
        // the PNG encoder takes native-endian u16 samples as bytes
        BitDepth::Sixteen => (
            img.pixels()
                .iter()
                .flat_map(|&p| (quantize(p, depth) as u16).to_ne_bytes())
                .collect(),
            image::ExtendedColorType::L16,
        ),
    };

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        return write_pgm(&mut writer, img, depth).map_err(|e| Error::io(path, e));
    }
    PngEncoder::new_with_quality(writer, CompressionType::Default, FilterType::Adaptive)
        .write_image(&bytes, w, h, color)
        .map_err(|e| map_image_error(path, e))
}

/// Binary P5 graymap; 16-bit samples are big-endian.
fn write_pgm(out: &mut impl Write, img: &ImageGray, depth: BitDepth) -> std::io::Result<()> {
    write!(
        out,
        "P5\n{} {}\n{}\n",
        img.width(),
        img.height(),
        depth.max_value() as u32
    )?;
    for &p in img.pixels() {
        match depth {
            BitDepth::Eight => out.write_all(&[quantize(p, depth) as u8])?,
            BitDepth::Sixteen => out.write_all(&(quantize(p, depth) as u16).to_be_bytes())?,
        }
    }
    out.flush()
}

/// Bilinear resize with half-pixel-centred sampling and edge clamping.
pub fn resize_bilinear(img: &ImageGray, new_width: usize, new_height: usize) -> Result<ImageGray> {
    if new_width == 0 || new_height == 0 {
        return Err(Error::arg(format!(
            "resize target must be positive, got {new_width}x{new_height}"
        )));
    }
    if new_width == img.width() && new_height == img.height() {
        return Ok(img.clone());
    }

    let xs = sample_positions(img.width(), new_width);
    let ys = sample_positions(img.height(), new_height);

    let mut out = Vec::with_capacity(new_width * new_height);
    for &(y0, y1, ty) in &ys {
        for &(x0, x1, tx) in &xs {
            let a = img.get(x0, y0);
            let b = img.get(x1, y0);
            let c = img.get(x0, y1);
            let d = img.get(x1, y1);
            let top = lerp(a, b, tx);
            let bottom = lerp(c, d, tx);
            out.push(lerp(top, bottom, ty));
        }
    }
    Ok(ImageGray::from_pixels(new_width, new_height, out)?
        .with_source_bit_depth(img.source_bit_depth()))
}

/// `a + (b - a) * t`, clamped to the segment so constant runs stay exact and
/// round-off never escapes `[min(a, b), max(a, b)]`.
#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    let v = a + (b - a) * t;
    v.clamp(a.min(b), a.max(b))
}

fn sample_positions(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let i0 = pos.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, pos - i0 as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the manifest root, `/`-separated.
    pub path: String,
    pub label: Option<String>,
}

/// Sorted, duplicate-free listing of the images under a root directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn full_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    pub fn paths(&self) -> impl Iterator<Item = PathBuf> + '_ {
        self.entries.iter().map(|e| self.full_path(e))
    }
}

pub fn is_supported_image(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| {
        SUPPORTED_EXTENSIONS
            .iter()
            .any(|s| e.eq_ignore_ascii_case(s))
    })
}

/// Recursively lists supported images under `root`. With `label_from_subdir`,
/// each entry is labelled by its first-level directory name; files sitting
/// directly in `root` get no label.
pub fn scan_dataset(root: impl AsRef<Path>, label_from_subdir: bool) -> Result<DatasetManifest> {
    let root = root.as_ref();
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }

    let mut entries = Vec::new();
    for item in WalkDir::new(root).follow_links(true) {
        let item = item.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !item.file_type().is_file() || !is_supported_image(item.path()) {
            continue;
        }
        let rel = item
            .path()
            .strip_prefix(root)
            .expect("walkdir yields paths under root");
        let parts: Vec<String> = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        let label = if label_from_subdir && parts.len() > 1 {
            Some(parts[0].clone())
        } else {
            None
        };
        entries.push(ManifestEntry {
            path: parts.join("/"),
            label,
        });
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    entries.dedup_by(|a, b| a.path == b.path);

    Ok(DatasetManifest {
        root: root.to_path_buf(),
        entries,
    })
}
