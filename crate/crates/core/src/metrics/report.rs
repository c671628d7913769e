use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{
    compress::lossless_compress_size, fidelity, fit_gaussian, frechet_distance, privacy, psnr,
    Threshold,
};
use crate::error::{Error, Result};
use crate::features::{extract_features_builtin, read_features, FeatureSet, DEFAULT_FEATURE_DIM};
use crate::image_io::{load_image, resize_bilinear, scan_dataset, ImageGray};

/// Compressor identity echoed into reports; variety values are only
/// comparable under the same string.
pub const COMPRESSOR_ID: &str = "png-row-filters+deflate-9";

/// Where a set of feature vectors comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    /// Directory of images, run through the built-in extractor.
    Images(PathBuf),
    /// `MDMKFEAT` file from an external extractor.
    Features(PathBuf),
}

impl Source {
    /// `.feat` files are feature sources, directories are image sources.
    pub fn from_path(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        if path.is_dir() {
            return Ok(Source::Images(path));
        }
        let is_feat = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("feat"));
        if is_feat {
            return Ok(Source::Features(path));
        }
        if !path.exists() {
            return Err(Error::io(
                &path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
            ));
        }
        Err(Error::arg(format!(
            "{}: expected an image directory or a .feat file",
            path.display()
        )))
    }

    pub fn path(&self) -> &Path {
        match self {
            Source::Images(p) | Source::Features(p) => p,
        }
    }

    fn describe(&self) -> String {
        match self {
            Source::Images(p) => format!("images:{}", p.display()),
            Source::Features(p) => format!("features:{}", p.display()),
        }
    }
}

/// How images in a directory source become feature vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum FeatureMode {
    #[default]
    Builtin,
    /// Rows of an external `MDMKFEAT` table, matched by image path: an id is
    /// the source directory joined with the image's relative path, using `/`.
    Table { path: PathBuf, table: FeatureSet },
}

impl FeatureMode {
    pub fn table(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let table = read_features(&path)?;
        Ok(FeatureMode::Table { path, table })
    }
}

fn table_key(path: &Path) -> String {
    path.to_string_lossy().replace('\\', "/")
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityConfig {
    pub tau: Threshold,
    pub delta: Threshold,
    pub features: FeatureMode,
    /// Built-in extractor output size (`g² + 32`).
    pub feature_dim: usize,
    /// Resize applied to every ingested image before measuring.
    pub resize: Option<(usize, usize)>,
    /// The synthetic slot holds real data: privacy is reported as absent.
    pub synth_is_real: bool,
    /// Training set for privacy; defaults to the real source.
    pub train: Option<Source>,
    /// Originals matched by relative path for PSNR against the synthetic set.
    pub paired_original: Option<PathBuf>,
}

impl Default for QualityConfig {
    fn default() -> Self {
        Self {
            tau: Threshold::Auto,
            delta: Threshold::Auto,
            features: FeatureMode::Builtin,
            feature_dim: DEFAULT_FEATURE_DIM,
            resize: None,
            synth_is_real: false,
            train: None,
            paired_original: None,
        }
    }
}

/// A source after ingestion: features plus, for image sources, the
/// per-image compressed sizes.
#[derive(Debug, Clone)]
pub struct LoadedSource {
    pub source: Source,
    pub features: FeatureSet,
    pub compressed_sizes: Option<Vec<usize>>,
}

fn ingest(path: &Path, resize: Option<(usize, usize)>) -> Result<ImageGray> {
    let img = load_image(path)?;
    match resize {
        Some((w, h)) => resize_bilinear(&img, w, h),
        None => Ok(img),
    }
}

impl LoadedSource {
    pub fn load(source: &Source, cfg: &QualityConfig) -> Result<Self> {
        match source {
            Source::Features(path) => Ok(Self {
                source: source.clone(),
                features: read_features(path)?,
                compressed_sizes: None,
            }),
            Source::Images(dir) => {
                let manifest = scan_dataset(dir, false)?;
                if manifest.is_empty() {
                    return Err(Error::arg(format!("no images found in {}", dir.display())));
                }
                let lookup: Option<HashMap<&str, usize>> = match &cfg.features {
                    FeatureMode::Builtin => None,
                    FeatureMode::Table { table, .. } => Some(
                        table
                            .ids()
                            .iter()
                            .enumerate()
                            .map(|(i, id)| (id.as_str(), i))
                            .collect(),
                    ),
                };
                let per_image = manifest
                    .entries
                    .par_iter()
                    .map(|e| {
                        let path = manifest.full_path(e);
                        let img = ingest(&path, cfg.resize)?;
                        let f = match (&cfg.features, &lookup) {
                            (
                                FeatureMode::Table {
                                    path: table_path,
                                    table,
                                },
                                Some(lookup),
                            ) => {
                                let key = table_key(&path);
                                let row = lookup.get(key.as_str()).ok_or_else(|| {
                                    Error::arg(format!(
                                        "{}: no feature row for {key}",
                                        table_path.display()
                                    ))
                                })?;
                                table.row(*row).to_vec()
                            }
                            _ => extract_features_builtin(&img, cfg.feature_dim)?,
                        };
                        Ok((f, lossless_compress_size(&img)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let (rows, sizes): (Vec<_>, Vec<_>) = per_image.into_iter().unzip();
                let ids = manifest.entries.iter().map(|e| e.path.clone()).collect();
                Ok(Self {
                    source: source.clone(),
                    features: FeatureSet::new(rows, ids)?,
                    compressed_sizes: Some(sizes),
                })
            }
        }
    }

    pub fn variety(&self) -> Option<f64> {
        self.compressed_sizes
            .as_ref()
            .map(|s| s.iter().sum::<usize>() as f64 / s.len() as f64)
    }
}

/// PSNR of every image under `synth_dir` against the file with the same
/// relative path under `original_dir`.
pub fn paired_psnr(
    synth_dir: &Path,
    original_dir: &Path,
    resize: Option<(usize, usize)>,
) -> Result<Vec<f64>> {
    let manifest = scan_dataset(synth_dir, false)?;
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let marked = ingest(&manifest.full_path(e), resize)?;
            let original = ingest(&original_dir.join(&e.path), resize)?;
            psnr(&original, &marked)
        })
        .collect()
}

/// Effective settings echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub real: String,
    pub synth: String,
    pub train: Option<String>,
    pub paired_original: Option<String>,
    pub feature_source: String,
    pub feature_dim: usize,
    pub resize: Option<(usize, usize)>,
    pub compressor: String,
    pub tau: Threshold,
    pub tau_used: f64,
    pub delta: Threshold,
    pub delta_used: Option<f64>,
    pub synth_is_real: bool,
    pub n_real: usize,
    pub n_synth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub fidelity: f64,
    pub variety_bytes: Option<f64>,
    pub fid: f64,
    pub privacy: Option<f64>,
    pub psnr_mean_db: Option<f64>,
    pub psnr_infinite: bool,
    pub config: ReportConfig,
}

impl QualityReport {
    /// Assembles the battery from already-ingested sources.
    pub fn compute(
        real: &LoadedSource,
        synth: &LoadedSource,
        train: Option<&LoadedSource>,
        psnr_values: Option<&[f64]>,
        cfg: &QualityConfig,
    ) -> Result<Self> {
        let (rf, sf) = (&real.features, &synth.features);
        if rf.dim() != sf.dim() {
            return Err(Error::arg(format!(
                "feature dimension mismatch: real has {}, synthetic has {}",
                rf.dim(),
                sf.dim()
            )));
        }
        let train = train.unwrap_or(real);

        let tau_used = cfg.tau.resolve(rf)?;
        let fidelity = fidelity(rf, sf, Threshold::Fixed(tau_used))?;
        let fid = frechet_distance(&fit_gaussian(rf)?, &fit_gaussian(sf)?)?;

        let (privacy, delta_used) = if cfg.synth_is_real {
            (None, None)
        } else {
            let delta_used = cfg.delta.resolve(&train.features)?;
            (
                Some(privacy(sf, &train.features, Threshold::Fixed(delta_used))?),
                Some(delta_used),
            )
        };

        let (psnr_mean_db, psnr_infinite) = match psnr_values {
            None => (None, false),
            Some(values) => {
                let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
                let mean =
                    (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64);
                (mean, finite.len() != values.len())
            }
        };

        let origin = |s: &Source| match (s, &cfg.features) {
            (Source::Features(_), _) => "file".to_string(),
            (Source::Images(_), FeatureMode::Builtin) => format!("builtin:{}", cfg.feature_dim),
            (Source::Images(_), FeatureMode::Table { path, .. }) => {
                format!("table:{}", path.display())
            }
        };
        let (real_origin, synth_origin) = (origin(&real.source), origin(&synth.source));
        let feature_source = if real_origin == synth_origin {
            real_origin
        } else {
            format!("{real_origin}|{synth_origin}")
        };

        Ok(Self {
            fidelity,
            variety_bytes: synth.variety(),
            fid,
            privacy,
            psnr_mean_db,
            psnr_infinite,
            config: ReportConfig {
                real: real.source.describe(),
                synth: synth.source.describe(),
                train: cfg.train.as_ref().map(Source::describe),
                paired_original: cfg
                    .paired_original
                    .as_ref()
                    .map(|p| p.display().to_string()),
                feature_source,
                feature_dim: rf.dim(),
                resize: cfg.resize,
                compressor: COMPRESSOR_ID.to_string(),
                tau: cfg.tau,
                tau_used,
                delta: cfg.delta,
                delta_used,
                synth_is_real: cfg.synth_is_real,
                n_real: rf.len(),
                n_synth: sf.len(),
            },
        })
    }
}

/// Loads both sources and computes the full quality battery.
pub fn quality_report(real: &Source, synth: &Source, cfg: &QualityConfig) -> Result<QualityReport> {
    let real_loaded = LoadedSource::load(real, cfg)?;
    let synth_loaded = LoadedSource::load(synth, cfg)?;
    let train_loaded = cfg
        .train
        .as_ref()
        .map(|t| LoadedSource::load(t, cfg))
        .transpose()?;
    let psnr_values = match &cfg.paired_original {
        None => None,
        Some(orig) => match synth {
            Source::Images(dir) => Some(paired_psnr(dir, orig, cfg.resize)?),
            Source::Features(_) => {
                return Err(Error::arg(
                    "PSNR pairing needs an image directory as the synthetic source",
                ))
            }
        },
    };
    QualityReport::compute(
        &real_loaded,
        &synth_loaded,
        train_loaded.as_ref(),
        psnr_values.as_deref(),
        cfg,
    )
}

/// Signed relative change `(after - before) / |before|`; zero when equal,
/// absent when `before` is zero and `after` is not.
pub fn relative_delta(before: f64, after: f64) -> Option<f64> {
    if before == after {
        Some(0.0)
    } else if before == 0.0 {
        None
    } else {
        Some((after - before) / before.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricDeltas {
    pub fidelity: Option<f64>,
    pub variety_bytes: Option<f64>,
    pub fid: Option<f64>,
    pub privacy: Option<f64>,
}

impl MetricDeltas {
    /// Largest absolute relative change among the metrics both reports carry.
    /// A metric that went from zero to nonzero counts as infinite.
    pub fn max_abs(&self) -> f64 {
        [self.fidelity, self.variety_bytes, self.fid, self.privacy]
            .iter()
            .map(|d| d.map_or(f64::INFINITY, f64::abs))
            .fold(0.0, f64::max)
    }
}

/// Before/after layout: one report per synthetic set plus per-metric deltas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityComparison {
    pub baseline: QualityReport,
    pub compared: QualityReport,
    pub relative_deltas: MetricDeltas,
}

pub fn compare_reports(baseline: &QualityReport, compared: &QualityReport) -> MetricDeltas {
    let opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => relative_delta(a, b),
        (None, None) => Some(0.0),
        _ => None,
    };
    MetricDeltas {
        fidelity: relative_delta(baseline.fidelity, compared.fidelity),
        variety_bytes: opt(baseline.variety_bytes, compared.variety_bytes),
        fid: relative_delta(baseline.fid, compared.fid),
        privacy: opt(baseline.privacy, compared.privacy),
    }
}
