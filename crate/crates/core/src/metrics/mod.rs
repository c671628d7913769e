//! Quality battery for synthetic image sets: fidelity, variety, FID, privacy
//! and PSNR.

mod compress;
mod report;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::image_io::ImageGray;

pub use compress::{lossless_compress_size, mean_compressed_size, variety};
pub use report::{
    compare_reports, paired_psnr, quality_report, relative_delta, FeatureMode, LoadedSource,
    MetricDeltas, QualityComparison, QualityConfig, QualityReport, ReportConfig, Source,
};

/// Eigenvalues above `-EIGEN_CLIP_TOL · max(1, |λ|max)` are treated as round-off
/// and clipped to zero.
pub const EIGEN_CLIP_TOL: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-9;

/// Mean and covariance of a feature distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub n: usize,
}

impl GaussianStats {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, n: usize) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::arg(format!(
                "covariance is {}x{}, mean has dimension {d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > SYMMETRY_TOL * cov.amax().max(1.0) {
            return Err(Error::arg(format!(
                "covariance is not symmetric (max |C - Cᵀ| = {asym:e})"
            )));
        }
        Ok(Self { mean, cov, n })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean and unbiased (`n - 1`) covariance, symmetrized.
pub fn fit_gaussian(fs: &FeatureSet) -> Result<GaussianStats> {
    let n = fs.len();
    if n < 2 {
        return Err(Error::arg(format!(
            "need at least 2 feature vectors to fit a covariance, got {n}"
        )));
    }
    let d = fs.dim();
    // Shift by the first row before centering: identical rows give an exactly
    // zero covariance and large offsets do not cost precision.
    let pivot = DVector::from_row_slice(fs.row(0));
    let mut shifted = DMatrix::from_row_slice(n, d, fs.as_flat());
    for mut row in shifted.row_iter_mut() {
        row -= pivot.transpose();
    }
    let offset = DVector::from_iterator(d, shifted.column_iter().map(|c| c.sum() / n as f64));
    for mut row in shifted.row_iter_mut() {
        row -= offset.transpose();
    }
    let cov = shifted.tr_mul(&shifted) / (n - 1) as f64;
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianStats {
        mean: pivot + offset,
        cov,
        n,
    })
}

fn clipped_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let mut eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("symmetric eigendecomposition did not converge".into()))?;
    let scale = eig.eigenvalues.amax().max(1.0);
    for lambda in eig.eigenvalues.iter_mut() {
        if *lambda < -EIGEN_CLIP_TOL * scale {
            return Err(Error::Numerical(format!(
                "matrix is not positive semidefinite (eigenvalue {lambda:e})"
            )));
        }
        *lambda = lambda.max(0.0);
    }
    Ok(eig)
}

/// Principal square root of a symmetric PSD matrix.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = clipped_eigen(m)?;
    let roots = eig.eigenvalues.map(f64::sqrt);
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&roots) * v.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

/// `‖μ₁−μ₂‖² + Tr(Σ₁ + Σ₂ − 2(Σ₁Σ₂)^{1/2})`.
///
/// The trace of `(Σ₁Σ₂)^{1/2}` is taken as the trace of the square root of the
/// symmetric PSD matrix `Σ₁^{1/2} Σ₂ Σ₁^{1/2}`, which has the same spectrum.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::arg(format!(
            "feature dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let mean_term = (&a.mean - &b.mean).norm_squared();
    let root_a = psd_sqrt(&a.cov)?;
    let inner = &root_a * &b.cov * &root_a;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross: f64 = clipped_eigen(&inner)?
        .eigenvalues
        .iter()
        .map(|l| l.sqrt())
        .sum();
    let fid = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * cross;
    Ok(fid.max(0.0))
}

/// A distance threshold, fixed or derived from the reference set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Threshold {
    /// Median leave-one-out nearest-neighbour distance within the reference set.
    #[default]
    Auto,
    Fixed(f64),
}

impl Threshold {
    pub fn resolve(self, reference: &FeatureSet) -> Result<f64> {
        match self {
            Threshold::Fixed(t) if t.is_finite() && t > 0.0 => Ok(t),
            Threshold::Fixed(t) => Err(Error::arg(format!(
                "distance threshold must be positive, got {t}"
            ))),
            Threshold::Auto => auto_threshold(reference),
        }
    }
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("auto") {
            return Ok(Threshold::Auto);
        }
        let v: f64 = s.trim().parse().map_err(|_| {
            Error::arg(format!("threshold must be a number or \"auto\", got {s:?}"))
        })?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::arg(format!(
                "distance threshold must be positive, got {v}"
            )));
        }
        Ok(Threshold::Fixed(v))
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Auto => f.write_str("auto"),
            Threshold::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threshold::Auto => s.serialize_str("auto"),
            Threshold::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Threshold::Fixed(v)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn check_dims(a: &FeatureSet, b: &FeatureSet) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::arg(format!(
            "feature dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance from each query row to its nearest reference row.
pub fn nearest_neighbor_distances(
    queries: &FeatureSet,
    reference: &FeatureSet,
) -> Result<Vec<f64>> {
    check_dims(queries, reference)?;
    Ok((0..queries.len())
        .into_par_iter()
        .map(|i| {
            let q = queries.row(i);
            reference
                .rows()
                .map(|r| squared_distance(q, r))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect())
}

/// Nearest-neighbour distance of every row to the rest of its own set.
pub fn leave_one_out_distances(set: &FeatureSet) -> Result<Vec<f64>> {
    if set.len() < 2 {
        return Err(Error::arg(
            "leave-one-out distances need at least 2 vectors",
        ));
    }
    Ok((0..set.len())
        .into_par_iter()
        .map(|i| {
            let q = set.row(i);
            set.rows()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, r)| squared_distance(q, r))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect())
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn auto_threshold(reference: &FeatureSet) -> Result<f64> {
    Ok(median(leave_one_out_distances(reference)?))
}

/// Fraction of synthetic vectors whose nearest real neighbour is within `tau`.
pub fn fidelity(real: &FeatureSet, synth: &FeatureSet, tau: Threshold) -> Result<f64> {
    check_dims(real, synth)?;
    let tau = tau.resolve(real)?;
    let d = nearest_neighbor_distances(synth, real)?;
    Ok(d.iter().filter(|&&x| x <= tau).count() as f64 / d.len() as f64)
}

/// Fraction of synthetic vectors at least `delta` away from every training
/// vector (the non-memorized share).
pub fn privacy(synth: &FeatureSet, train: &FeatureSet, delta: Threshold) -> Result<f64> {
    check_dims(synth, train)?;
    let delta = delta.resolve(train)?;
    let d = nearest_neighbor_distances(synth, train)?;
    Ok(d.iter().filter(|&&x| x >= delta).count() as f64 / d.len() as f64)
}

/// PSNR in dB for `[0, 1]` images; `f64::INFINITY` when they are identical.
pub fn psnr(a: &ImageGray, b: &ImageGray) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::arg(format!(
            "PSNR needs equal sizes, got {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let mse = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.pixels().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}
