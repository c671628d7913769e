use std::path::PathBuf;

use anyhow::Result;
use medmark_core::features::DEFAULT_FEATURE_DIM;
use medmark_core::metrics::{
    compare_reports, paired_psnr, FeatureMode, LoadedSource, MetricDeltas,
};
use medmark_core::{QualityConfig, QualityReport, Source, Threshold};
use serde::Serialize;

use super::{Ctx, Outcome};
use crate::args::{QualityArgs, Size};
use crate::output::{emit, render};

#[derive(Serialize)]
struct QualityRun {
    real: String,
    synth: String,
    compare: Option<String>,
    tau: Threshold,
    delta: Threshold,
    features: String,
    feature_dim: usize,
    resize: Option<(usize, usize)>,
    paired_original: Option<String>,
    synth_is_real: bool,
    train: Option<String>,
}

#[derive(Serialize)]
struct Comparison {
    baseline: QualityReport,
    compared: QualityReport,
    relative_deltas: MetricDeltas,
    max_abs_relative_delta: f64,
}

fn psnr_values(synth: &Source, cfg: &QualityConfig) -> Result<Option<Vec<f64>>> {
    match (synth, &cfg.paired_original) {
        (Source::Images(dir), Some(orig)) => Ok(Some(paired_psnr(dir, orig, cfg.resize)?)),
        (Source::Features(_), Some(_)) => {
            anyhow::bail!("PSNR pairing needs an image directory as the synthetic source")
        }
        (_, None) => Ok(None),
    }
}

pub fn quality_cmd(args: &QualityArgs, ctx: &Ctx) -> Result<Outcome> {
    let file = ctx.file;
    let features = file.pick(args.features.clone(), "features", "builtin".to_string())?;
    let train = file.pick_opt(args.train.clone(), "train")?;
    let cfg = QualityConfig {
        tau: file.pick(args.tau, "tau", Threshold::Auto)?,
        delta: file.pick(args.delta, "delta", Threshold::Auto)?,
        features: match features.as_str() {
            "builtin" => FeatureMode::Builtin,
            path => FeatureMode::table(path)?,
        },
        feature_dim: file.pick(args.feature_dim, "feature-dim", DEFAULT_FEATURE_DIM)?,
        resize: file
            .pick_opt(args.resize, "resize")?
            .map(|Size(w, h)| (w, h)),
        synth_is_real: args.synth_is_real,
        train: train.as_ref().map(Source::from_path).transpose()?,
        paired_original: args.paired_original.clone(),
    };
    let run = QualityRun {
        real: args.real.display().to_string(),
        synth: args.synth.display().to_string(),
        compare: args.compare.as_ref().map(|p| p.display().to_string()),
        tau: cfg.tau,
        delta: cfg.delta,
        features,
        feature_dim: cfg.feature_dim,
        resize: cfg.resize,
        paired_original: cfg
            .paired_original
            .as_ref()
            .map(|p| p.display().to_string()),
        synth_is_real: cfg.synth_is_real,
        train: train.as_ref().map(|p: &PathBuf| p.display().to_string()),
    };

    let real_src = Source::from_path(&args.real)?;
    let synth_src = Source::from_path(&args.synth)?;
    let real = LoadedSource::load(&real_src, &cfg)?;
    let train = cfg
        .train
        .as_ref()
        .map(|t| LoadedSource::load(t, &cfg))
        .transpose()?;
    let synth = LoadedSource::load(&synth_src, &cfg)?;

    let json = match &args.compare {
        None => {
            let psnr = psnr_values(&synth_src, &cfg)?;
            let report =
                QualityReport::compute(&real, &synth, train.as_ref(), psnr.as_deref(), &cfg)?;
            render("quality", &run, &report)?
        }
        Some(other) => {
            // the first synthetic set is the unmarked reference; PSNR is taken
            // for the compared set against it unless another pairing is given
            let base_cfg = QualityConfig {
                paired_original: None,
                ..cfg.clone()
            };
            let baseline = QualityReport::compute(&real, &synth, train.as_ref(), None, &base_cfg)?;

            let other_src = Source::from_path(other)?;
            let pairing = match (&cfg.paired_original, &synth_src) {
                (Some(p), _) => Some(p.clone()),
                (None, Source::Images(dir)) if matches!(other_src, Source::Images(_)) => {
                    Some(dir.clone())
                }
                _ => None,
            };
            let cmp_cfg = QualityConfig {
                paired_original: pairing,
                ..cfg.clone()
            };
            let compared_set = LoadedSource::load(&other_src, &cmp_cfg)?;
            let psnr = psnr_values(&other_src, &cmp_cfg)?;
            let compared = QualityReport::compute(
                &real,
                &compared_set,
                train.as_ref(),
                psnr.as_deref(),
                &cmp_cfg,
            )?;

            let relative_deltas = compare_reports(&baseline, &compared);
            let result = Comparison {
                max_abs_relative_delta: relative_deltas.max_abs(),
                baseline,
                compared,
                relative_deltas,
            };
            render("quality", &run, &result)?
        }
    };
    emit(&json, ctx.report)?;
    Ok(Outcome::Ok)
}
