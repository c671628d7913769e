use std::path::PathBuf;

use anyhow::Result;
use log::{info, warn};
use medmark_core::image_io::quantize;
use medmark_core::watermark::{DEFAULT_PAYLOAD_TEXT, DEFAULT_THRESHOLD};
use medmark_core::{
    detect, embed, extract, load_image, psnr, residual, save_image, BitDepth, EmbedConfig,
    ImageGray, WatermarkPayload,
};
use rayon::prelude::*;
use serde::Serialize;

use super::{codec_config, inputs, output_depth, Ctx, Outcome};
use crate::args::{DepthArg, DetectArgs, EmbedArgs, ExtractArgs, ResidualArgs};
use crate::output::{emit, render};

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn stored(img: &ImageGray, depth: BitDepth) -> Result<ImageGray> {
    let px = img
        .pixels()
        .iter()
        .map(|&p| f64::from(quantize(p, depth)) / depth.max_value())
        .collect();
    Ok(ImageGray::from_pixels(img.width(), img.height(), px)?)
}

#[derive(Serialize)]
struct EmbedRun<'a> {
    input: String,
    output: String,
    text: &'a str,
    bit_depth: String,
    codec: EmbedConfig,
}

#[derive(Serialize)]
struct EmbedFile {
    path: String,
    status: &'static str,
    capacity_bits: Option<usize>,
    payload_bits: usize,
    votes_per_bit: Option<usize>,
    /// Against the original, measured on the stored (quantized) output.
    psnr_db: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct EmbedSummary {
    n_files: usize,
    n_embedded: usize,
    n_skipped: usize,
    files: Vec<EmbedFile>,
}

pub fn embed_cmd(args: &EmbedArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = codec_config(&args.codec, ctx.file)?;
    let text = ctx
        .file
        .pick(args.text.clone(), "text", DEFAULT_PAYLOAD_TEXT.to_string())?;
    let depth_arg = ctx
        .file
        .pick(args.bit_depth, "bit-depth", DepthArg::Source)?;
    let payload = WatermarkPayload::new(text.as_str())?;
    let (root, files) = inputs(&args.input)?;

    let results: Vec<EmbedFile> = files
        .par_iter()
        .map(|rel| {
            let mut entry = EmbedFile {
                path: rel.clone(),
                status: "skipped",
                capacity_bits: None,
                payload_bits: payload.bit_len(),
                votes_per_bit: None,
                psnr_db: None,
                error: None,
            };
            let mut run = || -> Result<()> {
                let img = load_image(root.join(rel))?;
                let capacity = cfg.capacity(img.width(), img.height());
                entry.capacity_bits = Some(capacity);
                let marked = embed(&img, &payload, &cfg)?;
                let depth = output_depth(depth_arg, &img)?;
                let out = args.output.join(rel);
                if let Some(parent) = out.parent() {
                    std::fs::create_dir_all(parent)?;
                }
                save_image(&marked, &out, depth)?;
                entry.votes_per_bit = Some(capacity / payload.bit_len());
                entry.psnr_db = finite(psnr(&img, &stored(&marked, depth)?)?);
                Ok(())
            };
            match run() {
                Ok(()) => {
                    entry.status = "ok";
                    info!("embedded {rel}");
                }
                Err(e) => {
                    warn!("skipping {rel}: {e:#}");
                    entry.error = Some(format!("{e:#}"));
                }
            }
            entry
        })
        .collect();

    let n_embedded = results.iter().filter(|f| f.status == "ok").count();
    let summary = EmbedSummary {
        n_files: results.len(),
        n_embedded,
        n_skipped: results.len() - n_embedded,
        files: results,
    };
    let run = EmbedRun {
        input: args.input.display().to_string(),
        output: args.output.display().to_string(),
        text: &text,
        bit_depth: depth_arg.to_string(),
        codec: cfg,
    };
    emit(&render("embed", &run, &summary)?, ctx.report)?;
    Ok(if summary.n_skipped == 0 {
        Outcome::Ok
    } else {
        Outcome::Partial
    })
}

#[derive(Serialize)]
struct ExtractRun {
    input: String,
    payload_bits: Option<usize>,
    codec: EmbedConfig,
}

#[derive(Serialize)]
struct ExtractFile {
    path: String,
    decoded_text: Option<String>,
    bit_accuracy: Option<f64>,
    detected: bool,
    votes_per_bit: Option<usize>,
    error: Option<String>,
}

#[derive(Serialize)]
struct ExtractSummary {
    n_files: usize,
    n_decoded: usize,
    files: Vec<ExtractFile>,
}

pub fn extract_cmd(args: &ExtractArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = codec_config(&args.codec, ctx.file)?;
    let payload_bits = ctx.file.pick_opt(args.payload_bits, "payload-bits")?;
    let (root, files) = inputs(&args.input)?;

    let results: Vec<ExtractFile> = files
        .par_iter()
        .map(|rel| {
            match load_image(root.join(rel)).and_then(|img| extract(&img, &cfg, payload_bits)) {
                Ok(r) => ExtractFile {
                    path: rel.clone(),
                    decoded_text: r.decoded_text,
                    bit_accuracy: Some(r.bit_accuracy),
                    detected: r.detected,
                    votes_per_bit: Some(r.votes_per_bit),
                    error: None,
                },
                Err(e) => {
                    warn!("{rel}: {e}");
                    ExtractFile {
                        path: rel.clone(),
                        decoded_text: None,
                        bit_accuracy: None,
                        detected: false,
                        votes_per_bit: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();

    let failed = results.iter().any(|f| f.error.is_some());
    let summary = ExtractSummary {
        n_files: results.len(),
        n_decoded: results.iter().filter(|f| f.decoded_text.is_some()).count(),
        files: results,
    };
    let run = ExtractRun {
        input: args.input.display().to_string(),
        payload_bits,
        codec: cfg,
    };
    emit(&render("extract", &run, &summary)?, ctx.report)?;
    Ok(if failed {
        Outcome::Partial
    } else {
        Outcome::Ok
    })
}

#[derive(Serialize)]
struct DetectRun<'a> {
    input: String,
    text: &'a str,
    threshold: f64,
    codec: EmbedConfig,
}

#[derive(Serialize)]
struct DetectFile {
    path: String,
    bit_accuracy: Option<f64>,
    detected: bool,
    error: Option<String>,
}

#[derive(Serialize)]
struct DetectSummary {
    n_files: usize,
    n_detected: usize,
    files: Vec<DetectFile>,
}

pub fn detect_cmd(args: &DetectArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = codec_config(&args.codec, ctx.file)?;
    let text = ctx
        .file
        .pick(args.text.clone(), "text", DEFAULT_PAYLOAD_TEXT.to_string())?;
    let threshold = ctx
        .file
        .pick(args.threshold, "threshold", DEFAULT_THRESHOLD)?;
    let payload = WatermarkPayload::new(text.as_str())?;
    let (root, files) = inputs(&args.input)?;

    let results: Vec<DetectFile> = files
        .par_iter()
        .map(|rel| {
            match load_image(root.join(rel)).and_then(|img| detect(&img, &payload, &cfg, threshold))
            {
                Ok(r) => DetectFile {
                    path: rel.clone(),
                    bit_accuracy: Some(r.bit_accuracy),
                    detected: r.detected,
                    error: None,
                },
                Err(e) => {
                    warn!("{rel}: {e}");
                    DetectFile {
                        path: rel.clone(),
                        bit_accuracy: None,
                        detected: false,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();

    let n_detected = results.iter().filter(|f| f.detected).count();
    let summary = DetectSummary {
        n_files: results.len(),
        n_detected,
        files: results,
    };
    let run = DetectRun {
        input: args.input.display().to_string(),
        text: &text,
        threshold,
        codec: cfg,
    };
    emit(&render("detect", &run, &summary)?, ctx.report)?;
    Ok(if n_detected == summary.n_files {
        Outcome::Ok
    } else {
        Outcome::Negative
    })
}

#[derive(Serialize)]
struct ResidualRun {
    original: String,
    watermarked: String,
    output: String,
    bit_depth: String,
}

#[derive(Serialize)]
struct ResidualSummary {
    psnr_db: Option<f64>,
    psnr_infinite: bool,
    max_abs_difference: f64,
}

pub fn residual_cmd(args: &ResidualArgs, ctx: &Ctx) -> Result<Outcome> {
    let depth_arg = ctx
        .file
        .pick(args.bit_depth, "bit-depth", DepthArg::Bits(8))?;
    let original = load_image(&args.original)?;
    let marked = load_image(&args.watermarked)?;
    let res = residual(&original, &marked)?;
    save_image(&res, &args.output, output_depth(depth_arg, &original)?)?;

    let p = psnr(&original, &marked)?;
    let max_abs_difference = original
        .pixels()
        .iter()
        .zip(marked.pixels())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let run = ResidualRun {
        original: args.original.display().to_string(),
        watermarked: args.watermarked.display().to_string(),
        output: PathBuf::from(&args.output).display().to_string(),
        bit_depth: depth_arg.to_string(),
    };
    let summary = ResidualSummary {
        psnr_db: finite(p),
        psnr_infinite: p.is_infinite(),
        max_abs_difference,
    };
    emit(&render("residual", &run, &summary)?, ctx.report)?;
    Ok(Outcome::Ok)
}
