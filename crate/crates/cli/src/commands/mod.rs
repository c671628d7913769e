use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use medmark_core::{scan_dataset, BitDepth, EmbedConfig, ImageGray};

use crate::args::{CodecArgs, Coeff, DepthArg};
use crate::config::FileConfig;

pub mod corpus;
pub mod quality;
pub mod utility;
pub mod watermark;

/// Process exit status for a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok = 0,
    Partial = 2,
    Negative = 3,
}

pub struct Ctx<'a> {
    pub file: &'a FileConfig,
    pub report: Option<&'a Path>,
}

/// Root and sorted relative paths of the images under `input`, which may be
/// a single file.
pub fn inputs(input: &Path) -> Result<(PathBuf, Vec<String>)> {
    if input.is_file() {
        let root = input.parent().map(Path::to_path_buf).unwrap_or_default();
        let name = input
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        return Ok((root, vec![name]));
    }
    let manifest = scan_dataset(input, false)?;
    if manifest.is_empty() {
        bail!("no inputs: {} holds no PNG or PGM images", input.display());
    }
    Ok((
        manifest.root,
        manifest.entries.into_iter().map(|e| e.path).collect(),
    ))
}

pub fn codec_config(args: &CodecArgs, file: &FileConfig) -> Result<EmbedConfig> {
    let d = EmbedConfig::default();
    let Coeff(r, c) = file.pick(args.coeff, "coeff", Coeff(d.coeff_pos.0, d.coeff_pos.1))?;
    let cfg = EmbedConfig {
        block_size: file.pick(args.block_size, "block-size", d.block_size)?,
        coeff_pos: (r, c),
        quant_step: file.pick(args.step, "step", d.quant_step)?,
        subband: file.pick(args.subband, "subband", d.subband)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn output_depth(arg: DepthArg, img: &ImageGray) -> Result<BitDepth> {
    Ok(match arg {
        DepthArg::Source => img.source_bit_depth(),
        DepthArg::Bits(b) => BitDepth::from_bits(b)?,
    })
}
