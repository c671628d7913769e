use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use medmark_core::{McNemarMethod, Subband, Threshold};

#[derive(Debug, Parser)]
#[command(
    name = "medmark",
    version,
    about = "Invisible watermarking and quality metrics for grayscale medical images"
)]
pub struct Cli {
    /// TOML file of defaults; keys are long flag names
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads, or "auto"
    #[arg(long, global = true, env = "MEDMARK_THREADS", value_name = "N|auto")]
    pub threads: Option<Threads>,

    /// Write the JSON report here and print a summary table instead
    #[arg(long, global = true, value_name = "FILE")]
    pub report: Option<PathBuf>,

    /// More log output on stderr (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed a text payload into every image of a directory
    Embed(EmbedArgs),
    /// Decode the payload from an image or directory
    Extract(ExtractArgs),
    /// Check images for an expected payload
    Detect(DetectArgs),
    /// Fidelity, variety, FID, privacy and PSNR for a real/synthetic pair
    Quality(QualityArgs),
    /// McNemar's test and accuracy deltas for two prediction files
    UtilityStats(UtilityArgs),
    /// Normalized difference image between an original and its marked copy
    Residual(ResidualArgs),
    /// Write a seeded procedural test corpus
    GenCorpus(CorpusArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CodecArgs {
    /// Quantization step of the carrier coefficient
    #[arg(long)]
    pub step: Option<f64>,
    /// DCT block edge inside the subband
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Carrier coefficient as ROW,COL
    #[arg(long, value_name = "ROW,COL")]
    pub coeff: Option<Coeff>,
    /// Subband carrying the payload
    #[arg(long)]
    pub subband: Option<Subband>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Payload text
    #[arg(long)]
    pub text: Option<String>,
    /// Output bit depth: 8, 16 or "source"
    #[arg(long)]
    pub bit_depth: Option<DepthArg>,
    #[command(flatten)]
    pub codec: CodecArgs,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Image file or directory
    pub input: PathBuf,
    /// Known payload length in bits; searched from the header otherwise
    #[arg(long)]
    pub payload_bits: Option<usize>,
    #[command(flatten)]
    pub codec: CodecArgs,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Image file or directory
    pub input: PathBuf,
    /// Expected payload text
    #[arg(long)]
    pub text: Option<String>,
    /// Minimum bit accuracy for a positive verdict
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub codec: CodecArgs,
}

#[derive(Debug, Args)]
pub struct QualityArgs {
    /// Real reference set: image directory or .feat file
    pub real: PathBuf,
    /// Synthetic set: image directory or .feat file
    pub synth: PathBuf,
    /// Second synthetic set, reported against the first with relative deltas
    #[arg(long, value_name = "SYNTH")]
    pub compare: Option<PathBuf>,
    /// Fidelity distance threshold, or "auto"
    #[arg(long)]
    pub tau: Option<Threshold>,
    /// Privacy distance threshold, or "auto"
    #[arg(long)]
    pub delta: Option<Threshold>,
    /// "builtin" or an MDMKFEAT table keyed by image path
    #[arg(long, value_name = "FILE|builtin")]
    pub features: Option<String>,
    /// Built-in feature length (g² + 32)
    #[arg(long)]
    pub feature_dim: Option<usize>,
    /// Resize every image before measuring, as WxH
    #[arg(long, value_name = "WxH")]
    pub resize: Option<Size>,
    /// Originals matched by relative path for PSNR of the synthetic set
    #[arg(long, value_name = "DIR")]
    pub paired_original: Option<PathBuf>,
    /// The synthetic slot holds real data; privacy is omitted
    #[arg(long)]
    pub synth_is_real: bool,
    /// Training set for privacy (defaults to the real set)
    #[arg(long, value_name = "SRC")]
    pub train: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UtilityArgs {
    /// CSV with columns id,label,pred for the baseline model
    pub baseline: PathBuf,
    /// CSV with columns id,label,pred for the compared model
    pub augmented: PathBuf,
    /// chi2_cc or exact
    #[arg(long)]
    pub method: Option<MethodArg>,
    /// Significance level
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    pub original: PathBuf,
    pub watermarked: PathBuf,
    /// Output image path (.png or .pgm)
    pub output: PathBuf,
    /// Output bit depth: 8, 16 or "source"
    #[arg(long)]
    pub bit_depth: Option<DepthArg>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    pub output: PathBuf,
    /// Number of images
    #[arg(short, long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Count(usize),
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "auto" | "0" => Ok(Threads::Auto),
            n => n
                .parse()
                .map(Threads::Count)
                .map_err(|_| format!("expected a thread count or \"auto\", got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coeff(pub usize, pub usize);

impl FromStr for Coeff {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected ROW,COL, got {s:?}");
        let (r, c) = s.split_once(',').ok_or_else(bad)?;
        Ok(Coeff(
            r.trim().parse().map_err(|_| bad())?,
            c.trim().parse().map_err(|_| bad())?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Size(pub usize, pub usize);

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected WxH, got {s:?}");
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let (w, h): (usize, usize) = (w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?);
        if w == 0 || h == 0 {
            return Err(bad());
        }
        Ok(Size(w, h))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthArg {
    Source,
    Bits(u32),
}

impl FromStr for DepthArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "source" => Ok(DepthArg::Source),
            "8" => Ok(DepthArg::Bits(8)),
            "16" => Ok(DepthArg::Bits(16)),
            _ => Err(format!("bit depth must be 8, 16 or \"source\", got {s:?}")),
        }
    }
}

impl fmt::Display for DepthArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DepthArg::Source => f.write_str("source"),
            DepthArg::Bits(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodArg(pub McNemarMethod);

impl FromStr for MethodArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "chi2_cc" | "chi2" => Ok(MethodArg(McNemarMethod::ChiSquareCorrected)),
            "exact" => Ok(MethodArg(McNemarMethod::Exact)),
            _ => Err(format!("method must be chi2_cc or exact, got {s:?}")),
        }
    }
}
