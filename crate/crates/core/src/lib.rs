//! Invisible DWT+DCT watermarking for grayscale medical images, plus the
//! quality and utility statistics used to check that marking a synthetic set
//! leaves its measured quality unchanged.
//!
//! ```no_run
//! use medmark_core::{embed, extract, load_image, EmbedConfig, WatermarkPayload};
//!
//! let img = load_image("scan.png")?;
//! let cfg = EmbedConfig::default();
//! let marked = embed(&img, &WatermarkPayload::new("synthetic")?, &cfg)?;
//! assert_eq!(extract(&marked, &cfg, None)?.decoded_text.as_deref(), Some("synthetic"));
//! # Ok::<(), medmark_core::Error>(())
//! ```

pub mod corpus;
pub mod error;
pub mod features;
pub mod image_io;
pub mod metrics;
pub mod stats;
pub mod transforms;
pub mod watermark;

pub use error::{Error, Result};
pub use features::{extract_features_builtin, read_features, write_features, FeatureSet};
pub use image_io::{
    load_image, resize_bilinear, save_image, scan_dataset, BitDepth, DatasetManifest, ImageGray,
    ManifestEntry,
};
pub use metrics::{
    fidelity, fit_gaussian, frechet_distance, lossless_compress_size, privacy, psnr,
    quality_report, variety, GaussianStats, QualityConfig, QualityReport, Source, Threshold,
};
pub use stats::{
    mcnemar, paired_outcomes, zero_normalized_deltas, McNemarMethod, McNemarResult, PairedOutcomes,
};
pub use transforms::{
    dct2_forward, dct2_inverse, dwt_haar_forward, dwt_haar_inverse, DctBlock, Plane, Subband,
    SubbandDecomposition,
};
pub use watermark::{
    detect, embed, encode_payload, extract, residual, DetectionResult, EmbedConfig,
    WatermarkPayload,
};

/// Crate version, echoed into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
