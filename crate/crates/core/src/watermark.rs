//! Blind DWT+DCT watermarking with quantization index modulation.
//!
//! The image goes through one Haar level, the selected subband is cut into
//! `block_size`² tiles in row-major order, and one mid-frequency DCT
//! coefficient per tile is snapped onto one of two interleaved lattices.
//! Payload bits are laid over the tiles cyclically, so every bit is carried
//! by roughly `capacity / bit_len` tiles and recovered by majority vote.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_io::ImageGray;
use crate::transforms::{
    dwt_haar_forward, dwt_haar_inverse, DctPlan, Subband, SubbandDecomposition,
};

pub const DEFAULT_PAYLOAD_TEXT: &str = "synthetic";
pub const DEFAULT_THRESHOLD: f64 = 0.95;
/// Header is a big-endian u16 byte count.
pub const HEADER_BITS: usize = 16;
/// Upper bound on the body length tried by header search, in bytes.
pub const MAX_SEARCH_BYTES: usize = 1024;

/// Text payload and its bit layout: 16-bit big-endian byte length, then the
/// UTF-8 bytes, most significant bit first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WatermarkPayload {
    text: String,
    bits: Vec<bool>,
}

impl WatermarkPayload {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        let bits = encode_payload(&text)?;
        Ok(Self { text, bits })
    }

    /// Parses a complete header+body bit sequence.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if bits.len() < HEADER_BITS || !(bits.len() - HEADER_BITS).is_multiple_of(8) {
            return Err(Error::Format(format!(
                "payload bit length {} is not 16 + 8k",
                bits.len()
            )));
        }
        let declared = bits_to_u16(&bits[..HEADER_BITS]) as usize;
        let body_len = (bits.len() - HEADER_BITS) / 8;
        if declared != body_len {
            return Err(Error::Format(format!(
                "header declares {declared} bytes but {body_len} follow"
            )));
        }
        let bytes: Vec<u8> = bits[HEADER_BITS..]
            .chunks_exact(8)
            .map(bits_to_byte)
            .collect();
        let text = String::from_utf8(bytes)
            .map_err(|e| Error::Format(format!("payload is not UTF-8: {e}")))?;
        Ok(Self {
            text,
            bits: bits.to_vec(),
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit_len(&self) -> usize {
        self.bits.len()
    }
}

/// Header+body bit encoding of `text`.
pub fn encode_payload(text: &str) -> Result<Vec<bool>> {
    let bytes = text.as_bytes();
    let len = u16::try_from(bytes.len())
        .map_err(|_| Error::arg(format!("payload is {} bytes, limit is 65535", bytes.len())))?;
    let mut bits = Vec::with_capacity(HEADER_BITS + 8 * bytes.len());
    push_bits(&mut bits, u64::from(len), 16);
    for &b in bytes {
        push_bits(&mut bits, u64::from(b), 8);
    }
    Ok(bits)
}

fn push_bits(out: &mut Vec<bool>, value: u64, width: u32) {
    for shift in (0..width).rev() {
        out.push((value >> shift) & 1 == 1);
    }
}

fn bits_to_u16(bits: &[bool]) -> u16 {
    bits.iter().fold(0u16, |acc, &b| (acc << 1) | u16::from(b))
}

fn bits_to_byte(bits: &[bool]) -> u8 {
    bits.iter().fold(0u8, |acc, &b| (acc << 1) | u8::from(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub block_size: usize,
    /// `(row, col)` of the carrier coefficient inside each block's DCT.
    pub coeff_pos: (usize, usize),
    /// Lattice spacing in coefficient units.
    pub quant_step: f64,
    pub subband: Subband,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            block_size: 4,
            coeff_pos: (2, 2),
            quant_step: 0.072,
            subband: Subband::LL,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.quant_step.is_finite() && self.quant_step > 0.0) {
            return Err(Error::arg(format!(
                "quant_step must be positive, got {}",
                self.quant_step
            )));
        }
        if self.block_size < 2 {
            return Err(Error::arg(format!(
                "block_size must be at least 2, got {}",
                self.block_size
            )));
        }
        let (r, c) = self.coeff_pos;
        if r >= self.block_size || c >= self.block_size {
            return Err(Error::arg(format!(
                "carrier ({r},{c}) lies outside a {0}x{0} block",
                self.block_size
            )));
        }
        if (r, c) == (0, 0) {
            return Err(Error::arg("carrier must not be the DC coefficient"));
        }
        Ok(())
    }

    /// Number of carrier blocks (= embeddable bits) for a `width`×`height` image.
    pub fn capacity(&self, width: usize, height: usize) -> usize {
        let (bw, bh) = (width.div_ceil(2), height.div_ceil(2));
        (bw / self.block_size) * (bh / self.block_size)
    }

    fn carrier_index(&self) -> usize {
        self.coeff_pos.0 * self.block_size + self.coeff_pos.1
    }
}

/// QIM: snap `c` to the lattice offset by 1/4 (bit 0) or 3/4 (bit 1) of `step`.
#[inline]
pub fn qim_embed(c: f64, bit: bool, step: f64) -> f64 {
    let q = (c / step).floor();
    let offset = if bit { 0.75 } else { 0.25 };
    (q + offset) * step
}

#[inline]
pub fn qim_decode(c: f64, step: f64) -> bool {
    let r = c / step;
    r - r.floor() >= 0.5
}

/// Visits every carrier block of the configured subband in row-major order.
fn for_each_block(
    sub: &mut SubbandDecomposition,
    cfg: &EmbedConfig,
    mut f: impl FnMut(usize, &mut [f64]) -> bool,
) -> Result<()> {
    let plan = DctPlan::new(cfg.block_size)?;
    let bs = cfg.block_size;
    let band = sub.band_mut(cfg.subband);
    let (nx, ny) = (band.width / bs, band.height / bs);
    let mut block = vec![0.0; bs * bs];
    let mut scratch = vec![0.0; bs * bs];
    for by in 0..ny {
        for bx in 0..nx {
            band.read_block(bx * bs, by * bs, bs, &mut block);
            plan.forward_in_place(&mut block, &mut scratch);
            if f(by * nx + bx, &mut block) {
                plan.inverse_in_place(&mut block, &mut scratch);
                band.write_block(bx * bs, by * bs, bs, &block);
            }
        }
    }
    Ok(())
}

fn check_capacity(img: &ImageGray, cfg: &EmbedConfig, needed: usize) -> Result<usize> {
    let capacity = cfg.capacity(img.width(), img.height());
    if capacity == 0 || capacity < needed {
        return Err(Error::Capacity { needed, capacity });
    }
    Ok(capacity)
}

/// Embeds without the final clamp to `[0, 1]`.
pub fn embed_unclamped(
    img: &ImageGray,
    payload: &WatermarkPayload,
    cfg: &EmbedConfig,
) -> Result<ImageGray> {
    cfg.validate()?;
    check_capacity(img, cfg, payload.bit_len())?;
    let bits = payload.bits();
    let carrier = cfg.carrier_index();
    let step = cfg.quant_step;

    let mut sub = dwt_haar_forward(img);
    for_each_block(&mut sub, cfg, |idx, block| {
        let bit = bits[idx % bits.len()];
        block[carrier] = qim_embed(block[carrier], bit, step);
        true
    })?;
    Ok(dwt_haar_inverse(&sub)?.with_source_bit_depth(img.source_bit_depth()))
}

pub fn embed(img: &ImageGray, payload: &WatermarkPayload, cfg: &EmbedConfig) -> Result<ImageGray> {
    let mut out = embed_unclamped(img, payload, cfg)?;
    out.clamp_unit();
    Ok(out)
}

/// Hard decisions for every carrier block, in embedding order.
pub fn carrier_bits(img: &ImageGray, cfg: &EmbedConfig) -> Result<Vec<bool>> {
    cfg.validate()?;
    let capacity = check_capacity(img, cfg, 1)?;
    let carrier = cfg.carrier_index();
    let step = cfg.quant_step;
    let mut bits = Vec::with_capacity(capacity);
    let mut sub = dwt_haar_forward(img);
    for_each_block(&mut sub, cfg, |_, block| {
        bits.push(qim_decode(block[carrier], step));
        false
    })?;
    Ok(bits)
}

/// Majority-voted bits for a cyclic layout of period `len`. Ties go to 0.
struct Vote {
    bits: Vec<bool>,
    /// Raw block decisions agreeing with their position's majority.
    agreeing: usize,
    min_votes: usize,
}

fn majority_vote(raw: &[bool], len: usize) -> Vote {
    let mut ones = vec![0usize; len];
    let mut totals = vec![0usize; len];
    for (i, &b) in raw.iter().enumerate() {
        totals[i % len] += 1;
        ones[i % len] += usize::from(b);
    }
    let bits: Vec<bool> = ones.iter().zip(&totals).map(|(&o, &t)| 2 * o > t).collect();
    let agreeing = bits
        .iter()
        .zip(ones.iter().zip(&totals))
        .map(|(&b, (&o, &t))| if b { o } else { t - o })
        .sum();
    Vote {
        bits,
        agreeing,
        min_votes: totals.iter().copied().min().unwrap_or(0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub decoded_text: Option<String>,
    pub bit_accuracy: f64,
    pub detected: bool,
    pub votes_per_bit: usize,
    pub threshold: f64,
}

/// Blind extraction from the watermarked image alone.
///
/// With a known bit length the payload is voted directly. Otherwise every
/// body length `k` up to [`MAX_SEARCH_BYTES`] is tried and kept when its voted
/// header equals `k`; among those the candidate whose raw block decisions
/// agree best with their majority wins (smaller `k` on ties).
///
/// `bit_accuracy` here is that agreement fraction, since no reference payload
/// is available.
pub fn extract(
    img: &ImageGray,
    cfg: &EmbedConfig,
    payload_bit_length: Option<usize>,
) -> Result<DetectionResult> {
    let raw = carrier_bits(img, cfg)?;
    let capacity = raw.len();

    let chosen = match payload_bit_length {
        Some(len) => {
            if len < HEADER_BITS || !(len - HEADER_BITS).is_multiple_of(8) {
                return Err(Error::arg(format!(
                    "payload bit length {len} is not 16 + 8k"
                )));
            }
            if len > capacity {
                return Err(Error::Capacity {
                    needed: len,
                    capacity,
                });
            }
            Some(majority_vote(&raw, len))
        }
        None => {
            let mut best: Option<Vote> = None;
            for k in 0..=MAX_SEARCH_BYTES {
                let len = HEADER_BITS + 8 * k;
                if len > capacity {
                    break;
                }
                let vote = majority_vote(&raw, len);
                if bits_to_u16(&vote.bits[..HEADER_BITS]) as usize != k {
                    continue;
                }
                if best.as_ref().is_none_or(|b| vote.agreeing > b.agreeing) {
                    best = Some(vote);
                }
            }
            best
        }
    };

    let Some(vote) = chosen else {
        return Ok(DetectionResult {
            decoded_text: None,
            bit_accuracy: 0.0,
            detected: false,
            votes_per_bit: 0,
            threshold: DEFAULT_THRESHOLD,
        });
    };
    let decoded_text = WatermarkPayload::from_bits(&vote.bits).ok().map(|p| p.text);
    let bit_accuracy = vote.agreeing as f64 / capacity as f64;
    Ok(DetectionResult {
        detected: decoded_text.is_some() && bit_accuracy >= DEFAULT_THRESHOLD,
        decoded_text,
        bit_accuracy,
        votes_per_bit: vote.min_votes,
        threshold: DEFAULT_THRESHOLD,
    })
}

/// Known-payload verification: fraction of voted payload bits matching
/// `expected`, thresholded.
pub fn detect(
    img: &ImageGray,
    expected: &WatermarkPayload,
    cfg: &EmbedConfig,
    threshold: f64,
) -> Result<DetectionResult> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::arg(format!(
            "threshold must lie in [0, 1], got {threshold}"
        )));
    }
    let raw = carrier_bits(img, cfg)?;
    let len = expected.bit_len();
    if len > raw.len() {
        return Err(Error::Capacity {
            needed: len,
            capacity: raw.len(),
        });
    }
    let vote = majority_vote(&raw, len);
    let matching = vote
        .bits
        .iter()
        .zip(expected.bits())
        .filter(|(a, b)| a == b)
        .count();
    let bit_accuracy = matching as f64 / len as f64;
    Ok(DetectionResult {
        decoded_text: WatermarkPayload::from_bits(&vote.bits).ok().map(|p| p.text),
        bit_accuracy,
        detected: bit_accuracy >= threshold,
        votes_per_bit: vote.min_votes,
        threshold,
    })
}

/// Min-max normalized difference `watermarked - original`; a flat difference
/// maps to 0.5 everywhere.
pub fn residual(original: &ImageGray, watermarked: &ImageGray) -> Result<ImageGray> {
    if !original.same_dims(watermarked) {
        return Err(Error::arg(format!(
            "residual needs equal sizes, got {}x{} and {}x{}",
            original.width(),
            original.height(),
            watermarked.width(),
            watermarked.height()
        )));
    }
    let diff: Vec<f64> = watermarked
        .pixels()
        .iter()
        .zip(original.pixels())
        .map(|(w, o)| w - o)
        .collect();
    let (lo, hi) = diff
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
    let pixels = if hi > lo {
        diff.iter().map(|d| (d - lo) / (hi - lo)).collect()
    } else {
        vec![0.5; diff.len()]
    };
    ImageGray::from_pixels(original.width(), original.height(), pixels)
}
