//! Single-level orthonormal Haar DWT and orthonormal 2-D DCT-II.

use crate::error::{Error, Result};
use crate::image_io::ImageGray;

/// Dense row-major `f64` plane. Unlike [`ImageGray`] the values carry no
/// range constraint (subband coefficients, residuals).
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Copies the `size`×`size` block whose top-left corner is `(x0, y0)`.
    pub fn read_block(&self, x0: usize, y0: usize, size: usize, out: &mut [f64]) {
        for r in 0..size {
            let start = (y0 + r) * self.width + x0;
            out[r * size..(r + 1) * size].copy_from_slice(&self.data[start..start + size]);
        }
    }

    pub fn write_block(&mut self, x0: usize, y0: usize, size: usize, block: &[f64]) {
        for r in 0..size {
            let start = (y0 + r) * self.width + x0;
            self.data[start..start + size].copy_from_slice(&block[r * size..(r + 1) * size]);
        }
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Which of the four Haar planes to address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Subband {
    LL,
    LH,
    HL,
    HH,
}

impl std::str::FromStr for Subband {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LL" => Ok(Subband::LL),
            "LH" => Ok(Subband::LH),
            "HL" => Ok(Subband::HL),
            "HH" => Ok(Subband::HH),
            _ => Err(Error::arg(format!("unknown subband {s:?}"))),
        }
    }
}

/// One level of the Haar decomposition. Planes are half the padded size.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandDecomposition {
    pub ll: Plane,
    pub lh: Plane,
    pub hl: Plane,
    pub hh: Plane,
    pub original_width: usize,
    pub original_height: usize,
}

impl SubbandDecomposition {
    pub fn band(&self, which: Subband) -> &Plane {
        match which {
            Subband::LL => &self.ll,
            Subband::LH => &self.lh,
            Subband::HL => &self.hl,
            Subband::HH => &self.hh,
        }
    }

    pub fn band_mut(&mut self, which: Subband) -> &mut Plane {
        match which {
            Subband::LL => &mut self.ll,
            Subband::LH => &mut self.lh,
            Subband::HL => &mut self.hl,
            Subband::HH => &mut self.hh,
        }
    }

    pub fn energy(&self) -> f64 {
        self.ll.energy() + self.lh.energy() + self.hl.energy() + self.hh.energy()
    }
}

/// Forward Haar transform. Odd dimensions are padded by replicating the last
/// row/column; the original size is kept for the inverse crop.
pub fn dwt_haar_forward(img: &ImageGray) -> SubbandDecomposition {
    let (w, h) = (img.width(), img.height());
    let (hw, hh) = (w.div_ceil(2), h.div_ceil(2));
    let px = |x: usize, y: usize| img.get(x.min(w - 1), y.min(h - 1));

    let mut ll = Plane::zeros(hw, hh);
    let mut lh = Plane::zeros(hw, hh);
    let mut hl = Plane::zeros(hw, hh);
    let mut hh_band = Plane::zeros(hw, hh);
    for j in 0..hh {
        for i in 0..hw {
            let a = px(2 * i, 2 * j);
            let b = px(2 * i + 1, 2 * j);
            let c = px(2 * i, 2 * j + 1);
            let d = px(2 * i + 1, 2 * j + 1);
            ll.set(i, j, (a + b + c + d) / 2.0);
            hl.set(i, j, (a - b + c - d) / 2.0);
            lh.set(i, j, (a + b - c - d) / 2.0);
            hh_band.set(i, j, (a - b - c + d) / 2.0);
        }
    }
    SubbandDecomposition {
        ll,
        lh,
        hl,
        hh: hh_band,
        original_width: w,
        original_height: h,
    }
}

/// Inverse of [`dwt_haar_forward`], cropped back to the original size.
pub fn dwt_haar_inverse(sub: &SubbandDecomposition) -> Result<ImageGray> {
    let (hw, hh) = (sub.ll.width, sub.ll.height);
    for (name, p) in [("LH", &sub.lh), ("HL", &sub.hl), ("HH", &sub.hh)] {
        if p.width != hw || p.height != hh || p.data.len() != hw * hh {
            return Err(Error::arg(format!(
                "{name} plane is {}x{}, LL is {hw}x{hh}",
                p.width, p.height
            )));
        }
    }
    if sub.ll.data.len() != hw * hh {
        return Err(Error::arg("LL plane buffer does not match its dimensions"));
    }
    let (w, h) = (sub.original_width, sub.original_height);
    if w == 0 || h == 0 || w.div_ceil(2) != hw || h.div_ceil(2) != hh {
        return Err(Error::arg(format!(
            "original size {w}x{h} is inconsistent with {hw}x{hh} subbands"
        )));
    }

    let mut out = vec![0.0; w * h];
    let mut put = |x: usize, y: usize, v: f64| {
        if x < w && y < h {
            out[y * w + x] = v;
        }
    };
    for j in 0..hh {
        for i in 0..hw {
            let s = sub.ll.get(i, j);
            let hl = sub.hl.get(i, j);
            let lh = sub.lh.get(i, j);
            let d = sub.hh.get(i, j);
            put(2 * i, 2 * j, (s + hl + lh + d) / 2.0);
            put(2 * i + 1, 2 * j, (s - hl + lh - d) / 2.0);
            put(2 * i, 2 * j + 1, (s + hl - lh - d) / 2.0);
            put(2 * i + 1, 2 * j + 1, (s - hl - lh + d) / 2.0);
        }
    }
    ImageGray::from_pixels(w, h, out)
}

/// Square block of orthonormal DCT-II coefficients, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DctBlock {
    pub size: usize,
    pub coefficients: Vec<f64>,
}

impl DctBlock {
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.coefficients[row * self.size + col]
    }
}

/// Precomputed orthonormal DCT-II basis for one block size.
///
/// Basis entries are built from the angle reduced to the first quadrant, so
/// entries that are equal up to sign in exact arithmetic are bit-identical in
/// magnitude. A constant block therefore maps to exactly-zero AC coefficients
/// on even frequencies.
#[derive(Debug, Clone)]
pub struct DctPlan {
    size: usize,
    basis: Vec<f64>,
}

impl DctPlan {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::arg(format!(
                "DCT block size must be at least 2, got {size}"
            )));
        }
        let n = size;
        let mut basis = vec![0.0; n * n];
        for k in 0..n {
            let alpha = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            for i in 0..n {
                basis[k * n + i] = alpha * cos_half_pi_ratio((2 * i + 1) * k, n);
            }
        }
        Ok(Self { size, basis })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Forward 2-D DCT in place (`Y = C X Cᵀ`).
    pub fn forward_in_place(&self, block: &mut [f64], scratch: &mut [f64]) {
        self.separable(block, scratch, false);
    }

    /// Inverse 2-D DCT in place (`X = Cᵀ Y C`).
    pub fn inverse_in_place(&self, block: &mut [f64], scratch: &mut [f64]) {
        self.separable(block, scratch, true);
    }

    fn separable(&self, block: &mut [f64], scratch: &mut [f64], transpose: bool) {
        let n = self.size;
        debug_assert_eq!(block.len(), n * n);
        let m = |k: usize, i: usize| {
            if transpose {
                self.basis[i * n + k]
            } else {
                self.basis[k * n + i]
            }
        };
        // Columns first: scratch = M · block
        for k in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += m(k, i) * block[i * n + c];
                }
                scratch[k * n + c] = acc;
            }
        }
        // Then rows: block = scratch · Mᵀ
        for r in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += scratch[r * n + i] * m(k, i);
                }
                block[r * n + k] = acc;
            }
        }
    }
}

/// `cos(π·m / (2n))` evaluated through quadrant reduction.
fn cos_half_pi_ratio(m: usize, n: usize) -> f64 {
    let period = 4 * n;
    let mut m = m % period;
    if m > 2 * n {
        m = period - m;
    }
    // m in [0, 2n]: cos is antisymmetric about m = n.
    let (m, sign) = if m > n { (2 * n - m, -1.0) } else { (m, 1.0) };
    if m == n {
        return 0.0;
    }
    sign * (std::f64::consts::PI * m as f64 / (2 * n) as f64).cos()
}

fn check_square(len: usize, width: usize, height: usize) -> Result<usize> {
    if width != height {
        return Err(Error::arg(format!(
            "DCT block must be square, got {width}x{height}"
        )));
    }
    if len != width * height {
        return Err(Error::arg(format!(
            "DCT block buffer has {len} samples, expected {}",
            width * height
        )));
    }
    Ok(width)
}

/// Orthonormal 2-D DCT-II of a square `width`×`height` block.
pub fn dct2_forward(samples: &[f64], width: usize, height: usize) -> Result<DctBlock> {
    let size = check_square(samples.len(), width, height)?;
    let plan = DctPlan::new(size)?;
    let mut coefficients = samples.to_vec();
    let mut scratch = vec![0.0; size * size];
    plan.forward_in_place(&mut coefficients, &mut scratch);
    Ok(DctBlock { size, coefficients })
}

/// Inverse of [`dct2_forward`] (DCT-III with matching normalization).
pub fn dct2_inverse(block: &DctBlock) -> Result<Vec<f64>> {
    check_square(block.coefficients.len(), block.size, block.size)?;
    let plan = DctPlan::new(block.size)?;
    let mut samples = block.coefficients.clone();
    let mut scratch = vec![0.0; block.size * block.size];
    plan.inverse_in_place(&mut samples, &mut scratch);
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, px: Vec<f64>) -> ImageGray {
        ImageGray::from_pixels(w, h, px).unwrap()
    }

    #[test]
    fn haar_single_block() {
        let sub = dwt_haar_forward(&img(2, 2, vec![1.0, 2.0, 3.0, 4.0]));
        assert_eq!(sub.ll.data, vec![5.0]);
        assert_eq!(sub.hl.data, vec![-1.0]);
        assert_eq!(sub.lh.data, vec![-2.0]);
        assert_eq!(sub.hh.data, vec![0.0]);

        let back = dwt_haar_inverse(&sub).unwrap();
        assert_eq!(back.pixels(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn haar_constant_image() {
        let sub = dwt_haar_forward(&ImageGray::filled(6, 4, 0.3).unwrap());
        assert!(sub.ll.data.iter().all(|&v| (v - 0.6).abs() < 1e-15));
        for p in [&sub.lh, &sub.hl, &sub.hh] {
            assert!(p.data.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn haar_zero_subbands() {
        let sub = SubbandDecomposition {
            ll: Plane::zeros(3, 2),
            lh: Plane::zeros(3, 2),
            hl: Plane::zeros(3, 2),
            hh: Plane::zeros(3, 2),
            original_width: 6,
            original_height: 4,
        };
        assert!(dwt_haar_inverse(&sub)
            .unwrap()
            .pixels()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn haar_mismatched_planes() {
        let mut sub = dwt_haar_forward(&ImageGray::filled(4, 4, 0.1).unwrap());
        sub.hh = Plane::zeros(1, 2);
        assert!(matches!(dwt_haar_inverse(&sub), Err(Error::Argument(_))));
    }

    #[test]
    fn haar_odd_dimensions_crop_back() {
        let px: Vec<f64> = (0..15).map(|i| i as f64 / 15.0).collect();
        let image = img(5, 3, px);
        let sub = dwt_haar_forward(&image);
        assert_eq!((sub.ll.width, sub.ll.height), (3, 2));
        let back = dwt_haar_inverse(&sub).unwrap();
        assert_eq!((back.width(), back.height()), (5, 3));
        for (a, b) in image.pixels().iter().zip(back.pixels()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn dct_constant_block() {
        let block = dct2_forward(&[1.0; 16], 4, 4).unwrap();
        assert_abs_diff_eq!(block.at(0, 0), 4.0, epsilon = 1e-12);
        for (i, &c) in block.coefficients.iter().enumerate().skip(1) {
            assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);
            let (r, col) = (i / 4, i % 4);
            if r % 2 == 0 && col % 2 == 0 {
                assert_eq!(c, 0.0, "even-frequency AC ({r},{col}) must vanish exactly");
            }
        }
    }

    #[test]
    fn dct_inverse_examples() {
        let mut coefficients = vec![0.0; 16];
        coefficients[0] = 4.0;
        let samples = dct2_inverse(&DctBlock {
            size: 4,
            coefficients,
        })
        .unwrap();
        for s in samples {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
        let zero = dct2_inverse(&DctBlock {
            size: 4,
            coefficients: vec![0.0; 16],
        })
        .unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dct_rejects_bad_shapes() {
        assert!(matches!(
            dct2_forward(&[0.0; 8], 4, 2),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            dct2_forward(&[0.0; 1], 1, 1),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            dct2_forward(&[0.0; 10], 3, 3),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn basis_matches_direct_cosine() {
        for n in [2usize, 4, 8] {
            let plan = DctPlan::new(n).unwrap();
            for k in 0..n {
                let alpha = if k == 0 {
                    (1.0 / n as f64).sqrt()
                } else {
                    (2.0 / n as f64).sqrt()
                };
                for i in 0..n {
                    let direct = alpha
                        * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64)
                            .cos();
                    assert_abs_diff_eq!(plan.basis[k * n + i], direct, epsilon = 1e-14);
                }
            }
        }
    }

    fn block_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, n * n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn dct_round_trip_and_parseval(x in block_strategy(4)) {
            let y = dct2_forward(&x, 4, 4).unwrap();
            let e_in: f64 = x.iter().map(|v| v * v).sum();
            let e_out: f64 = y.coefficients.iter().map(|v| v * v).sum();
            prop_assert!((e_in - e_out).abs() <= 1e-9);
            let back = dct2_inverse(&y).unwrap();
            for (a, b) in x.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }

        #[test]
        fn dct8_round_trip(x in block_strategy(8)) {
            let y = dct2_forward(&x, 8, 8).unwrap();
            let back = dct2_inverse(&y).unwrap();
            for (a, b) in x.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }

        #[test]
        fn haar_round_trip_and_energy(x in block_strategy(8)) {
            let image = img(8, 8, x.clone());
            let sub = dwt_haar_forward(&image);
            prop_assert!((sub.energy() - x.iter().map(|v| v * v).sum::<f64>()).abs() <= 1e-9);
            let back = dwt_haar_inverse(&sub).unwrap();
            for (a, b) in x.iter().zip(back.pixels()) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }

        #[test]
        fn transforms_are_linear(
            x in block_strategy(4),
            y in block_strategy(4),
            alpha in -2.0f64..2.0,
            beta in -2.0f64..2.0,
        ) {
            let mix: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
            let tx = dct2_forward(&x, 4, 4).unwrap();
            let ty = dct2_forward(&y, 4, 4).unwrap();
            let tm = dct2_forward(&mix, 4, 4).unwrap();
            for i in 0..16 {
                let expect = alpha * tx.coefficients[i] + beta * ty.coefficients[i];
                prop_assert!((tm.coefficients[i] - expect).abs() <= 1e-9);
            }

            let hx = dwt_haar_forward(&img(4, 4, x.clone()));
            let hy = dwt_haar_forward(&img(4, 4, y.clone()));
            let hm = dwt_haar_forward(&img(4, 4, mix.clone()));
            for band in [Subband::LL, Subband::LH, Subband::HL, Subband::HH] {
                for i in 0..4 {
                    let expect = alpha * hx.band(band).data[i] + beta * hy.band(band).data[i];
                    prop_assert!((hm.band(band).data[i] - expect).abs() <= 1e-9);
                }
            }
        }
    }
}
