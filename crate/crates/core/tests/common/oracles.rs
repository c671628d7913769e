//! Reference implementations used only by tests. Nothing here calls into
//! the library's numerical code.

#![allow(dead_code)]

pub type Mat = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for k in 0..m {
            let aik = a[i][k];
            for j in 0..p {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

pub fn trace(a: &Mat) -> f64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &Mat) -> Mat {
    let n = a.len();
    let mut m: Mat = a.clone();
    let mut inv = identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| m[r][col].abs().partial_cmp(&m[s][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let d = m[col][col];
        assert!(d.abs() > 1e-300, "singular matrix");
        for j in 0..n {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for j in 0..n {
                        m[r][j] -= f * m[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    inv
}

/// Principal square root by Denman-Beavers iteration. Valid for matrices
/// with eigenvalues off the closed negative real axis, e.g. products of
/// two SPD matrices.
pub fn sqrtm_denman_beavers(a: &Mat) -> Mat {
    let n = a.len();
    let mut y = a.clone();
    let mut z = identity(n);
    for _ in 0..100 {
        let (yi, zi) = (invert(&y), invert(&z));
        let y_next: Mat = (0..n)
            .map(|i| (0..n).map(|j| 0.5 * (y[i][j] + zi[i][j])).collect())
            .collect();
        let z_next: Mat = (0..n)
            .map(|i| (0..n).map(|j| 0.5 * (z[i][j] + yi[i][j])).collect())
            .collect();
        let change: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (y_next[i][j] - y[i][j]).abs())
            .fold(0.0, f64::max);
        let scale = y_next
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        y = y_next;
        z = z_next;
        if change <= 1e-15 * scale {
            break;
        }
    }
    y
}

/// Fréchet distance between two Gaussians through the non-symmetric
/// product `Σ1·Σ2`.
pub fn frechet_oracle(mu1: &[f64], s1: &Mat, mu2: &[f64], s2: &Mat) -> f64 {
    let dmu: f64 = mu1.iter().zip(mu2).map(|(a, b)| (a - b) * (a - b)).sum();
    let covmean = sqrtm_denman_beavers(&matmul(s1, s2));
    dmu + trace(s1) + trace(s2) - 2.0 * trace(&covmean)
}

/// `Σ (σ1ᵢ − σ2ᵢ)² + ‖Δμ‖²` for diagonal covariances given as variances.
pub fn frechet_diagonal(mu1: &[f64], var1: &[f64], mu2: &[f64], var2: &[f64]) -> f64 {
    let dmu: f64 = mu1.iter().zip(mu2).map(|(a, b)| (a - b) * (a - b)).sum();
    let dsig: f64 = var1
        .iter()
        .zip(var2)
        .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
        .sum();
    dmu + dsig
}

/// Two-sided exact McNemar p-value by counting subsets:
/// `min(1, 2·Σ_{i≤min(b,c)} C(n,i) / 2ⁿ)` in integer arithmetic.
pub fn mcnemar_exact_enumerated(b: u64, c: u64) -> f64 {
    let n = b + c;
    let k = b.min(c);
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![1u128; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    let tail: u128 = row[..=k as usize].iter().sum();
    (2.0 * tail as f64 / (1u128 << n) as f64).min(1.0)
}

/// Direct-sum orthonormal 2-D DCT-II.
pub fn dct2_direct(samples: &[f64], n: usize) -> Vec<f64> {
    let alpha = |k: usize| {
        if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        }
    };
    let pi = std::f64::consts::PI;
    let mut out = vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            let mut acc = 0.0;
            for y in 0..n {
                for x in 0..n {
                    acc += samples[y * n + x]
                        * ((2 * y + 1) as f64 * u as f64 * pi / (2 * n) as f64).cos()
                        * ((2 * x + 1) as f64 * v as f64 * pi / (2 * n) as f64).cos();
                }
            }
            out[u * n + v] = alpha(u) * alpha(v) * acc;
        }
    }
    out
}

/// Random SPD matrix `A·Aᵀ + ridge·I` with entries of `A` drawn from `draw`.
pub fn random_spd(d: usize, ridge: f64, mut draw: impl FnMut() -> f64) -> Mat {
    let a: Mat = (0..d).map(|_| (0..d).map(|_| draw()).collect()).collect();
    let mut s = matmul(&a, &transpose(&a));
    for (i, row) in s.iter_mut().enumerate() {
        row[i] += ridge;
    }
    s
}
