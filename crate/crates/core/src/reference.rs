//! Double-precision orthonormal DCT-II, used as the accuracy reference.

use std::f64::consts::PI;

use crate::precise::{cos_pi16, Fixed};

pub type Block<T> = [[T; 8]; 8];

/// Orthonormal 8-point DCT-II matrix, `C[k][j] = c_k cos((2j+1) k pi / 16)`.
pub fn dct_matrix() -> Block<f64> {
    let mut c = [[0.0; 8]; 8];
    for (k, row) in c.iter_mut().enumerate() {
        let norm = if k == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };
        for (j, v) in row.iter_mut().enumerate() {
            *v = norm * (((2 * j + 1) * k) as f64 * PI / 16.0).cos();
        }
    }
    c
}

/// The same matrix at arbitrary precision.
pub fn dct_matrix_precise(bits: u32) -> Vec<Vec<Fixed>> {
    (0..8)
        .map(|k| {
            (0..8)
                .map(|j| {
                    if k == 0 {
                        cos_pi16(4, bits).half()
                    } else {
                        cos_pi16(((2 * j + 1) * k) as i64, bits).half()
                    }
                })
                .collect()
        })
        .collect()
}

/// `C A C^T`: rows of the result index the frequency of the first (column)
/// pass, columns the frequency of the second (row) pass.
pub fn dct2d_reference(block: &Block<f64>) -> Block<f64> {
    let c = dct_matrix();
    let mut tmp = [[0.0; 8]; 8];
    for u in 0..8 {
        for col in 0..8 {
            tmp[u][col] = (0..8).map(|r| c[u][r] * block[r][col]).sum();
        }
    }
    let mut out = [[0.0; 8]; 8];
    for u in 0..8 {
        for v in 0..8 {
            out[u][v] = (0..8).map(|col| tmp[u][col] * c[v][col]).sum();
        }
    }
    out
}

/// `C^T X C`, the inverse of [`dct2d_reference`].
pub fn idct2d_reference(coeffs: &Block<f64>) -> Block<f64> {
    let c = dct_matrix();
    let mut tmp = [[0.0; 8]; 8];
    for r in 0..8 {
        for v in 0..8 {
            tmp[r][v] = (0..8).map(|u| c[u][r] * coeffs[u][v]).sum();
        }
    }
    let mut out = [[0.0; 8]; 8];
    for r in 0..8 {
        for col in 0..8 {
            out[r][col] = (0..8).map(|v| tmp[r][v] * c[v][col]).sum();
        }
    }
    out
}

pub fn to_real(block: &Block<i64>) -> Block<f64> {
    block.map(|row| row.map(|v| v as f64))
}
