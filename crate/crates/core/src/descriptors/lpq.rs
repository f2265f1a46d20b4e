//! Local phase quantization over a 7x7 short-term Fourier window.
//!
//! Four low frequencies `(a,0), (0,a), (a,a), (a,-a)` with `a = 1/7` give
//! eight real coefficients per pixel. They are decorrelated under a
//! Markov correlation model between window pixels (`rho = 0.9`) and the
//! signs of the whitened coefficients form an 8-bit code.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SMatrix};

use crate::error::{Error, Result};
use crate::types::GrayImage;

pub const LPQ_WINDOW: usize = 7;
pub const LPQ_BINS: usize = 256;
pub const LPQ_CORRELATION: f64 = 0.9;

const RADIUS: usize = LPQ_WINDOW / 2;
const TAPS: usize = LPQ_WINDOW * LPQ_WINDOW;

/// The four frequency vectors `(u_x, u_y)` in units of cycles per pixel.
pub fn lpq_frequencies() -> [(f64, f64); 4] {
    let a = 1.0 / LPQ_WINDOW as f64;
    [(a, 0.0), (0.0, a), (a, a), (a, -a)]
}

/// Real kernels: row `2k` is `cos`, row `2k+1` is `-sin` of
/// `2*pi*(u_x*dx + u_y*dy)` over window offsets in row-major order, so the
/// dot product with a window yields the real and imaginary parts of
/// `sum f(x+d) exp(-2*pi*i*<u, d>)`.
fn kernels() -> &'static [[f64; TAPS]; 8] {
    static K: OnceLock<[[f64; TAPS]; 8]> = OnceLock::new();
    K.get_or_init(|| {
        let mut k = [[0.0; TAPS]; 8];
        for (f, (ux, uy)) in lpq_frequencies().into_iter().enumerate() {
            for j in 0..LPQ_WINDOW {
                for i in 0..LPQ_WINDOW {
                    let dx = i as f64 - RADIUS as f64;
                    let dy = j as f64 - RADIUS as f64;
                    let phase = 2.0 * PI * (ux * dx + uy * dy);
                    k[2 * f][j * LPQ_WINDOW + i] = phase.cos();
                    k[2 * f + 1][j * LPQ_WINDOW + i] = -phase.sin();
                }
            }
        }
        k
    })
}

/// Decorrelating transform `V^T` applied to the eight coefficients.
///
/// `V` holds the right singular vectors of `A M C M^T A`, where `C` is the
/// pixel covariance `rho^|p_i - p_j|`, `M` the kernel matrix and `A` a tiny
/// diagonal perturbation that separates repeated singular values. Each
/// singular vector is sign-normalized so its largest-magnitude entry is
/// positive.
pub fn lpq_whitening() -> &'static [[f64; 8]; 8] {
    static V: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    V.get_or_init(|| {
        let positions: Vec<(f64, f64)> = (0..TAPS)
            .map(|t| ((t % LPQ_WINDOW) as f64, (t / LPQ_WINDOW) as f64))
            .collect();
        let cov = DMatrix::from_fn(TAPS, TAPS, |a, b| {
            let (xa, ya) = positions[a];
            let (xb, yb) = positions[b];
            LPQ_CORRELATION.powf(((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt())
        });
        let k = kernels();
        let m = DMatrix::from_fn(8, TAPS, |r, c| k[r][c]);
        let d = &m * cov * m.transpose();
        let scale = [1.000007, 1.000006, 1.000005, 1.000004, 1.000003, 1.000002, 1.000001, 1.0];
        let a = DMatrix::from_fn(8, 8, |r, c| if r == c { scale[r] } else { 0.0 });
        let d = &a * d * &a;
        let d = SMatrix::<f64, 8, 8>::from_fn(|r, c| 0.5 * (d[(r, c)] + d[(c, r)]));
        let svd = d.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        // Sort by descending singular value for a stable ordering.
        let mut order: Vec<usize> = (0..8).collect();
        order.sort_by(|&p, &q| svd.singular_values[q].total_cmp(&svd.singular_values[p]));
        let mut out = [[0.0; 8]; 8];
        for (row, &src) in order.iter().enumerate() {
            let mut vec: [f64; 8] = std::array::from_fn(|c| v_t[(src, c)]);
            let pivot = vec
                .iter()
                .copied()
                .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
            if pivot < 0.0 {
                vec.iter_mut().for_each(|v| *v = -*v);
            }
            out[row] = vec;
        }
        out
    })
}

/// LPQ code at every pixel whose window lies inside the image, row-major
/// over `(w-6) x (h-6)`.
///
/// Window values are taken relative to the centre pixel. The kernels have
/// zero sum, so this leaves the coefficients unchanged while making flat
/// regions produce exact zeros.
pub fn lpq_codes(image: &GrayImage) -> Result<Vec<u8>> {
    let (w, h) = (image.width(), image.height());
    if w < LPQ_WINDOW || h < LPQ_WINDOW {
        return Err(Error::Size(format!(
            "LPQ needs at least {LPQ_WINDOW}x{LPQ_WINDOW}, got {w}x{h}"
        )));
    }
    let k = kernels();
    let v = lpq_whitening();
    let px = image.pixels();
    let mut window = [0.0; TAPS];
    let mut codes = Vec::with_capacity((w - 2 * RADIUS) * (h - 2 * RADIUS));
    for y in RADIUS..h - RADIUS {
        for x in RADIUS..w - RADIUS {
            let center = px[y * w + x];
            for j in 0..LPQ_WINDOW {
                let row = (y + j - RADIUS) * w + x - RADIUS;
                for i in 0..LPQ_WINDOW {
                    window[j * LPQ_WINDOW + i] = px[row + i] - center;
                }
            }
            let coeffs: [f64; 8] = std::array::from_fn(|r| {
                k[r].iter().zip(&window).map(|(a, b)| a * b).sum()
            });
            let mut code = 0u8;
            for (bit, vrow) in v.iter().enumerate() {
                let g: f64 = vrow.iter().zip(&coeffs).map(|(a, b)| a * b).sum();
                if g > 0.0 {
                    code |= 1 << bit;
                }
            }
            codes.push(code);
        }
    }
    Ok(codes)
}

pub fn lpq_counts(image: &GrayImage) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; LPQ_BINS];
    for code in lpq_codes(image)? {
        counts[code as usize] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_are_dc_free() {
        for row in kernels() {
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn whitening_is_orthonormal() {
        let v = lpq_whitening();
        for a in 0..8 {
            for b in 0..8 {
                let dot: f64 = (0..8).map(|c| v[a][c] * v[b][c]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn whitening_diagonalizes_coefficient_covariance() {
        let v = lpq_whitening();
        let k = kernels();
        let cov = |a: usize, b: usize| {
            let (xa, ya) = ((a % 7) as f64, (a / 7) as f64);
            let (xb, yb) = ((b % 7) as f64, (b / 7) as f64);
            LPQ_CORRELATION.powf(((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt())
        };
        let mut d = [[0.0; 8]; 8];
        for r in 0..8 {
            for c in 0..8 {
                for a in 0..TAPS {
                    for b in 0..TAPS {
                        d[r][c] += k[r][a] * cov(a, b) * k[c][b];
                    }
                }
            }
        }
        let scale: f64 = (0..8).map(|i| d[i][i]).sum();
        for p in 0..8 {
            for q in 0..8 {
                if p == q {
                    continue;
                }
                let mut e = 0.0;
                for r in 0..8 {
                    for c in 0..8 {
                        e += v[p][r] * d[r][c] * v[q][c];
                    }
                }
                assert!(e.abs() < 1e-4 * scale, "off-diagonal ({p},{q}) = {e}");
            }
        }
    }
}
