//! Literal reference implementations of the texture descriptors.

use std::f64::consts::PI;

use fvpad::descriptors::{lpq_whitening, FilterBank};
use fvpad::GrayImage;

fn bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let wx = x - x0;
    let wy = y - y0;
    let (x0, y0) = (x0 as usize, y0 as usize);
    let at = |xx: usize, yy: usize| {
        if xx < img.width() && yy < img.height() {
            img.get(xx, yy)
        } else {
            0.0
        }
    };
    (1.0 - wx) * (1.0 - wy) * at(x0, y0)
        + wx * (1.0 - wy) * at(x0 + 1, y0)
        + (1.0 - wx) * wy * at(x0, y0 + 1)
        + wx * wy * at(x0 + 1, y0 + 1)
}

fn snap(v: f64) -> f64 {
    if (v - v.round()).abs() < 1e-9 {
        v.round()
    } else {
        v
    }
}

/// Uniform patterns listed by brute force, in ascending code order.
pub fn uniform_codes() -> Vec<u32> {
    (0u32..256)
        .filter(|&c| {
            let bits: Vec<u32> = (0..8).map(|i| (c >> i) & 1).collect();
            (0..8).filter(|&i| bits[i] != bits[(i + 1) % 8]).count() <= 2
        })
        .collect()
}

pub fn naive_lbp_counts(img: &GrayImage) -> Vec<u64> {
    let uniform = uniform_codes();
    let mut counts = vec![0u64; uniform.len() + 1];
    for y in 1..img.height() - 1 {
        for x in 1..img.width() - 1 {
            let c = img.get(x, y);
            let mut code = 0u32;
            for p in 0..8 {
                let angle = 2.0 * PI * p as f64 / 8.0;
                let sx = snap(x as f64 + angle.cos());
                let sy = snap(y as f64 - angle.sin());
                if bilinear(img, sx, sy) >= c {
                    code += 1 << p;
                }
            }
            let bin = uniform.iter().position(|&u| u == code).unwrap_or(uniform.len());
            counts[bin] += 1;
        }
    }
    counts
}

pub fn naive_lpq_counts(img: &GrayImage) -> Vec<u64> {
    let a = 1.0 / 7.0;
    let freqs = [(a, 0.0), (0.0, a), (a, a), (a, -a)];
    let v = lpq_whitening();
    let mut counts = vec![0u64; 256];
    for y in 3..img.height() - 3 {
        for x in 3..img.width() - 3 {
            let mut coeffs = Vec::with_capacity(8);
            for &(ux, uy) in &freqs {
                let mut re = 0.0;
                let mut im = 0.0;
                for dy in -3i32..=3 {
                    for dx in -3i32..=3 {
                        let f = img.get((x as i32 + dx) as usize, (y as i32 + dy) as usize);
                        let phase = -2.0 * PI * (ux * dx as f64 + uy * dy as f64);
                        re += f * phase.cos();
                        im += f * phase.sin();
                    }
                }
                coeffs.push(re);
                coeffs.push(im);
            }
            let mut code = 0usize;
            for (bit, row) in v.iter().enumerate() {
                let g: f64 = (0..8).map(|c| row[c] * coeffs[c]).sum();
                if g > 0.0 {
                    code |= 1 << bit;
                }
            }
            counts[code] += 1;
        }
    }
    counts
}

pub fn naive_bsif_counts(img: &GrayImage, bank: &FilterBank) -> Vec<u64> {
    let s = bank.size();
    let mut counts = vec![0u64; 1 << bank.filter_count()];
    for oy in 0..=img.height() - s {
        for ox in 0..=img.width() - s {
            let mut code = 0usize;
            for (i, f) in bank.filters().iter().enumerate() {
                let mut r = 0.0;
                for a in 0..s {
                    for b in 0..s {
                        r += f[a * s + b] * img.get(ox + s - 1 - b, oy + s - 1 - a);
                    }
                }
                if r > 0.0 {
                    code |= 1 << i;
                }
            }
            counts[code] += 1;
        }
    }
    counts
}
