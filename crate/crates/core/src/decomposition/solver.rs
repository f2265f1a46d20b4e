//! Objective, gradients, and the individual alternating-minimization steps.
//!
//! The decomposer minimizes
//!
//! ```text
//! E(N, rho, l) = sum_p (rho(p) <l, Y(N(p))> - I(p))^2 + lambda * sum_p |grad N(p)|^2
//! ```
//!
//! where the smoothness term uses forward differences on each normal
//! component. Every step below only commits an update when `E` does not
//! increase, so the per-iteration objective trace is monotone.

use nalgebra::{DMatrix, DVector};

use super::sh::{basis, shade, shade_gradient};
use crate::types::GrayImage;

/// Mutable iterate of the alternating solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub width: usize,
    pub height: usize,
    pub normals: Vec<[f64; 3]>,
    pub albedo: Vec<f64>,
    pub lighting: [f64; 9],
}

/// Data term alone.
pub fn data_energy(image: &GrayImage, state: &SolverState) -> f64 {
    let mut e = 0.0;
    for ((&i, &rho), &n) in image.pixels().iter().zip(&state.albedo).zip(&state.normals) {
        let r = rho * shade(&state.lighting, n) - i;
        e += r * r;
    }
    e
}

/// Sum of squared forward differences of the normal field.
pub fn smoothness_energy(state: &SolverState) -> f64 {
    let (w, h) = (state.width, state.height);
    let n = &state.normals;
    let mut e = 0.0;
    for y in 0..h {
        for x in 0..w {
            let p = n[y * w + x];
            if x + 1 < w {
                e += sq_dist(n[y * w + x + 1], p);
            }
            if y + 1 < h {
                e += sq_dist(n[(y + 1) * w + x], p);
            }
        }
    }
    e
}

#[inline]
fn sq_dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

pub fn objective(image: &GrayImage, state: &SolverState, smoothness_weight: f64) -> f64 {
    data_energy(image, state) + smoothness_weight * smoothness_energy(state)
}

/// Gradient of [`objective`] with respect to the raw (unnormalized)
/// components of every normal.
pub fn normal_gradient(image: &GrayImage, state: &SolverState, smoothness_weight: f64) -> Vec<[f64; 3]> {
    let (w, h) = (state.width, state.height);
    let l = &state.lighting;
    let mut grad: Vec<[f64; 3]> = image
        .pixels()
        .iter()
        .zip(&state.albedo)
        .zip(&state.normals)
        .map(|((&i, &rho), &n)| {
            let r = rho * shade(l, n) - i;
            let ds = shade_gradient(l, n);
            let k = 2.0 * r * rho;
            [k * ds[0], k * ds[1], k * ds[2]]
        })
        .collect();

    let n = &state.normals;
    let two_lambda = 2.0 * smoothness_weight;
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let mut neighbours = [None, None];
            if x + 1 < w {
                neighbours[0] = Some(p + 1);
            }
            if y + 1 < h {
                neighbours[1] = Some(p + w);
            }
            for q in neighbours.into_iter().flatten() {
                for c in 0..3 {
                    let d = two_lambda * (n[q][c] - n[p][c]);
                    grad[q][c] += d;
                    grad[p][c] -= d;
                }
            }
        }
    }
    grad
}

/// Least-squares lighting given normals and albedo (minimum-norm solution
/// when the design is rank deficient, e.g. for a flat normal field).
pub fn solve_lighting(image: &GrayImage, normals: &[[f64; 3]], albedo: &[f64]) -> [f64; 9] {
    let mut ata = [[0.0f64; 9]; 9];
    let mut atb = [0.0f64; 9];
    for ((&i, &rho), &n) in image.pixels().iter().zip(albedo).zip(normals) {
        let b = basis(n);
        let row: [f64; 9] = std::array::from_fn(|k| rho * b[k]);
        for a in 0..9 {
            atb[a] += row[a] * i;
            for c in a..9 {
                ata[a][c] += row[a] * row[c];
            }
        }
    }
    let m = DMatrix::from_fn(9, 9, |r, c| if r <= c { ata[r][c] } else { ata[c][r] });
    let rhs = DVector::from_column_slice(&atb);
    let svd = m.svd(true, true);
    let largest = svd.singular_values.max();
    if largest <= 0.0 {
        return [0.0; 9];
    }
    match svd.solve(&rhs, largest * 1e-12) {
        Ok(x) => std::array::from_fn(|k| x[k]),
        Err(_) => [0.0; 9],
    }
}

/// Per-pixel albedo update `clamp(I / max(s, floor), 0, 2)`, kept only where
/// it does not increase that pixel's residual.
pub fn update_albedo(image: &GrayImage, state: &mut SolverState, shading_floor: f64) {
    let l = state.lighting;
    for ((rho, &i), &n) in state
        .albedo
        .iter_mut()
        .zip(image.pixels())
        .zip(&state.normals)
    {
        let s = shade(&l, n);
        let candidate = (i / s.max(shading_floor)).clamp(0.0, 2.0);
        let old = *rho * s - i;
        let new = candidate * s - i;
        if new * new <= old * old {
            *rho = candidate;
        }
    }
}

/// Projects a raw vector onto the unit camera-facing hemisphere.
#[inline]
pub(crate) fn project_hemisphere(v: [f64; 3], fallback: [f64; 3]) -> [f64; 3] {
    let v = [v[0], v[1], v[2].max(0.0)];
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !len.is_finite() || len < 1e-12 {
        return fallback;
    }
    [v[0] / len, v[1] / len, v[2] / len]
}

/// One projected-gradient step on the normals with backtracking. Returns the
/// accepted step size, or `None` when no tried step decreased the objective.
pub fn normal_step(
    image: &GrayImage,
    state: &mut SolverState,
    smoothness_weight: f64,
    current: f64,
    initial_step: f64,
) -> Option<(f64, f64)> {
    let grad = normal_gradient(image, state, smoothness_weight);
    let mut step = initial_step;
    let mut trial = state.clone();
    for _ in 0..30 {
        for ((t, &n), g) in trial.normals.iter_mut().zip(&state.normals).zip(&grad) {
            *t = project_hemisphere([n[0] - step * g[0], n[1] - step * g[1], n[2] - step * g[2]], n);
        }
        let e = objective(image, &trial, smoothness_weight);
        if e < current {
            state.normals = trial.normals;
            return Some((step, e));
        }
        step *= 0.5;
    }
    None
}
