//! Single-image shape/material decomposition under a Lambertian
//! second-order spherical-harmonic lighting model.
//!
//! The forward model renders shading `s(p) = <l, Y(N(p))>` and a diffuse map
//! `D = clamp(rho * s, 0, 1)`. [`decompose`] inverts it by alternating a
//! linear least-squares lighting fit, a closed-form albedo update and a
//! projected gradient step on the normals.

pub(crate) mod sh;
pub mod solver;

pub use sh::{compose_diffuse, render_shading, sh_basis, C0, C1, C2, C3, C4};

use crate::error::{Error, Result};
use crate::filters::{gaussian_blur, gradient};
use crate::types::{CaptureTriplet, GrayImage, LightingCoeffs, NormalMap, ScalarMap};
use solver::SolverState;

/// Blur applied to the image before deriving initial normals from its gradient.
pub const INIT_BLUR_SIGMA: f64 = 4.0;

/// Smallest accepted side length for [`decompose`].
pub const MIN_SIDE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_outer_iterations: usize,
    /// Stop once the relative objective decrease of an outer iteration
    /// falls below this value.
    pub convergence_tol: f64,
    pub smoothness_weight: f64,
    pub shading_floor: f64,
    /// Recorded with the result; the solver itself draws no random numbers.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iterations: 50,
            convergence_tol: 1e-4,
            smoothness_weight: 0.1,
            shading_floor: 1e-3,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_outer_iterations > 0
            && self.convergence_tol > 0.0
            && self.convergence_tol < 1.0
            && self.smoothness_weight >= 0.0
            && self.smoothness_weight.is_finite()
            && self.shading_floor > 0.0
            && self.shading_floor.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Contract(format!("invalid solver config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub normal_map: NormalMap,
    pub albedo: ScalarMap,
    pub shading: ScalarMap,
    pub diffuse: ScalarMap,
    pub lighting: LightingCoeffs,
    pub residual_rmse: f64,
    /// Objective value after initialization followed by one entry per
    /// completed outer iteration.
    pub objective_trace: Vec<f64>,
}

/// Initial normals `N ∝ (-dh/dx, -dh/dy, 1)` of the blurred image height field.
pub fn initial_normals(image: &GrayImage) -> Vec<[f64; 3]> {
    let (w, h) = (image.width(), image.height());
    let height_field = gaussian_blur(image.pixels(), w, h, INIT_BLUR_SIGMA);
    let (gx, gy) = gradient(&height_field, w, h);
    gx.iter()
        .zip(&gy)
        .map(|(&dx, &dy)| {
            let len = (dx * dx + dy * dy + 1.0).sqrt();
            [-dx / len, -dy / len, 1.0 / len]
        })
        .collect()
}

pub fn decompose(image: &GrayImage, config: &SolverConfig) -> Result<DecompositionResult> {
    config.validate()?;
    let (w, h) = (image.width(), image.height());
    if w < MIN_SIDE || h < MIN_SIDE {
        return Err(Error::Size(format!(
            "decomposition needs at least {MIN_SIDE}x{MIN_SIDE}, got {w}x{h}"
        )));
    }
    let lambda = config.smoothness_weight;

    let normals = initial_normals(image);
    let albedo = image.pixels().to_vec();
    let lighting = solver::solve_lighting(image, &normals, &albedo);
    let mut state = SolverState {
        width: w,
        height: h,
        normals,
        albedo,
        lighting,
    };
    let mut current = solver::objective(image, &state, lambda);
    let mut trace = vec![current];
    let mut step = 1.0;

    for _ in 0..config.max_outer_iterations {
        let previous = current;

        let candidate = solver::solve_lighting(image, &state.normals, &state.albedo);
        let old_lighting = std::mem::replace(&mut state.lighting, candidate);
        let e = solver::objective(image, &state, lambda);
        if e <= current {
            current = e;
        } else {
            state.lighting = old_lighting;
        }

        solver::update_albedo(image, &mut state, config.shading_floor);
        current = current.min(solver::objective(image, &state, lambda));

        if let Some((accepted, e)) = solver::normal_step(image, &mut state, lambda, current, step) {
            current = e;
            step = (accepted * 2.0).min(1e3);
        }

        trace.push(current);
        if previous <= f64::MIN_POSITIVE || (previous - current) / previous < config.convergence_tol {
            break;
        }
    }

    finish(image, state, trace)
}

fn finish(image: &GrayImage, state: SolverState, objective_trace: Vec<f64>) -> Result<DecompositionResult> {
    let (w, h) = (state.width, state.height);
    let normal_map = NormalMap::new(w, h, state.normals)?;
    let lighting = LightingCoeffs::new(state.lighting)?;
    let albedo = ScalarMap::new(w, h, state.albedo)?;
    let shading = render_shading(&normal_map, &lighting);
    let diffuse = compose_diffuse(&albedo, &shading)?;
    let residual_rmse = rmse(diffuse.values(), image.pixels());
    Ok(DecompositionResult {
        normal_map,
        albedo,
        shading,
        diffuse,
        lighting,
        residual_rmse,
        objective_trace,
    })
}

pub(crate) fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum / a.len() as f64).sqrt()
}

/// Decomposes the three captures of a presentation, preserving order.
pub fn decompose_triplet(triplet: &CaptureTriplet, config: &SolverConfig) -> Result<[DecompositionResult; 3]> {
    let [a, b, c] = triplet.images();
    Ok([decompose(a, config)?, decompose(b, config)?, decompose(c, config)?])
}
