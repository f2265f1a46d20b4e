//! Real second-order spherical-harmonic basis and the Lambertian forward model.

use crate::error::{Error, Result};
use crate::types::{norm3, LightingCoeffs, NormalMap, ScalarMap};

pub const C0: f64 = 0.282095;
pub const C1: f64 = 0.488603;
pub const C2: f64 = 1.092548;
pub const C3: f64 = 0.315392;
pub const C4: f64 = 0.546274;

/// Evaluates the nine basis functions at a unit normal.
pub fn sh_basis(normal: [f64; 3]) -> Result<[f64; 9]> {
    let len = norm3(normal);
    if !len.is_finite() || (len - 1.0).abs() > 1e-6 {
        return Err(Error::Contract(format!(
            "sh_basis expects a unit normal, got {normal:?} (length {len})"
        )));
    }
    Ok(basis(normal))
}

/// Basis polynomials without the unit-length check. The solver evaluates
/// them off the sphere while differentiating.
#[inline]
pub(crate) fn basis([x, y, z]: [f64; 3]) -> [f64; 9] {
    [
        C0,
        C1 * y,
        C1 * z,
        C1 * x,
        C2 * x * y,
        C2 * y * z,
        C3 * (3.0 * z * z - 1.0),
        C2 * x * z,
        C4 * (x * x - y * y),
    ]
}

#[inline]
pub(crate) fn shade(l: &[f64; 9], n: [f64; 3]) -> f64 {
    let b = basis(n);
    let mut s = 0.0;
    for k in 0..9 {
        s += l[k] * b[k];
    }
    s
}

/// Gradient of `<l, basis(n)>` with respect to the components of `n`.
#[inline]
pub(crate) fn shade_gradient(l: &[f64; 9], [x, y, z]: [f64; 3]) -> [f64; 3] {
    [
        C1 * l[3] + C2 * y * l[4] + C2 * z * l[7] + 2.0 * C4 * x * l[8],
        C1 * l[1] + C2 * x * l[4] + C2 * z * l[5] - 2.0 * C4 * y * l[8],
        C1 * l[2] + C2 * y * l[5] + 6.0 * C3 * z * l[6] + C2 * x * l[7],
    ]
}

/// Shading image `max(0, <l, basis(n(p))>)` for every pixel.
pub fn render_shading(normal_map: &NormalMap, lighting: &LightingCoeffs) -> ScalarMap {
    let values = normal_map
        .normals()
        .iter()
        .map(|&n| shade(&lighting.0, n).max(0.0))
        .collect();
    ScalarMap::new(normal_map.width(), normal_map.height(), values)
        .expect("clamped shading is finite and nonnegative")
}

/// Diffuse map `clamp(albedo * shading, 0, 1)`.
pub fn compose_diffuse(albedo: &ScalarMap, shading: &ScalarMap) -> Result<ScalarMap> {
    if (albedo.width(), albedo.height()) != (shading.width(), shading.height()) {
        return Err(Error::Dimension(format!(
            "albedo is {}x{}, shading is {}x{}",
            albedo.width(),
            albedo.height(),
            shading.width(),
            shading.height()
        )));
    }
    let values = albedo
        .values()
        .iter()
        .zip(shading.values())
        .map(|(a, s)| (a * s).clamp(0.0, 1.0))
        .collect();
    ScalarMap::new(albedo.width(), albedo.height(), values)
}
