//! Forward renders of known Lambertian scenes, written independently of the
//! library's shading code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Scene {
    pub size: usize,
    pub normals: Vec<[f64; 3]>,
    pub albedo: Vec<f64>,
    pub lighting: [f64; 9],
    pub image: Vec<f64>,
}

fn harmonics(n: [f64; 3]) -> [f64; 9] {
    let [x, y, z] = n;
    [
        0.282095,
        0.488603 * y,
        0.488603 * z,
        0.488603 * x,
        1.092548 * x * y,
        1.092548 * y * z,
        0.315392 * (3.0 * z * z - 1.0),
        1.092548 * x * z,
        0.546274 * (x * x - y * y),
    ]
}

pub fn shade(l: &[f64; 9], n: [f64; 3]) -> f64 {
    harmonics(n).iter().zip(l).map(|(a, b)| a * b).sum::<f64>().max(0.0)
}

/// Gentle relief (a few broad Gaussian bumps), smooth albedo with dark
/// vein-like stripes, and frontal lighting with a small random tilt.
pub fn gentle_scene(seed: u64, size: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let bumps: Vec<[f64; 4]> = (0..4)
        .map(|_| {
            [
                rng.random_range(0.15 * s..0.85 * s),
                rng.random_range(0.15 * s..0.85 * s),
                rng.random_range(0.12 * s..0.25 * s),
                rng.random_range(-6.0..6.0),
            ]
        })
        .collect();
    let height = |x: f64, y: f64| -> f64 {
        bumps
            .iter()
            .map(|b| b[3] * (-((x - b[0]).powi(2) + (y - b[1]).powi(2)) / (2.0 * b[2] * b[2])).exp())
            .sum()
    };
    let veins: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (rng.random_range(0.2 * s..0.8 * s), rng.random_range(-0.3..0.3), rng.random_range(1.5..3.0)))
        .collect();
    let mut normals = Vec::with_capacity(size * size);
    let mut albedo = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (fx, fy) = (x as f64, y as f64);
            let hx = height(fx + 0.5, fy) - height(fx - 0.5, fy);
            let hy = height(fx, fy + 0.5) - height(fx, fy - 0.5);
            let len = (hx * hx + hy * hy + 1.0).sqrt();
            normals.push([-hx / len, -hy / len, 1.0 / len]);
            let mut a = 0.6 + 0.1 * (fx * 0.05).sin() * (fy * 0.04).cos();
            for &(row, slope, width) in &veins {
                let d = fy - (row + slope * (fx - s / 2.0));
                a -= 0.2 * (-d * d / (2.0 * width * width)).exp();
            }
            albedo.push(a);
        }
    }
    let scale = rng.random_range(0.8..1.2);
    let mut lighting = [1.5, 0.0, 0.9, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0];
    lighting[1] = rng.random_range(-0.15..0.15);
    lighting[3] = rng.random_range(-0.15..0.15);
    lighting.iter_mut().for_each(|v| *v *= scale);
    let image = normals
        .iter()
        .zip(&albedo)
        .map(|(&n, &a)| (a * shade(&lighting, n)).clamp(0.0, 1.0))
        .collect();
    Scene {
        size,
        normals,
        albedo,
        lighting,
        image,
    }
}

pub fn mean_angle_degrees(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let total: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]).clamp(-1.0, 1.0).acos())
        .sum();
    (total / a.len() as f64).to_degrees()
}

/// Angle of each normal from the viewing axis, averaged, in degrees.
pub fn mean_tilt_degrees(n: &[[f64; 3]]) -> f64 {
    (n.iter().map(|v| v[2].clamp(-1.0, 1.0).acos()).sum::<f64>() / n.len() as f64).to_degrees()
}
