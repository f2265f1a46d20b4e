//! Synthetic finger-vein captures: Lambertian renders of a finger height
//! field with dark vein curves in the albedo, plus printed artefacts of the
//! same finger.
//!
//! Lengths in [`SynthConfig`] are pixels at the 480-row reference height and
//! scale with `height`.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{Manifest, ManifestEntry, ILLUMINATIONS, SESSIONS};
use crate::decomposition::sh::shade;
use crate::error::{Error, Result};
use crate::types::{GrayImage, PresentationLabel};

const REFERENCE_HEIGHT: f64 = 480.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub width: usize,
    pub height: usize,
    /// Inclusive range of veins per finger.
    pub vein_count: (usize, usize),
    pub vein_width: (f64, f64),
    /// Fractional albedo drop at a vein centre.
    pub vein_contrast: (f64, f64),
    pub illumination_scales: [f64; 3],
    pub noise_sigma: f64,
    pub halftone_period: f64,
    /// Fractional albedo modulation of the halftone dots.
    pub halftone_depth: f64,
    /// Standard deviation of the multiplicative paper grain.
    pub paper_grain: f64,
    /// 0 keeps the finger's geometry, 1 makes the print perfectly flat.
    pub flattening: f64,
    /// Maximum per-session finger translation.
    pub session_shift: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 78,
            width: 744,
            height: 480,
            vein_count: (4, 7),
            vein_width: (3.0, 7.0),
            vein_contrast: (0.15, 0.35),
            illumination_scales: [0.8, 1.0, 1.2],
            noise_sigma: 0.01,
            halftone_period: 5.0,
            halftone_depth: 0.01,
            paper_grain: 0.005,
            flattening: 0.8,
            session_shift: 5.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.vein_width.0,
            self.vein_contrast.0,
            self.noise_sigma,
            self.halftone_period,
            self.halftone_depth,
            self.paper_grain,
            self.session_shift,
        ];
        let ok = self.n_subjects > 0
            && self.width >= 16
            && self.height >= 16
            && self.vein_count.0 > 0
            && self.vein_count.0 <= self.vein_count.1
            && self.vein_width.0 <= self.vein_width.1
            && self.vein_contrast.0 <= self.vein_contrast.1
            && self.vein_contrast.1 < 1.0
            && self.halftone_depth < 1.0
            && positive.iter().all(|v| *v > 0.0 && v.is_finite())
            && self.illumination_scales.iter().all(|s| *s > 0.0 && s.is_finite())
            && (0.0..=1.0).contains(&self.flattening);
        if ok {
            Ok(())
        } else {
            Err(Error::Contract(format!("invalid synthetic config {self:?}")))
        }
    }
}

/// Images indexed `[session][illumination]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectCaptures {
    pub bona_fide: [[GrayImage; 3]; 2],
    pub attack: [[GrayImage; 3]; 2],
}

struct Bump {
    x: f64,
    sigma: f64,
    amplitude: f64,
}

struct Vein {
    y0: f64,
    slope: f64,
    wiggle: f64,
    wavelength: f64,
    phase: f64,
    x_range: (f64, f64),
    width: f64,
    contrast: f64,
}

/// One subject's finger, in scene coordinates (pixels of the output frame
/// before the session shift).
struct Finger {
    center_y: f64,
    radius: f64,
    depth: f64,
    bumps: Vec<Bump>,
    skin: f64,
    skin_waves: [(f64, f64, f64, f64); 2],
    veins: Vec<Vein>,
    lighting: [f64; 9],
}

impl Finger {
    fn sample(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Self {
        let k = config.height as f64 / REFERENCE_HEIGHT;
        let (w, h) = (config.width as f64, config.height as f64);
        let center_y = h / 2.0 + rng.random_range(-0.05..0.05) * h;
        let radius = rng.random_range(0.55..0.65) * h;
        let depth = 0.6 * radius * rng.random_range(0.9..1.1);
        let bumps = (0..2)
            .map(|_| Bump {
                x: rng.random_range(0.2..0.8) * w,
                sigma: rng.random_range(25.0..45.0) * k,
                amplitude: rng.random_range(-4.0..4.0) * k,
            })
            .collect();
        let skin = rng.random_range(0.6..0.7);
        let mut wave = || {
            (
                rng.random_range(0.01..0.03),
                TAU / (rng.random_range(150.0..400.0) * k),
                TAU / (rng.random_range(150.0..400.0) * k),
                rng.random_range(0.0..TAU),
            )
        };
        let skin_waves = [wave(), wave()];
        let n_veins = rng.random_range(config.vein_count.0..=config.vein_count.1);
        let veins = (0..n_veins)
            .map(|_| {
                let start = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..0.3) * w };
                let end = if rng.random_bool(0.5) { w } else { rng.random_range(0.7..1.0) * w };
                Vein {
                    y0: center_y + rng.random_range(-0.6..0.6) * radius,
                    slope: rng.random_range(-0.15..0.15),
                    wiggle: rng.random_range(3.0..12.0) * k,
                    wavelength: rng.random_range(120.0..300.0) * k,
                    phase: rng.random_range(0.0..TAU),
                    x_range: (start, end),
                    width: rng.random_range(config.vein_width.0..=config.vein_width.1) * k,
                    contrast: rng.random_range(config.vein_contrast.0..=config.vein_contrast.1),
                }
            })
            .collect();
        let mut lighting = [1.5, 0.0, 0.9, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0];
        lighting[1] = rng.random_range(-0.1..0.1);
        lighting[3] = rng.random_range(-0.1..0.1);
        Self {
            center_y,
            radius,
            depth,
            bumps,
            skin,
            skin_waves,
            veins,
            lighting,
        }
    }

    fn height_at(&self, x: f64, y: f64) -> f64 {
        let t = (y - self.center_y) / self.radius;
        let mut h = self.depth * (1.0 - t * t).max(0.0).sqrt();
        for b in &self.bumps {
            h += b.amplitude * (-(x - b.x).powi(2) / (2.0 * b.sigma * b.sigma)).exp();
        }
        h
    }

    fn normal_at(&self, x: f64, y: f64) -> [f64; 3] {
        let hx = self.height_at(x + 0.5, y) - self.height_at(x - 0.5, y);
        let hy = self.height_at(x, y + 0.5) - self.height_at(x, y - 0.5);
        let len = (hx * hx + hy * hy + 1.0).sqrt();
        [-hx / len, -hy / len, 1.0 / len]
    }

    fn albedo_at(&self, x: f64, y: f64) -> f64 {
        let mut a = self.skin;
        for &(amp, fx, fy, phase) in &self.skin_waves {
            a += amp * (fx * x + phase).sin() * (fy * y).cos();
        }
        for v in &self.veins {
            if x < v.x_range.0 || x > v.x_range.1 {
                continue;
            }
            let yc = v.y0 + v.slope * (x - v.x_range.0) + v.wiggle * (TAU * x / v.wavelength + v.phase).sin();
            let d = y - yc;
            a *= 1.0 - v.contrast * (-d * d / (2.0 * v.width * v.width)).exp();
        }
        a
    }
}

fn flatten(n: [f64; 3], f: f64) -> [f64; 3] {
    let v = [(1.0 - f) * n[0], (1.0 - f) * n[1], (1.0 - f) * n[2] + f];
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / len, v[1] / len, v[2] / len]
}

/// Renders the 12 captures of subject `index` (0-based). Images are already
/// quantized to 8 bits, so they equal what [`synth_generate`] writes.
pub fn render_subject(config: &SynthConfig, index: usize) -> Result<SubjectCaptures> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64 + 1);
    let finger = Finger::sample(config, &mut rng);
    let k = config.height as f64 / REFERENCE_HEIGHT;
    let (w, h) = (config.width, config.height);
    let noise = Normal::new(0.0, config.noise_sigma).expect("validated sigma");
    let grain = Normal::new(0.0, config.paper_grain).expect("validated grain");

    // The print is one sheet; its grain lives in scene coordinates with a
    // margin covering the largest session shift.
    let margin = (config.session_shift * k).ceil() as usize + 2;
    let (gw, gh) = (w + 2 * margin, h + 2 * margin);
    let grain_field: Vec<f64> = (0..gw * gh).map(|_| grain.sample(&mut rng)).collect();
    let period = config.halftone_period * k;

    let mut bona_fide = Vec::with_capacity(2);
    let mut attack = Vec::with_capacity(2);
    for _session in 0..SESSIONS {
        let shift = config.session_shift * k;
        let (dx, dy) = (rng.random_range(-shift..=shift), rng.random_range(-shift..=shift));
        let mut normals = Vec::with_capacity(w * h);
        let mut flat_normals = Vec::with_capacity(w * h);
        let mut albedo = Vec::with_capacity(w * h);
        let mut printed = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = (x as f64 + dx, y as f64 + dy);
                let n = finger.normal_at(sx, sy);
                normals.push(n);
                flat_normals.push(flatten(n, config.flattening));
                let a = finger.albedo_at(sx, sy);
                albedo.push(a);
                let dots = 0.5 * (1.0 + (TAU * sx / period).cos() * (TAU * sy / period).cos());
                let gx = (sx.round() as isize + margin as isize).clamp(0, gw as isize - 1) as usize;
                let gy = (sy.round() as isize + margin as isize).clamp(0, gh as isize - 1) as usize;
                printed.push(a * (1.0 - config.halftone_depth * dots) * (1.0 + grain_field[gy * gw + gx]));
            }
        }
        let mut render = |normals: &[[f64; 3]], albedo: &[f64], scale: f64| -> Result<GrayImage> {
            let l = finger.lighting.map(|v| v * scale);
            let pixels: Vec<u8> = normals
                .iter()
                .zip(albedo)
                .map(|(&n, &a)| {
                    let v = (a * shade(&l, n) + noise.sample(&mut rng)).clamp(0.0, 1.0);
                    (v * 255.0 + 0.5).floor() as u8
                })
                .collect();
            GrayImage::from_bytes(&pixels, w, h)
        };
        let mut bona = Vec::with_capacity(3);
        let mut att = Vec::with_capacity(3);
        for &scale in &config.illumination_scales {
            bona.push(render(&normals, &albedo, scale)?);
            att.push(render(&flat_normals, &printed, scale)?);
        }
        bona_fide.push(triple(bona));
        attack.push(triple(att));
    }
    Ok(SubjectCaptures {
        bona_fide: pair(bona_fide),
        attack: pair(attack),
    })
}

fn triple(v: Vec<GrayImage>) -> [GrayImage; 3] {
    v.try_into().unwrap_or_else(|_| unreachable!("three illuminations"))
}

fn pair(v: Vec<[GrayImage; 3]>) -> [[GrayImage; 3]; 2] {
    v.try_into().unwrap_or_else(|_| unreachable!("two sessions"))
}

pub fn subject_id(index: usize) -> String {
    format!("s{:03}", index + 1)
}

/// Writes `images/*.pgm` and `manifest.csv` under `out_dir`. If anything
/// fails, files created by this call are removed.
pub fn synth_generate(config: &SynthConfig, out_dir: &Path) -> Result<Manifest> {
    config.validate()?;
    let existed = out_dir.exists();
    let result = generate_into(config, out_dir);
    if result.is_err() {
        let _ = if existed {
            std::fs::remove_dir_all(out_dir.join("images")).and(std::fs::remove_file(out_dir.join("manifest.csv")))
        } else {
            std::fs::remove_dir_all(out_dir)
        };
    }
    result
}

fn generate_into(config: &SynthConfig, out_dir: &Path) -> Result<Manifest> {
    let images = out_dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let per_subject: Vec<Vec<ManifestEntry>> = (0..config.n_subjects)
        .into_par_iter()
        .map(|index| -> Result<Vec<ManifestEntry>> {
            let captures = render_subject(config, index)?;
            let id = subject_id(index);
            let mut entries = Vec::with_capacity(12);
            for (label, sets) in [
                (PresentationLabel::BonaFide, &captures.bona_fide),
                (PresentationLabel::Attack, &captures.attack),
            ] {
                for (s, set) in sets.iter().enumerate() {
                    for (i, image) in set.iter().enumerate() {
                        let rel = PathBuf::from("images").join(format!("{id}_s{}_i{}_{label}.pgm", s + 1, i + 1));
                        super::write_image(image, &out_dir.join(&rel))?;
                        entries.push(ManifestEntry {
                            subject_id: id.clone(),
                            session: s as u8 + 1,
                            illumination: i as u8 + 1,
                            label,
                            path: rel,
                        });
                    }
                }
            }
            Ok(entries)
        })
        .collect::<Result<_>>()?;
    debug_assert!(per_subject.iter().all(|v| v.len() == (2 * SESSIONS * ILLUMINATIONS) as usize));
    let manifest = Manifest::new(per_subject.into_iter().flatten().collect(), out_dir)?;
    manifest.save(&out_dir.join("manifest.csv"))?;
    Ok(manifest)
}
