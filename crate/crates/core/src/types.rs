//! Image and geometry value types shared by every stage of the pipeline.
//!
//! All rasters are row-major with `index = y * width + x`. Values are
//! immutable after construction and validated on the way in.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest accepted side length for any raster.
pub const MAX_SIDE: usize = 1 << 16;

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
        return Err(Error::Dimension(format!(
            "unsupported raster size {width}x{height}"
        )));
    }
    if width * height != len {
        return Err(Error::Dimension(format!(
            "{width}x{height} raster needs {} values, got {len}",
            width * height
        )));
    }
    Ok(())
}

/// Single-channel image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        if let Some(i) = pixels
            .iter()
            .position(|p| !p.is_finite() || *p < 0.0 || *p > 1.0)
        {
            return Err(Error::Contract(format!(
                "pixel {i} has intensity {} outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    /// Converts an 8-bit buffer, mapping each byte `b` to `b / 255`.
    pub fn from_bytes(raw: &[u8], width: usize, height: usize) -> Result<Self> {
        check_dims(width, height, raw.len())?;
        let pixels = raw.iter().map(|&b| f64::from(b) / 255.0).collect();
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Quantizes to 8 bits with round-half-up.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&p| (p * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// Per-pixel unit surface normals, all on the camera-facing hemisphere.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    width: usize,
    height: usize,
    normals: Vec<[f64; 3]>,
}

impl NormalMap {
    /// Normalizes arbitrary vectors to unit length, flipping z onto the
    /// camera-facing hemisphere.
    pub fn normalize_normals(width: usize, height: usize, raw: Vec<[f64; 3]>) -> Result<Self> {
        check_dims(width, height, raw.len())?;
        let mut normals = raw;
        for (index, n) in normals.iter_mut().enumerate() {
            *n = normalize_one(*n).ok_or(Error::DegenerateNormal { index })?;
        }
        Ok(Self {
            width,
            height,
            normals,
        })
    }

    /// Wraps vectors that must already be unit length with `z >= 0`.
    pub fn new(width: usize, height: usize, normals: Vec<[f64; 3]>) -> Result<Self> {
        check_dims(width, height, normals.len())?;
        for (i, n) in normals.iter().enumerate() {
            let len = norm3(*n);
            if !len.is_finite() || (len - 1.0).abs() > 1e-6 || n[2] < 0.0 {
                return Err(Error::Contract(format!(
                    "normal {i} = {n:?} is not a unit camera-facing vector"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            normals,
        })
    }

    /// A map where every normal faces the camera.
    pub fn flat(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![[0.0, 0.0, 1.0]; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn normals(&self) -> &[[f64; 3]] {
        &self.normals
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.normals[y * self.width + x]
    }

    /// Maps channel `c` (0 = x, 1 = y, 2 = z) to a gray image via `(v + 1) / 2`.
    pub fn channel_image(&self, c: usize) -> GrayImage {
        let pixels = self
            .normals
            .iter()
            .map(|n| ((n[c] + 1.0) * 0.5).clamp(0.0, 1.0))
            .collect();
        GrayImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    /// Mean angle, in radians, between each normal and `+z`.
    pub fn mean_tilt(&self) -> f64 {
        let sum: f64 = self.normals.iter().map(|n| n[2].clamp(-1.0, 1.0).acos()).sum();
        sum / self.normals.len() as f64
    }
}

#[inline]
pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn normalize_one(v: [f64; 3]) -> Option<[f64; 3]> {
    let len = norm3(v);
    if !len.is_finite() || len == 0.0 {
        return None;
    }
    // Vectors already unit length up to rounding pass through unchanged,
    // which makes normalization idempotent bit for bit.
    let mut n = if (len - 1.0).abs() <= 4.0 * f64::EPSILON {
        v
    } else {
        [v[0] / len, v[1] / len, v[2] / len]
    };
    if n[2] < 0.0 {
        n[2] = -n[2];
    }
    Some(n)
}

/// Nonnegative real-valued raster (albedo, shading, diffuse).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Contract(format!(
                "scalar map value {i} = {} is negative or non-finite",
                values[i]
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Reinterprets the map as an image, clamping to `[0, 1]`.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.values.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }
}

/// Second-order spherical-harmonic lighting, ordered
/// `(0,0), (1,-1), (1,0), (1,1), (2,-2), (2,-1), (2,0), (2,1), (2,2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightingCoeffs(pub [f64; 9]);

impl LightingCoeffs {
    pub fn new(l: [f64; 9]) -> Result<Self> {
        if l.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("lighting coefficients must be finite".into()));
        }
        Ok(Self(l))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.map(|v| v * factor))
    }
}

/// The three captures of one presentation at increasing illumination index.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureTriplet {
    images: [GrayImage; 3],
}

impl CaptureTriplet {
    pub fn new(i1: GrayImage, i2: GrayImage, i3: GrayImage) -> Result<Self> {
        let dims = (i1.width, i1.height);
        for (k, img) in [&i2, &i3].into_iter().enumerate() {
            if (img.width, img.height) != dims {
                return Err(Error::Dimension(format!(
                    "capture {} is {}x{}, expected {}x{}",
                    k + 2,
                    img.width,
                    img.height,
                    dims.0,
                    dims.1
                )));
            }
        }
        Ok(Self {
            images: [i1, i2, i3],
        })
    }

    pub fn images(&self) -> &[GrayImage; 3] {
        &self.images
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PresentationLabel {
    #[serde(rename = "bonafide")]
    BonaFide,
    #[serde(rename = "attack")]
    Attack,
}

impl PresentationLabel {
    /// `+1` for bona fide, `-1` for attack.
    pub fn sign(self) -> f64 {
        match self {
            PresentationLabel::BonaFide => 1.0,
            PresentationLabel::Attack => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PresentationLabel::BonaFide => "bonafide",
            PresentationLabel::Attack => "attack",
        }
    }
}

impl fmt::Display for PresentationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PresentationLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bonafide" => Ok(PresentationLabel::BonaFide),
            "attack" => Ok(PresentationLabel::Attack),
            other => Err(Error::parse("label", format!("unknown label {other:?}"))),
        }
    }
}
