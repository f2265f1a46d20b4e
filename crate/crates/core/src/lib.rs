//! Finger-vein presentation attack detection.
//!
//! Each capture is decomposed into a normal map (shape) and a diffuse map
//! (material) under a Lambertian spherical-harmonic lighting model. Texture
//! histograms (LBP, LPQ, BSIF) of the decomposed maps feed one linear
//! max-margin classifier per map and illumination, and the six scores are
//! fused with the sum rule and evaluated with ISO/IEC 30107-3 metrics.

pub mod classifier;
pub mod decomposition;
pub mod dataset;
pub mod descriptors;
pub mod error;
pub mod filters;
pub mod metrics;
pub mod pipeline;
pub mod types;

pub use error::{Error, ErrorClass, Result};
pub use types::{CaptureTriplet, GrayImage, LightingCoeffs, NormalMap, PresentationLabel, ScalarMap};
