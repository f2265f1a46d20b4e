//! Texture histograms computed on raw captures or decomposed maps.

mod bsif;
mod lbp;
mod lpq;

use std::fmt;
use std::str::FromStr;

pub use bsif::{
    bsif_codes, bsif_counts, learn_bsif_filters, BsifLearning, FilterBank, DEFAULT_FILTER_COUNT,
    DEFAULT_FILTER_SIZE, ICA_MAX_ITERATIONS, ICA_TOLERANCE, MIN_TRAINING_PATCHES,
};
pub use lbp::{lbp_codes, lbp_counts, transitions, uniform_table, LBP_BINS};
pub use lpq::{lpq_codes, lpq_counts, lpq_frequencies, lpq_whitening, LPQ_BINS, LPQ_CORRELATION, LPQ_WINDOW};

use crate::error::{Error, Result};
use crate::types::{GrayImage, NormalMap, ScalarMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DescriptorKind {
    Lbp,
    Lpq,
    Bsif,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 3] = [DescriptorKind::Lbp, DescriptorKind::Lpq, DescriptorKind::Bsif];

    pub fn as_str(self) -> &'static str {
        match self {
            DescriptorKind::Lbp => "lbp",
            DescriptorKind::Lpq => "lpq",
            DescriptorKind::Bsif => "bsif",
        }
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lbp" => Ok(DescriptorKind::Lbp),
            "lpq" => Ok(DescriptorKind::Lpq),
            "bsif" => Ok(DescriptorKind::Bsif),
            other => Err(Error::parse("descriptor", format!("unknown descriptor {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceKind {
    Raw,
    NormalMap,
    DiffuseMap,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Raw => "raw",
            SourceKind::NormalMap => "normal",
            SourceKind::DiffuseMap => "diffuse",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(SourceKind::Raw),
            "normal" => Ok(SourceKind::NormalMap),
            "diffuse" => Ok(SourceKind::DiffuseMap),
            other => Err(Error::parse("source", format!("unknown map source {other:?}"))),
        }
    }
}

/// L1-normalized histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub bins: Vec<f64>,
    pub descriptor_kind: DescriptorKind,
    pub source_kind: SourceKind,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

/// A configured descriptor. BSIF carries its filter bank.
#[derive(Debug, Clone, PartialEq)]
pub enum Descriptor {
    Lbp,
    Lpq,
    Bsif(FilterBank),
}

impl Descriptor {
    pub fn kind(&self) -> DescriptorKind {
        match self {
            Descriptor::Lbp => DescriptorKind::Lbp,
            Descriptor::Lpq => DescriptorKind::Lpq,
            Descriptor::Bsif(_) => DescriptorKind::Bsif,
        }
    }

    pub fn bins(&self) -> usize {
        match self {
            Descriptor::Lbp => LBP_BINS,
            Descriptor::Lpq => LPQ_BINS,
            Descriptor::Bsif(bank) => bank.bins(),
        }
    }

    fn counts(&self, image: &GrayImage) -> Result<Vec<u64>> {
        match self {
            Descriptor::Lbp => lbp_counts(image),
            Descriptor::Lpq => lpq_counts(image),
            Descriptor::Bsif(bank) => bsif_counts(image, bank),
        }
    }
}

/// The map a descriptor is applied to.
#[derive(Debug, Clone, Copy)]
pub enum MapSource<'a> {
    Raw(&'a GrayImage),
    Diffuse(&'a ScalarMap),
    Normal(&'a NormalMap),
}

impl MapSource<'_> {
    pub fn kind(&self) -> SourceKind {
        match self {
            MapSource::Raw(_) => SourceKind::Raw,
            MapSource::Diffuse(_) => SourceKind::DiffuseMap,
            MapSource::Normal(_) => SourceKind::NormalMap,
        }
    }
}

fn normalize(counts: &[u64]) -> Result<Vec<f64>> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Size("descriptor has no valid positions".into()));
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

fn single(descriptor: &Descriptor, image: &GrayImage, source_kind: SourceKind) -> Result<FeatureVector> {
    Ok(FeatureVector {
        bins: normalize(&descriptor.counts(image)?)?,
        descriptor_kind: descriptor.kind(),
        source_kind,
    })
}

pub fn lbp_histogram(image: &GrayImage) -> Result<FeatureVector> {
    single(&Descriptor::Lbp, image, SourceKind::Raw)
}

pub fn lpq_histogram(image: &GrayImage) -> Result<FeatureVector> {
    single(&Descriptor::Lpq, image, SourceKind::Raw)
}

pub fn bsif_histogram(image: &GrayImage, bank: &FilterBank) -> Result<FeatureVector> {
    single(&Descriptor::Bsif(bank.clone()), image, SourceKind::Raw)
}

/// Computes `descriptor` on `source`. Normal maps are split into their x, y
/// and z channels (each mapped by `(v + 1) / 2`); the three channel
/// histograms are concatenated and renormalized.
pub fn extract(source: MapSource<'_>, descriptor: &Descriptor) -> Result<FeatureVector> {
    match source {
        MapSource::Raw(image) => single(descriptor, image, SourceKind::Raw),
        MapSource::Diffuse(map) => single(descriptor, &map.to_gray(), SourceKind::DiffuseMap),
        MapSource::Normal(map) => {
            let mut bins = Vec::with_capacity(3 * descriptor.bins());
            for c in 0..3 {
                bins.extend(normalize(&descriptor.counts(&map.channel_image(c))?)?);
            }
            bins.iter_mut().for_each(|b| *b /= 3.0);
            Ok(FeatureVector {
                bins,
                descriptor_kind: descriptor.kind(),
                source_kind: SourceKind::NormalMap,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(w: usize, h: usize, v: f64) -> GrayImage {
        GrayImage::new(w, h, vec![v; w * h]).unwrap()
    }

    fn mass_at(f: &FeatureVector, bin: usize) -> f64 {
        f.bins[bin]
    }

    #[test]
    fn lbp_constant_image_lands_in_all_ones_bin() {
        let f = lbp_histogram(&constant(8, 6, 0.3)).unwrap();
        assert_eq!(f.len(), 59);
        assert_eq!(mass_at(&f, uniform_table()[255] as usize), 1.0);
    }

    #[test]
    fn lbp_dark_ring_gives_zero_code() {
        let img = GrayImage::from_fn(3, 3, |x, y| if (x, y) == (1, 1) { 0.5 } else { 0.0 }).unwrap();
        assert_eq!(lbp_codes(&img).unwrap(), vec![0]);
        let f = lbp_histogram(&img).unwrap();
        assert_eq!(mass_at(&f, uniform_table()[0] as usize), 1.0);
    }

    #[test]
    fn lbp_size_error() {
        assert!(matches!(lbp_histogram(&constant(2, 5, 0.1)), Err(Error::Size(_))));
    }

    #[test]
    fn lpq_constant_image_lands_in_bin_zero() {
        let f = lpq_histogram(&constant(12, 9, 0.7)).unwrap();
        assert_eq!(f.len(), 256);
        assert_eq!(f.bins[0], 1.0);
        assert!(matches!(lpq_histogram(&constant(6, 9, 0.1)), Err(Error::Size(_))));
    }

    #[test]
    fn bsif_constant_image_lands_in_bin_zero() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let filters = (0..8)
            .map(|_| {
                let mut f: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
                let m = f.iter().sum::<f64>() / 25.0;
                f.iter_mut().for_each(|v| *v -= m);
                f
            })
            .collect();
        let bank = FilterBank::new(5, filters).unwrap();
        let f = bsif_histogram(&constant(9, 9, 0.42), &bank).unwrap();
        assert_eq!(f.len(), 256);
        assert_eq!(f.bins[0], 1.0);
        assert!(matches!(bsif_histogram(&constant(4, 9, 0.1), &bank), Err(Error::Size(_))));
    }

    #[test]
    fn flat_normal_map_lbp() {
        let normals = NormalMap::flat(6, 6).unwrap();
        let f = extract(MapSource::Normal(&normals), &Descriptor::Lbp).unwrap();
        assert_eq!(f.len(), 3 * 59);
        assert_eq!(f.source_kind, SourceKind::NormalMap);
        let all_ones = uniform_table()[255] as usize;
        for c in 0..3 {
            assert!((f.bins[c * 59 + all_ones] - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((f.bins.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn diffuse_dispatch_matches_direct() {
        let map = ScalarMap::new(5, 4, (0..20).map(|i| (i * 7 % 13) as f64 / 13.0).collect()).unwrap();
        let via_extract = extract(MapSource::Diffuse(&map), &Descriptor::Lbp).unwrap();
        let direct = lbp_histogram(&map.to_gray()).unwrap();
        assert_eq!(via_extract.bins, direct.bins);
        assert_eq!(via_extract.source_kind, SourceKind::DiffuseMap);
    }

    #[test]
    fn kind_parsing() {
        for k in DescriptorKind::ALL {
            assert_eq!(k.as_str().parse::<DescriptorKind>().unwrap(), k);
        }
        assert!("wld".parse::<DescriptorKind>().is_err());
    }
}
