//! Binarized statistical image features: filters learned by independent
//! component analysis of natural patches, applied as a bank whose response
//! signs form a k-bit code.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::types::GrayImage;

pub const DEFAULT_FILTER_COUNT: usize = 8;
pub const DEFAULT_FILTER_SIZE: usize = 11;
pub const MIN_TRAINING_PATCHES: usize = 5000;
pub const ICA_MAX_ITERATIONS: usize = 200;
pub const ICA_TOLERANCE: f64 = 1e-5;

/// `k` zero-mean `s x s` filters stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    size: usize,
    filters: Vec<Vec<f64>>,
}

impl FilterBank {
    pub fn new(size: usize, filters: Vec<Vec<f64>>) -> Result<Self> {
        if size == 0 || filters.is_empty() || filters.len() > 16 {
            return Err(Error::Contract(format!(
                "filter bank needs 1..=16 filters of positive size, got {} of size {size}",
                filters.len()
            )));
        }
        for (i, f) in filters.iter().enumerate() {
            if f.len() != size * size {
                return Err(Error::Dimension(format!(
                    "filter {i} has {} taps, expected {}",
                    f.len(),
                    size * size
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Contract(format!("filter {i} is not finite")));
            }
            let sum: f64 = f.iter().sum();
            if sum.abs() > 1e-6 {
                return Err(Error::Contract(format!("filter {i} sums to {sum}, expected 0")));
            }
        }
        let k = filters.len();
        let m = DMatrix::from_fn(k, size * size, |r, c| filters[r][c]);
        let sv = m.singular_values();
        let largest = sv.max();
        if largest <= 0.0 || sv.min() <= largest * 1e-10 {
            return Err(Error::Contract("filters are linearly dependent".into()));
        }
        Ok(Self { size, filters })
    }

    pub fn filter_count(&self) -> usize {
        self.filters.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    pub fn bins(&self) -> usize {
        1 << self.filters.len()
    }

    /// Text form: a `BSIF k s` header line, then one line per filter holding
    /// its `s*s` taps in row-major order.
    pub fn to_text(&self) -> String {
        let mut out = format!("BSIF {} {}\n", self.filters.len(), self.size);
        for f in &self.filters {
            let line: Vec<String> = f.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let bad = |m: &str| Error::parse("BSIF filter bank", m);
        if tokens.next() != Some("BSIF") {
            return Err(bad("missing BSIF header"));
        }
        let mut dim = || -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| bad("truncated header"))?
                .parse()
                .map_err(|e| bad(&format!("bad header field: {e}")))
        };
        let k = dim()?;
        let s = dim()?;
        let values: Vec<f64> = tokens
            .map(|t| t.parse::<f64>().map_err(|e| bad(&format!("bad value {t:?}: {e}"))))
            .collect::<Result<_>>()?;
        if values.len() != k * s * s {
            return Err(bad(&format!("expected {} values, found {}", k * s * s, values.len())));
        }
        let filters = values.chunks(s * s).map(<[f64]>::to_vec).collect();
        Self::new(s, filters)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// BSIF code for every output position of a valid-mode convolution, row-major
/// over `(w-s+1) x (h-s+1)`. Bit `i` is set when filter `i` responds
/// strictly positively.
///
/// Each window is taken relative to its centre pixel; filters are zero-mean
/// so responses are unchanged and flat regions give exact zeros.
pub fn bsif_codes(image: &GrayImage, bank: &FilterBank) -> Result<Vec<u16>> {
    let (w, h) = (image.width(), image.height());
    let s = bank.size;
    if w < s || h < s {
        return Err(Error::Size(format!(
            "BSIF with {s}x{s} filters needs an image at least that large, got {w}x{h}"
        )));
    }
    // Convolution flips the kernel; store flipped copies once.
    let flipped: Vec<Vec<f64>> = bank
        .filters
        .iter()
        .map(|f| f.iter().rev().copied().collect())
        .collect();
    let px = image.pixels();
    let half = s / 2;
    let mut window = vec![0.0; s * s];
    let mut codes = Vec::with_capacity((w - s + 1) * (h - s + 1));
    for oy in 0..=h - s {
        for ox in 0..=w - s {
            let center = px[(oy + half) * w + ox + half];
            for j in 0..s {
                let row = &px[(oy + j) * w + ox..(oy + j) * w + ox + s];
                for (dst, src) in window[j * s..(j + 1) * s].iter_mut().zip(row) {
                    *dst = src - center;
                }
            }
            let mut code = 0u16;
            for (bit, f) in flipped.iter().enumerate() {
                let r: f64 = f.iter().zip(&window).map(|(a, b)| a * b).sum();
                if r > 0.0 {
                    code |= 1 << bit;
                }
            }
            codes.push(code);
        }
    }
    Ok(codes)
}

pub fn bsif_counts(image: &GrayImage, bank: &FilterBank) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; bank.bins()];
    for code in bsif_codes(image, bank)? {
        counts[code as usize] += 1;
    }
    Ok(counts)
}

/// Outcome of [`learn_bsif_filters`].
#[derive(Debug, Clone, PartialEq)]
pub struct BsifLearning {
    pub bank: FilterBank,
    /// False when ICA hit the iteration cap; `bank` is then the last iterate.
    pub converged: bool,
    pub iterations: usize,
}

/// Learns `k` filters from `s x s` patches (each a row-major slice of
/// length `s*s`): per-patch DC removal, PCA whitening to `k` dimensions,
/// then symmetric FastICA with a cubic nonlinearity.
pub fn learn_bsif_filters(patches: &[Vec<f64>], size: usize, k: usize, seed: u64) -> Result<BsifLearning> {
    let n = patches.len();
    let dim = size * size;
    if n < MIN_TRAINING_PATCHES {
        return Err(Error::Training(format!(
            "BSIF learning needs at least {MIN_TRAINING_PATCHES} patches, got {n}"
        )));
    }
    if k == 0 || k + 1 > dim || k > 16 {
        return Err(Error::Training(format!(
            "cannot learn {k} filters of size {size}x{size}"
        )));
    }
    if let Some(p) = patches.iter().find(|p| p.len() != dim) {
        return Err(Error::Dimension(format!(
            "patch has {} values, expected {dim}",
            p.len()
        )));
    }

    // Per-patch DC removal followed by ensemble centering.
    let mut data = DMatrix::<f64>::zeros(dim, n);
    for (j, p) in patches.iter().enumerate() {
        let mean = p.iter().sum::<f64>() / dim as f64;
        for (i, v) in p.iter().enumerate() {
            data[(i, j)] = v - mean;
        }
    }
    for i in 0..dim {
        let mean = data.row(i).sum() / n as f64;
        data.row_mut(i).add_scalar_mut(-mean);
    }
    let cov = (&data * data.transpose()) / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut whitening = DMatrix::<f64>::zeros(k, dim);
    for (r, &src) in order.iter().take(k).enumerate() {
        let lambda = eig.eigenvalues[src];
        if lambda <= 1e-12 {
            return Err(Error::Training(format!(
                "patch covariance has rank below {k}"
            )));
        }
        let mut v = eig.eigenvectors.column(src).clone_owned();
        let pivot = v.iter().copied().fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
        if pivot < 0.0 {
            v.neg_mut();
        }
        whitening.set_row(r, &(v.transpose() / lambda.sqrt()));
    }
    let z = &whitening * &data;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(&mut rng));
    let mut w = symmetric_decorrelation(&init);
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..ICA_MAX_ITERATIONS {
        iterations += 1;
        let y = &w * &z;
        let g = y.map(|v| v * v * v);
        let mean_dg: Vec<f64> = (0..k)
            .map(|r| y.row(r).iter().map(|v| 3.0 * v * v).sum::<f64>() / n as f64)
            .collect();
        let mut next = (&g * z.transpose()) / n as f64;
        for r in 0..k {
            for c in 0..k {
                next[(r, c)] -= mean_dg[r] * w[(r, c)];
            }
        }
        let next = symmetric_decorrelation(&next);
        let change = (&next * w.transpose())
            .diagonal()
            .iter()
            .map(|d| (1.0 - d.abs()).abs())
            .fold(0.0, f64::max);
        w = next;
        if change < ICA_TOLERANCE {
            converged = true;
            break;
        }
    }

    let rows = &w * &whitening;
    let filters = (0..k)
        .map(|r| {
            let mut f: Vec<f64> = rows.row(r).iter().copied().collect();
            let mean = f.iter().sum::<f64>() / dim as f64;
            f.iter_mut().for_each(|v| *v -= mean);
            f
        })
        .collect();
    Ok(BsifLearning {
        bank: FilterBank::new(size, filters)?,
        converged,
        iterations,
    })
}

/// `(W W^T)^{-1/2} W`.
fn symmetric_decorrelation(w: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(w * w.transpose());
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.max(1e-300).sqrt()));
    &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose() * w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bank() -> FilterBank {
        FilterBank::new(
            3,
            vec![
                vec![1.0, 0.0, -1.0, 1.0, 0.0, -1.0, 1.0, 0.0, -1.0],
                vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, -1.0, -1.0, -1.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_non_zero_mean_and_dependent_filters() {
        assert!(FilterBank::new(1, vec![vec![1.0]]).is_err());
        let f = vec![1.0, -1.0, 0.0, 0.0];
        assert!(FilterBank::new(2, vec![f.clone(), f.iter().map(|v| 2.0 * v).collect()]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let b = FilterBank::new(2, vec![vec![0.1, -0.3, 0.2 + 1e-17, 0.0 - 1e-17]]).unwrap();
        let back = FilterBank::from_text(&b.to_text()).unwrap();
        assert_eq!(b, back);
        assert_eq!(bank(), FilterBank::from_text(&bank().to_text()).unwrap());
    }

    #[test]
    fn text_parse_errors() {
        assert!(FilterBank::from_text("").is_err());
        assert!(FilterBank::from_text("BSIF 1 2\n0.5 -0.5 0").is_err());
        assert!(FilterBank::from_text("BSIF 1 2\n0.5 -0.5 x 0").is_err());
    }

    #[test]
    fn vertical_edge_sets_first_bit() {
        // Bright right half: convolution with [1 0 -1] (flipped to [-1 0 1])
        // responds positively.
        let img = GrayImage::from_fn(3, 3, |x, _| if x == 2 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(bsif_codes(&img, &bank()).unwrap(), vec![0b01]);
    }

    #[test]
    fn too_few_patches() {
        let patches = vec![vec![0.0; 9]; 10];
        assert!(matches!(learn_bsif_filters(&patches, 3, 2, 0), Err(Error::Training(_))));
    }
}
