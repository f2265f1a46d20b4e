//! Uniform local binary patterns, 8 neighbours at radius 1.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::types::GrayImage;

pub const LBP_BINS: usize = 59;

/// Number of circular 0/1 transitions in an 8-bit pattern.
pub fn transitions(code: u8) -> u32 {
    (code ^ code.rotate_right(1)).count_ones()
}

/// Maps each 8-bit code to its bin: the 58 uniform codes (at most two
/// transitions) in ascending code order, everything else to bin 58.
pub fn uniform_table() -> &'static [u8; 256] {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [58u8; 256];
        let mut next = 0u8;
        for code in 0..=255u8 {
            if transitions(code) <= 2 {
                table[code as usize] = next;
                next += 1;
            }
        }
        debug_assert_eq!(next, 58);
        table
    })
}

/// Sample geometry for neighbour `i` at angle `2*pi*i/8`, with `+y` pointing
/// down the image: the top-left cell corner offset and the fractional
/// position inside that cell.
struct Sample {
    dx: isize,
    dy: isize,
    fx: f64,
    fy: f64,
}

fn samples() -> [Sample; 8] {
    let d = std::f64::consts::FRAC_1_SQRT_2;
    // (sx, sy) = (cos, -sin) of the neighbour angle.
    let offsets = [
        (1.0, 0.0),
        (d, -d),
        (0.0, -1.0),
        (-d, -d),
        (-1.0, 0.0),
        (-d, d),
        (0.0, 1.0),
        (d, d),
    ];
    offsets.map(|(sx, sy): (f64, f64)| {
        let x0 = sx.floor();
        let y0 = sy.floor();
        Sample {
            dx: x0 as isize,
            dy: y0 as isize,
            fx: sx - x0,
            fy: sy - y0,
        }
    })
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// LBP code at every interior pixel, row-major over `(w-2) x (h-2)`.
pub fn lbp_codes(image: &GrayImage) -> Result<Vec<u8>> {
    let (w, h) = (image.width(), image.height());
    if w < 3 || h < 3 {
        return Err(Error::Size(format!("LBP needs at least 3x3, got {w}x{h}")));
    }
    let samples = samples();
    let mut codes = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let center = image.get(x, y);
            let mut code = 0u8;
            for (i, s) in samples.iter().enumerate() {
                let x0 = (x as isize + s.dx) as usize;
                let y0 = (y as isize + s.dy) as usize;
                let v = if s.fx == 0.0 && s.fy == 0.0 {
                    image.get(x0, y0)
                } else {
                    // Diagonal samples fall strictly inside a cell whose
                    // corners are all within the 3x3 neighbourhood.
                    let top = lerp(image.get(x0, y0), image.get(x0 + 1, y0), s.fx);
                    let bottom = lerp(image.get(x0, y0 + 1), image.get(x0 + 1, y0 + 1), s.fx);
                    lerp(top, bottom, s.fy)
                };
                if v >= center {
                    code |= 1 << i;
                }
            }
            codes.push(code);
        }
    }
    Ok(codes)
}

/// Raw 59-bin uniform-pattern counts.
pub fn lbp_counts(image: &GrayImage) -> Result<Vec<u64>> {
    let table = uniform_table();
    let mut counts = vec![0u64; LBP_BINS];
    for code in lbp_codes(image)? {
        counts[table[code as usize] as usize] += 1;
    }
    Ok(counts)
}
