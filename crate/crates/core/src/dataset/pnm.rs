//! Binary graymap (P5) images and little-endian float maps for debugging.

use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{GrayImage, NormalMap, MAX_SIDE};

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    /// Raw text of the last header field (maxval or scale).
    last: String,
    data_start: usize,
}

fn parse_header(bytes: &[u8], context: &str) -> Result<Header> {
    if bytes.len() < 2 {
        return Err(Error::parse(context, "file too short for a header"));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = Vec::with_capacity(3);
    while fields.len() < 3 {
        // Skip whitespace and comments.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::parse(context, "truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            pos += 1;
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(Error::parse(context, "truncated header"));
    }
    let dim = |s: &str| -> Result<usize> {
        match s.parse::<usize>() {
            Ok(v) if v > 0 && v <= MAX_SIDE => Ok(v),
            _ => Err(Error::parse(context, format!("invalid dimension {s:?}"))),
        }
    };
    Ok(Header {
        magic,
        width: dim(&fields[0])?,
        height: dim(&fields[1])?,
        last: fields[2].clone(),
        data_start: pos + 1,
    })
}

/// Reads an 8-bit binary graymap (`P5`, maxval at most 255).
pub fn read_image(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let context = path.display().to_string();
    let header = parse_header(&bytes, &context)?;
    if &header.magic != b"P5" {
        return Err(Error::parse(&context, "unsupported format (expected binary graymap P5)"));
    }
    let maxval: u32 = match header.last.parse() {
        Ok(v) if (1..=255).contains(&v) => v,
        _ => return Err(Error::parse(&context, format!("unsupported maxval {:?}", header.last))),
    };
    let n = header.width * header.height;
    let raster = &bytes[header.data_start..];
    if raster.len() < n {
        return Err(Error::parse(&context, format!("truncated raster: {} of {n} bytes", raster.len())));
    }
    let pixels = raster[..n]
        .iter()
        .map(|&b| (b as f64 / maxval as f64).min(1.0))
        .collect();
    GrayImage::new(header.width, header.height, pixels)
}

/// Writes an 8-bit binary graymap; pixels are quantized to `k / 255`.
pub fn write_image(image: &GrayImage, path: &Path) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.to_bytes());
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes a normal map as a 3-channel little-endian float map (`PF`,
/// negative scale), bottom row first as the format prescribes.
pub fn write_pfm_normals(map: &NormalMap, path: &Path) -> Result<()> {
    let (w, h) = (map.width(), map.height());
    let mut out = format!("PF\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 12);
    for y in (0..h).rev() {
        for x in 0..w {
            for c in map.get(x, y) {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a little-endian float map; returns `(width, height, channels,
/// values)` with rows top first.
pub fn read_pfm(path: &Path) -> Result<(usize, usize, usize, Vec<f32>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let context = path.display().to_string();
    let header = parse_header(&bytes, &context)?;
    let channels = match &header.magic {
        b"PF" => 3,
        b"Pf" => 1,
        _ => return Err(Error::parse(&context, "unsupported format (expected float map)")),
    };
    match header.last.parse::<f64>() {
        Ok(s) if s < 0.0 => {}
        _ => return Err(Error::parse(&context, "only little-endian float maps are supported")),
    }
    let (w, h) = (header.width, header.height);
    let row = w * channels;
    let raster = &bytes[header.data_start..];
    if raster.len() < row * h * 4 {
        return Err(Error::parse(&context, "truncated raster"));
    }
    let mut values = vec![0f32; row * h];
    for (i, chunk) in raster[..row * h * 4].chunks_exact(4).enumerate() {
        let (y, rest) = (i / row, i % row);
        values[(h - 1 - y) * row + rest] = f32::from_le_bytes(chunk.try_into().expect("chunk of 4"));
    }
    Ok((w, h, channels, values))
}
