//! Grayscale PGM (P2 ASCII and P5 binary, 8-bit) reading and writing.
//!
//! Images are exchanged as [`Point`]s with `rows = height`,
//! `cols = width` and intensities scaled to `[0, 1]`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::operators::{Mask, Point};

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> std::result::Result<Header, String> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err("not a P2/P5 graymap".into()),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Whitespace and comments between header tokens.
        loop {
            match bytes.get(pos) {
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|c| c.is_ascii_digit()) {
            pos += 1;
        }
        let token = std::str::from_utf8(&bytes[start..pos]).unwrap_or("");
        *field = token
            .parse()
            .map_err(|_| format!("bad header field at byte {start}"))?;
    }
    // Exactly one whitespace byte separates the header from binary data.
    match bytes.get(pos) {
        Some(c) if c.is_ascii_whitespace() => pos += 1,
        _ => return Err("missing whitespace after maxval".into()),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err("zero image dimension".into());
    }
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval} (8-bit only)"));
    }
    Ok(Header {
        binary,
        width,
        height,
        maxval: maxval as u32,
        data_start: pos,
    })
}

/// Decodes a PGM byte buffer into a `[0, 1]`-scaled image.
pub fn parse_pgm(bytes: &[u8]) -> std::result::Result<Point, String> {
    let h = parse_header(bytes)?;
    let n = h.width * h.height;
    let samples: Vec<u32> = if h.binary {
        let data = bytes
            .get(h.data_start..h.data_start + n)
            .ok_or_else(|| format!("expected {n} pixel bytes"))?;
        data.iter().map(|&b| b as u32).collect()
    } else {
        let text = std::str::from_utf8(&bytes[h.data_start..]).map_err(|_| "non-ASCII raster")?;
        let values: std::result::Result<Vec<u32>, _> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_ascii_whitespace)
            .take(n)
            .map(str::parse)
            .collect();
        let values = values.map_err(|_| "bad ASCII pixel value")?;
        if values.len() != n {
            return Err(format!("expected {n} pixels, found {}", values.len()));
        }
        values
    };
    if let Some(v) = samples.iter().find(|&&v| v > h.maxval) {
        return Err(format!("pixel {v} exceeds maxval {}", h.maxval));
    }
    let scale = h.maxval as f64;
    Ok(Point::from_fn(h.height, h.width, |i, j| {
        samples[i * h.width + j] as f64 / scale
    }))
}

pub fn read_pgm(path: &Path) -> Result<Point> {
    let bytes = fs::read(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_pgm(&bytes).map_err(|reason| Error::Image {
        path: path.to_path_buf(),
        reason,
    })
}

/// Quantizes to 8 bits: values are clamped to `[0, 1]` and rounded.
pub fn encode_pgm(image: &Point) -> Vec<u8> {
    let (rows, cols) = image.shape();
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.reserve(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let v = image[(i, j)];
            let v = if v.is_finite() {
                v.clamp(0.0, 1.0)
            } else {
                0.0
            };
            out.push((v * 255.0).round() as u8);
        }
    }
    out
}

pub fn write_pgm(path: &Path, image: &Point) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_pgm(image))?;
    Ok(())
}

/// Observed pixels are 255, missing ones 0.
pub fn write_mask_pgm(path: &Path, mask: &Mask) -> Result<()> {
    let (rows, cols) = mask.shape();
    let img = Point::from_fn(
        rows,
        cols,
        |i, j| if mask.is_observed(i, j) { 1.0 } else { 0.0 },
    );
    write_pgm(path, &img)
}
