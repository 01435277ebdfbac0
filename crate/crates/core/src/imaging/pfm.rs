//! Portable float map reader/writer (`Pf` grayscale, `PF` color).

use std::fs;
use std::path::Path;

use super::Image;
use crate::{Error, Result};

/// Reads a PFM file into an unnormalized image (rows top to bottom).
pub fn read_pfm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let decode_err = |m: &str| Error::Decode { path: path.to_path_buf(), message: m.to_string() };
    let mut pos = 0usize;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(decode_err("truncated PFM header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let channels = match tokens[0].as_str() {
        "Pf" => 1,
        "PF" => 3,
        _ => return Err(decode_err("missing PF/Pf magic")),
    };
    let width: usize = tokens[1].parse().map_err(|_| decode_err("bad width"))?;
    let height: usize = tokens[2].parse().map_err(|_| decode_err("bad height"))?;
    let scale: f32 = tokens[3].parse().map_err(|_| decode_err("bad scale"))?;
    let little = scale < 0.0;
    let n = width * height * channels;
    if bytes.len() < pos + 4 * n {
        return Err(decode_err("truncated PFM raster"));
    }
    let mut data = vec![0f32; n];
    for row in 0..height {
        // PFM stores the bottom row first
        let y = height - 1 - row;
        for x in 0..width {
            for c in 0..channels {
                let off = pos + 4 * ((row * width + x) * channels + c);
                let raw = [bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]];
                let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
                data[(c * height + y) * width + x] = v;
            }
        }
    }
    Image::new(width, height, channels, data).map_err(|e| decode_err(&e.to_string()))
}

/// Writes little-endian PFM.
pub fn write_pfm(image: &Image, path: &Path) -> Result<()> {
    let (w, h, ch) = (image.width(), image.height(), image.channels());
    let magic = if ch == 1 { "Pf" } else { "PF" };
    let mut out = format!("{magic}\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * w * h * ch);
    for row in 0..h {
        let y = h - 1 - row;
        for x in 0..w {
            for c in 0..ch {
                out.extend_from_slice(&image.get(x, y, c).to_le_bytes());
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
