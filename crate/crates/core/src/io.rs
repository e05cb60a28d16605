//! Binary PGM (P5) frame I/O and 8-bit PNG debug dumps.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{round_half_up, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn maxval(self) -> u32 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(Error::validation(format!("unsupported bit depth {other}"))),
        }
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn format_err(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.format_err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format {
                offset: start,
                reason: format!("{what} out of range"),
            })
    }
}

/// Decodes an in-memory binary PGM.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(cur.format_err("expected magic \"P5\""));
    }
    cur.pos = 2;
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(cur.format_err("zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(cur.format_err(format!("maxval {maxval} not in 1..=65535")));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(cur.format_err("expected single whitespace after maxval")),
    }

    let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
    let expected = width * height * bytes_per_sample;
    let data = &bytes[cur.pos..];
    if data.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: data.len(),
        });
    }
    let pixels: Vec<f64> = if bytes_per_sample == 1 {
        data[..expected].iter().map(|&b| b as f64).collect()
    } else {
        data[..expected]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64)
            .collect()
    };
    GrayImage::new(width, height, pixels)
}

/// Encodes an integer-valued image as binary PGM.
pub fn encode_pgm(image: &GrayImage, depth: BitDepth) -> Result<Vec<u8>> {
    let max = depth.maxval();
    let width = image.width();
    let mut out = format!("P5\n{} {}\n{}\n", width, image.height(), max).into_bytes();
    for (i, &p) in image.pixels().iter().enumerate() {
        let v = round_half_up(p);
        if !v.is_finite() || v < 0.0 || v > max as f64 {
            return Err(Error::Range {
                row: i / width,
                col: i % width,
                value: p,
                max,
            });
        }
        match depth {
            BitDepth::Eight => out.push(v as u8),
            BitDepth::Sixteen => out.extend_from_slice(&(v as u16).to_be_bytes()),
        }
    }
    Ok(out)
}

pub fn read_frame(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

/// Writes `image` as a binary PGM. Intensities are rounded half-up and must
/// fit the chosen depth.
pub fn write_frame(image: &GrayImage, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(image, depth)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes an 8-bit grayscale PNG. Pixels are rounded and clamped to `[0, 255]`.
pub fn write_png(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), image.width() as u32, image.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let data: Vec<u8> = image
        .pixels()
        .iter()
        .map(|&p| round_half_up(p).clamp(0.0, 255.0) as u8)
        .collect();
    let to_io = |e: png::EncodingError| Error::io(path, std::io::Error::other(e));
    let mut writer = encoder.write_header().map_err(to_io)?;
    writer.write_image_data(&data).map_err(to_io)?;
    writer.finish().map_err(to_io)?;
    Ok(())
}

/// Writes `bytes` to `path` through a temporary sibling and a rename, so
/// readers never observe a partially written file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
