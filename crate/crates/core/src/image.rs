//! Grayscale image type shared by every pipeline stage.
//!
//! Pixels are stored row-major as `f64`. Raw frames carry sensor counts,
//! quantized images carry integers in `[0, 255]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of gray levels of a quantized image.
pub const LEVELS: usize = 256;

/// Round to the nearest integer, halves rounding up.
#[inline]
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelCoord {
    pub row: usize,
    pub col: usize,
}

impl PixelCoord {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Builds an image from row-major pixels, checking shape and finiteness.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::validation(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !p.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite intensity at (row {}, col {})",
                i / width,
                i % width
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Constant image. Panics on zero dimensions or a non-finite value.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("valid constant image")
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels)
    }

    /// Builds an image from nested rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != width) {
            return Err(Error::validation("ragged rows"));
        }
        Self::new(width, height, rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect())
    }

    // Internal constructor for stage outputs whose finiteness follows from
    // finite inputs.
    pub(crate) fn from_raw(width: usize, height: usize, pixels: Vec<f64>) -> Self {
        debug_assert_eq!(pixels.len(), width * height);
        debug_assert!(pixels.iter().all(|p| p.is_finite()));
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn at(&self, p: PixelCoord) -> f64 {
        self.get(p.row, p.col)
    }

    /// Returns the pixel at `(row, col)` with indices clamped into the image.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.get(r, c)
    }

    pub fn same_shape(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GrayImage> {
        GrayImage::new(self.width, self.height, self.pixels.iter().map(|&p| f(p)).collect())
    }

    pub fn transpose(&self) -> GrayImage {
        let mut out = Vec::with_capacity(self.pixels.len());
        for c in 0..self.width {
            for r in 0..self.height {
                out.push(self.get(r, c));
            }
        }
        GrayImage::from_raw(self.height, self.width, out)
    }

    pub fn min(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    /// Population standard deviation of the intensities.
    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        let var = self.pixels.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / self.pixels.len() as f64;
        var.sqrt()
    }

    pub fn is_integer_valued(&self) -> bool {
        self.pixels.iter().all(|p| p.fract() == 0.0)
    }

    /// Checks that every pixel is an integer in `[0, max]`.
    pub(crate) fn check_integer_range(&self, max: u32) -> Result<()> {
        for (i, &p) in self.pixels.iter().enumerate() {
            if p.fract() != 0.0 || p < 0.0 || p > max as f64 {
                return Err(Error::Range {
                    row: i / self.width,
                    col: i % self.width,
                    value: p,
                    max,
                });
            }
        }
        Ok(())
    }
}

/// Maps an arbitrary real image onto integers in `[0, 255]` by min–max
/// normalization and round-half-up. A constant image maps to all zeros.
pub fn quantize(image: &GrayImage) -> GrayImage {
    let (lo, hi) = (image.min(), image.max());
    let span = hi - lo;
    let top = (LEVELS - 1) as f64;
    let pixels = if span > 0.0 {
        image
            .pixels()
            .iter()
            .map(|&p| round_half_up(top * (p - lo) / span).clamp(0.0, top))
            .collect()
    } else {
        vec![0.0; image.len()]
    };
    GrayImage::from_raw(image.width(), image.height(), pixels)
}
