//! Median filtering with selectable boundary handling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Odd-sized filter window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub rows: usize,
    pub cols: usize,
}

impl WindowSpec {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        let w = Self { rows, cols };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.rows % 2 == 0 || self.cols % 2 == 0 {
            return Err(Error::validation(format!(
                "window {}x{} must have odd positive dimensions",
                self.rows, self.cols
            )));
        }
        Ok(())
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { rows: 3, cols: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Out-of-image samples read as zero.
    ZeroPad,
    /// Out-of-image samples repeat the nearest edge pixel.
    #[default]
    ReplicateEdge,
}

/// Replaces each pixel with the median of its window, centre included.
pub fn median_filter(image: &GrayImage, window: WindowSpec, boundary: BoundaryPolicy) -> Result<GrayImage> {
    window.validate()?;
    let (w, h) = (image.width() as isize, image.height() as isize);
    let (hr, hc) = ((window.rows / 2) as isize, (window.cols / 2) as isize);
    let mid = window.rows * window.cols / 2;
    let mut buf = Vec::with_capacity(window.rows * window.cols);
    let mut out = Vec::with_capacity(image.len());
    for r in 0..h {
        for c in 0..w {
            buf.clear();
            for dr in -hr..=hr {
                for dc in -hc..=hc {
                    let (rr, cc) = (r + dr, c + dc);
                    let inside = rr >= 0 && rr < h && cc >= 0 && cc < w;
                    buf.push(match (inside, boundary) {
                        (true, _) => image.get(rr as usize, cc as usize),
                        (false, BoundaryPolicy::ZeroPad) => 0.0,
                        (false, BoundaryPolicy::ReplicateEdge) => image.get_clamped(rr, cc),
                    });
                }
            }
            let (_, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
            out.push(*m);
        }
    }
    Ok(GrayImage::from_raw(image.width(), image.height(), out))
}

/// Estimated noise `noisy - filtered`.
pub fn residual(noisy: &GrayImage, filtered: &GrayImage) -> Result<GrayImage> {
    if !noisy.same_shape(filtered) {
        return Err(Error::validation(format!(
            "residual of {}x{} and {}x{}",
            noisy.width(),
            noisy.height(),
            filtered.width(),
            filtered.height()
        )));
    }
    let px = noisy.pixels().iter().zip(filtered.pixels()).map(|(a, b)| a - b).collect();
    GrayImage::new(noisy.width(), noisy.height(), px)
}
