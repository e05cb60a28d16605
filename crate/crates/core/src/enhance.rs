//! Global histogram equalization of 8-bit images.

use crate::error::Result;
use crate::image::{GrayImage, LEVELS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub counts: [u64; LEVELS],
    pub total: u64,
}

impl Histogram {
    /// Normalized frequency `n_k / n`.
    pub fn probability(&self, level: usize) -> f64 {
        self.counts[level] as f64 / self.total as f64
    }

    /// Number of pixels at or below `level`.
    pub fn cumulative(&self, level: usize) -> u64 {
        self.counts[..=level].iter().sum()
    }

    /// Lookup table `T(k) = round_half_up(255 * cdf(k))`, in exact integer
    /// arithmetic.
    pub fn equalization_map(&self) -> [u8; LEVELS] {
        let mut map = [0u8; LEVELS];
        let n = self.total as u128;
        let mut cum = 0u128;
        for (k, slot) in map.iter_mut().enumerate() {
            cum += self.counts[k] as u128;
            // floor((2 * 255 * cum + n) / (2n))
            *slot = ((2 * (LEVELS as u128 - 1) * cum + n) / (2 * n)) as u8;
        }
        map
    }
}

/// Counts pixels per gray level. Pixels must be integers in `[0, 255]`.
pub fn histogram(image: &GrayImage) -> Result<Histogram> {
    image.check_integer_range((LEVELS - 1) as u32)?;
    let mut counts = [0u64; LEVELS];
    for &p in image.pixels() {
        counts[p as usize] += 1;
    }
    Ok(Histogram {
        counts,
        total: image.len() as u64,
    })
}

pub fn equalize(image: &GrayImage) -> Result<GrayImage> {
    let map = histogram(image)?.equalization_map();
    let px = image.pixels().iter().map(|&p| map[p as usize] as f64).collect();
    Ok(GrayImage::from_raw(image.width(), image.height(), px))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_level_counts() {
        let h = histogram(&GrayImage::new(2, 2, vec![0.0, 0.0, 255.0, 255.0]).unwrap()).unwrap();
        assert_eq!((h.counts[0], h.counts[255], h.total), (2, 2, 4));
        assert_eq!(h.counts.iter().sum::<u64>(), 4);
        let c = histogram(&GrayImage::filled(5, 2, 7.0)).unwrap();
        assert_eq!(c.counts[7], 10);
        assert!((0..LEVELS).map(|k| c.probability(k)).sum::<f64>() == 1.0);
    }

    #[test]
    fn rejects_unquantized() {
        assert!(histogram(&GrayImage::new(1, 1, vec![1.5]).unwrap()).is_err());
        assert!(histogram(&GrayImage::new(1, 1, vec![256.0]).unwrap()).is_err());
        assert!(equalize(&GrayImage::new(1, 1, vec![-1.0]).unwrap()).is_err());
    }

    #[test]
    fn constant_maps_to_top() {
        let out = equalize(&GrayImage::filled(3, 3, 40.0)).unwrap();
        assert!(out.pixels().iter().all(|&p| p == 255.0));
    }

    #[test]
    fn half_and_half() {
        let out = equalize(&GrayImage::new(2, 2, vec![0.0, 255.0, 0.0, 255.0]).unwrap()).unwrap();
        // 255 * 0.5 = 127.5 rounds up
        assert_eq!(out.pixels(), &[128.0, 255.0, 128.0, 255.0]);
    }

    #[test]
    fn narrow_histogram_gains_spread() {
        let img = GrayImage::from_fn(16, 16, |r, c| 100.0 + ((r * 7 + c * 3) % 20) as f64).unwrap();
        let out = equalize(&img).unwrap();
        assert!(out.std_dev() > img.std_dev());
    }

    proptest! {
        #[test]
        fn monotone_and_in_range(px in prop::collection::vec(0u8..=255, 1..200)) {
            let img = GrayImage::new(px.len(), 1, px.iter().map(|&v| v as f64).collect()).unwrap();
            let map = histogram(&img).unwrap().equalization_map();
            prop_assert!(map.windows(2).all(|w| w[0] <= w[1]));
            let out = equalize(&img).unwrap();
            prop_assert_eq!(histogram(&out).unwrap().total, img.len() as u64);
            for i in 0..px.len() {
                for j in 0..px.len() {
                    if px[i] < px[j] {
                        prop_assert!(out.pixels()[i] <= out.pixels()[j]);
                    }
                }
            }
        }

        #[test]
        fn repeated_equalization_drifts_at_most_one_level(px in prop::collection::vec(0u8..=255, 1..300)) {
            let img = GrayImage::new(px.len(), 1, px.iter().map(|&v| v as f64).collect()).unwrap();
            let once = equalize(&img).unwrap();
            let twice = equalize(&once).unwrap();
            for (a, b) in once.pixels().iter().zip(twice.pixels()) {
                prop_assert!((a - b).abs() <= 1.0);
            }
        }
    }
}
