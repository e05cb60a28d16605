//! Watershed segmentation: regional minima, h-minima suppression and
//! flooding with dam construction.
//!
//! Flooding admits pixels in nondecreasing elevation order; ties resolve in
//! FIFO insertion order, with the queue seeded from the minima in basin order
//! and neighbours visited in raster offset order. A pixel touching exactly one
//! basin joins it; a pixel touching two or more basins, or none, becomes a
//! dam (label 0).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{quantize, GrayImage};

pub const DAM: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(format!("connectivity must be 4 or 8, got {other}")),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

const OFFSETS_8: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
const OFFSETS_4: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &OFFSETS_4,
            Connectivity::Eight => &OFFSETS_8,
        }
    }
}

/// Calls `f` for each in-bounds neighbour of pixel `idx`, in raster offset order.
#[inline]
pub fn for_each_neighbor(width: usize, height: usize, idx: usize, conn: Connectivity, mut f: impl FnMut(usize)) {
    let (r, c) = ((idx / width) as isize, (idx % width) as isize);
    for &(dr, dc) in conn.offsets() {
        let (rr, cc) = (r + dr, c + dc);
        if rr >= 0 && cc >= 0 && (rr as usize) < height && (cc as usize) < width {
            f(rr as usize * width + cc as usize);
        }
    }
}

/// Integer elevation map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopographicSurface {
    width: usize,
    height: usize,
    values: Vec<i32>,
}

impl TopographicSurface {
    pub fn new(width: usize, height: usize, values: Vec<i32>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::validation(format!(
                "surface {width}x{height} with {} values",
                values.len()
            )));
        }
        Ok(Self { width, height, values })
    }

    /// Interprets an integer-valued image as elevation.
    pub fn from_image(image: &GrayImage) -> Result<Self> {
        if !image.is_integer_valued() {
            return Err(Error::validation("topographic surface needs integer intensities"));
        }
        Self::new(image.width(), image.height(), image.pixels().iter().map(|&p| p as i32).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn neighbors(&self, idx: usize, conn: Connectivity, f: impl FnMut(usize)) {
        for_each_neighbor(self.width, self.height, idx, conn, f)
    }
}

/// Per-pixel basin labels; `0` marks dams, basins are `1..=basin_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub basin_count: usize,
}

impl SegmentMap {
    pub fn label(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn dam_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == DAM).count()
    }

    /// Gray rendering: dams black, basins spread over `[32, 255]`.
    pub fn to_image(&self) -> GrayImage {
        let px = self
            .labels
            .iter()
            .map(|&l| {
                if l == DAM {
                    0.0
                } else {
                    (32 + (l.wrapping_mul(2654435761) >> 8) % 224) as f64
                }
            })
            .collect();
        GrayImage::from_raw(self.width, self.height, px)
    }
}

/// Maximal equal-valued connected plateaus with no strictly lower neighbour.
///
/// Sets are ordered by their first pixel in raster order; pixels within a
/// set are ascending.
pub fn regional_minima(surface: &TopographicSurface, conn: Connectivity) -> Vec<Vec<usize>> {
    let n = surface.len();
    let v = &surface.values;
    let mut seen = vec![false; n];
    let mut minima = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut plateau = Vec::new();
        let mut is_min = true;
        while let Some(p) = queue.pop_front() {
            plateau.push(p);
            surface.neighbors(p, conn, |q| {
                if v[q] < v[p] {
                    is_min = false;
                } else if v[q] == v[p] && !seen[q] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            });
        }
        if is_min {
            plateau.sort_unstable();
            minima.push(plateau);
        }
    }
    minima
}

fn validate_minima(surface: &TopographicSurface, minima: &[Vec<usize>], conn: Connectivity) -> Result<()> {
    let n = surface.len();
    let mut owner = vec![usize::MAX; n];
    for (b, set) in minima.iter().enumerate() {
        let Some(&first) = set.first() else {
            return Err(Error::validation(format!("minimum {b} is empty")));
        };
        for &p in set {
            if p >= n {
                return Err(Error::validation(format!("minimum {b} has pixel {p} outside the surface")));
            }
            if owner[p] != usize::MAX {
                return Err(Error::validation(format!("pixel {p} belongs to two minima")));
            }
            if surface.values[p] != surface.values[first] {
                return Err(Error::validation(format!("minimum {b} is not a plateau")));
            }
            owner[p] = b;
        }
        // connectivity within the set
        let mut reached = 1;
        let mut seen = vec![first];
        let mut visited = std::collections::HashSet::from([first]);
        while let Some(p) = seen.pop() {
            surface.neighbors(p, conn, |q| {
                if owner[q] == b && visited.insert(q) {
                    reached += 1;
                    seen.push(q);
                }
            });
        }
        if reached != set.len() {
            return Err(Error::validation(format!("minimum {b} is not connected")));
        }
    }
    Ok(())
}

const UNSET: u32 = u32::MAX;

/// Floods `surface` from `minima`; basin `i + 1` grows from `minima[i]`.
pub fn flood(surface: &TopographicSurface, minima: &[Vec<usize>], conn: Connectivity) -> Result<SegmentMap> {
    validate_minima(surface, minima, conn)?;
    let n = surface.len();
    let v = &surface.values;
    let mut labels = vec![UNSET; n];
    let mut queued = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;

    for (b, set) in minima.iter().enumerate() {
        for &p in set {
            labels[p] = b as u32 + 1;
        }
    }
    let mut push = |q: usize, labels: &[u32], queued: &mut [bool], heap: &mut BinaryHeap<_>| {
        if labels[q] == UNSET && !queued[q] {
            queued[q] = true;
            heap.push(Reverse((v[q], seq, q)));
            seq += 1;
        }
    };
    for set in minima {
        for &p in set {
            surface.neighbors(p, conn, |q| push(q, &labels, &mut queued, &mut heap));
        }
    }

    while let Some(Reverse((_, _, p))) = heap.pop() {
        let mut basin = UNSET;
        let mut conflict = false;
        surface.neighbors(p, conn, |q| {
            let l = labels[q];
            if l != UNSET && l != DAM {
                if basin == UNSET {
                    basin = l;
                } else if basin != l {
                    conflict = true;
                }
            }
        });
        labels[p] = if conflict || basin == UNSET { DAM } else { basin };
        surface.neighbors(p, conn, |q| push(q, &labels, &mut queued, &mut heap));
    }

    // Pixels unreachable from any minimum only exist when `minima` is empty.
    for l in labels.iter_mut().filter(|l| **l == UNSET) {
        *l = DAM;
    }
    Ok(SegmentMap {
        width: surface.width,
        height: surface.height,
        labels,
        basin_count: minima.len(),
    })
}

/// Fills every regional minimum shallower than `h` (morphological
/// reconstruction by erosion of `f + h` above `f`).
pub fn suppress_shallow_minima(surface: &TopographicSurface, h: u32, conn: Connectivity) -> TopographicSurface {
    if h == 0 {
        return surface.clone();
    }
    let (w, ht) = (surface.width, surface.height);
    let f = &surface.values;
    let mut g: Vec<i32> = f.iter().map(|&x| x + h as i32).collect();
    let offsets = conn.offsets();
    let half = offsets.len() / 2;
    let (causal, anticausal) = offsets.split_at(half);

    let sweep = |g: &mut Vec<i32>, forward: bool| -> bool {
        let mut changed = false;
        let order: Box<dyn Iterator<Item = usize>> = if forward {
            Box::new(0..w * ht)
        } else {
            Box::new((0..w * ht).rev())
        };
        let nb = if forward { causal } else { anticausal };
        for p in order {
            let (r, c) = ((p / w) as isize, (p % w) as isize);
            let mut m = g[p];
            for &(dr, dc) in nb {
                let (rr, cc) = (r + dr, c + dc);
                if rr >= 0 && cc >= 0 && (rr as usize) < ht && (cc as usize) < w {
                    m = m.min(g[rr as usize * w + cc as usize]);
                }
            }
            let m = m.max(f[p]);
            if m != g[p] {
                g[p] = m;
                changed = true;
            }
        }
        changed
    };
    loop {
        let a = sweep(&mut g, true);
        let b = sweep(&mut g, false);
        if !a && !b {
            break;
        }
    }
    TopographicSurface {
        width: w,
        height: ht,
        values: g,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreTransform {
    #[default]
    Direct,
    GradientMagnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentOptions {
    pub connectivity: Connectivity,
    pub pre_transform: PreTransform,
    /// Minimum depth a regional minimum needs to keep its own basin.
    pub h: u32,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            connectivity: Connectivity::Eight,
            pre_transform: PreTransform::Direct,
            h: 4,
        }
    }
}

/// Gradient magnitude by central differences, one-sided at the borders.
pub fn gradient_magnitude(image: &GrayImage) -> GrayImage {
    let (w, h) = (image.width() as isize, image.height() as isize);
    let d = |a: isize, n: isize, at: &dyn Fn(isize) -> f64| -> f64 {
        if n == 1 {
            0.0
        } else if a == 0 {
            at(1) - at(0)
        } else if a == n - 1 {
            at(n - 1) - at(n - 2)
        } else {
            (at(a + 1) - at(a - 1)) / 2.0
        }
    };
    let mut out = Vec::with_capacity(image.len());
    for r in 0..h {
        for c in 0..w {
            let gx = d(c, w, &|k| image.get(r as usize, k as usize));
            let gy = d(r, h, &|k| image.get(k as usize, c as usize));
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    GrayImage::from_raw(image.width(), image.height(), out)
}

/// Surface actually flooded by [`segment`], after quantization, optional
/// gradient and minima suppression.
pub fn prepare_surface(image: &GrayImage, options: &SegmentOptions) -> TopographicSurface {
    let mut q = quantize(image);
    if options.pre_transform == PreTransform::GradientMagnitude {
        q = quantize(&gradient_magnitude(&q));
    }
    let surface = TopographicSurface::from_image(&q).expect("quantized image is integer valued");
    suppress_shallow_minima(&surface, options.h, options.connectivity)
}

pub fn segment(image: &GrayImage, options: &SegmentOptions) -> SegmentMap {
    let surface = prepare_surface(image, options);
    let minima = regional_minima(&surface, options.connectivity);
    flood(&surface, &minima, options.connectivity).expect("regional minima are valid seeds")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surf(rows: &[&[i32]]) -> TopographicSurface {
        TopographicSurface::new(rows[0].len(), rows.len(), rows.concat()).unwrap()
    }

    #[test]
    fn ramp_has_one_minimum() {
        let s = surf(&[&[0, 1, 2, 3]]);
        assert_eq!(regional_minima(&s, Connectivity::Eight), vec![vec![0]]);
    }

    #[test]
    fn constant_is_one_plateau() {
        let s = surf(&[&[5, 5, 5], &[5, 5, 5]]);
        assert_eq!(regional_minima(&s, Connectivity::Four), vec![(0..6).collect::<Vec<_>>()]);
        let map = flood(&s, &regional_minima(&s, Connectivity::Four), Connectivity::Four).unwrap();
        assert_eq!(map.basin_count, 1);
        assert_eq!(map.dam_count(), 0);
    }

    #[test]
    fn valley_row() {
        let s = surf(&[&[0, 1, 0]]);
        let minima = regional_minima(&s, Connectivity::Eight);
        assert_eq!(minima, vec![vec![0], vec![2]]);
        let map = flood(&s, &minima, Connectivity::Eight).unwrap();
        assert_eq!(map.labels, vec![1, DAM, 2]);
    }

    #[test]
    fn ridge_column_becomes_dam() {
        let s = surf(&[&[0, 5, 0], &[0, 5, 0], &[0, 5, 0]]);
        for conn in [Connectivity::Four, Connectivity::Eight] {
            let map = flood(&s, &regional_minima(&s, conn), conn).unwrap();
            assert_eq!(map.basin_count, 2);
            assert_eq!(map.labels, vec![1, 0, 2, 1, 0, 2, 1, 0, 2]);
        }
    }

    #[test]
    fn invalid_minima_rejected() {
        let s = surf(&[&[0, 1, 0]]);
        assert!(flood(&s, &[vec![0, 1]], Connectivity::Eight).is_err());
        assert!(flood(&s, &[vec![0, 2]], Connectivity::Eight).is_err());
        assert!(flood(&s, &[vec![0], vec![0]], Connectivity::Eight).is_err());
        assert!(flood(&s, &[vec![]], Connectivity::Eight).is_err());
        assert!(flood(&s, &[vec![7]], Connectivity::Eight).is_err());
    }

    #[test]
    fn shallow_minimum_is_filled() {
        // columns 0 and 2 are separated by a pass only 2 above them
        let s = surf(&[&[3, 5, 3, 5, 8, 2, 8]]);
        assert_eq!(regional_minima(&s, Connectivity::Eight).len(), 3);
        let filled = suppress_shallow_minima(&s, 3, Connectivity::Eight);
        assert_eq!(filled.values(), &[6, 6, 6, 6, 8, 5, 8]);
        assert_eq!(regional_minima(&filled, Connectivity::Eight).len(), 2);
        assert_eq!(suppress_shallow_minima(&s, 0, Connectivity::Eight), s);
    }

    #[test]
    fn segment_constant_image() {
        let map = segment(&GrayImage::filled(8, 6, 3.0), &SegmentOptions { h: 0, ..Default::default() });
        assert_eq!(map.basin_count, 1);
        assert_eq!(map.dam_count(), 0);
    }

    #[test]
    fn connectivity_serde() {
        assert_eq!(Connectivity::try_from(4).unwrap(), Connectivity::Four);
        assert!(Connectivity::try_from(6).is_err());
    }
}
