//! Region shape features, the mine/no-mine decision and confusion-matrix
//! bookkeeping.
//!
//! A buried disk shows up as a compact, near-circular basin whose area
//! matches the disk size predicted from altitude. Each basin is scored as
//! `circularity * area_plausibility`; the best basin decides the verdict.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::CameraModel;
use crate::watershed::{SegmentMap, DAM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionFeatures {
    pub label: u32,
    pub area_px: usize,
    /// Length of the region outline traced through pixel-centre midpoints.
    pub perimeter_px: f64,
    /// `4 pi A / P^2` over the traced outline; 1 for a disk, never above 1.
    pub circularity: f64,
    /// `(row, col)`.
    pub centroid: (f64, f64),
    pub bbox_aspect: f64,
}

#[derive(Default, Clone)]
struct Accum {
    area: usize,
    outline_area: f64,
    perimeter: f64,
    sum_r: f64,
    sum_c: f64,
    min_r: usize,
    max_r: usize,
    min_c: usize,
    max_c: usize,
}

/// Outline length and enclosed area contributed by one 2x2 cell, given which
/// corners `[tl, tr, bl, br]` belong to the region. Diagonal pairs are
/// treated as connected.
fn cell_contribution(inside: [bool; 4]) -> (f64, f64) {
    let count = inside.iter().filter(|&&b| b).count();
    match count {
        0 => (0.0, 0.0),
        1 => (FRAC_1_SQRT_2, 0.125),
        3 => (FRAC_1_SQRT_2, 0.875),
        4 => (0.0, 1.0),
        _ => {
            let [tl, _, _, br] = inside;
            if tl == br {
                (SQRT_2, 0.75)
            } else {
                (1.0, 0.5)
            }
        }
    }
}

/// One feature record per basin, ordered by label. Dams are excluded.
pub fn region_features(map: &SegmentMap) -> Vec<RegionFeatures> {
    let (w, h) = (map.width, map.height);
    let mut acc: Vec<Accum> = vec![
        Accum {
            min_r: usize::MAX,
            min_c: usize::MAX,
            ..Default::default()
        };
        map.basin_count + 1
    ];
    for r in 0..h {
        for c in 0..w {
            let l = map.labels[r * w + c] as usize;
            if l == DAM as usize {
                continue;
            }
            let a = &mut acc[l];
            a.area += 1;
            a.sum_r += r as f64;
            a.sum_c += c as f64;
            a.min_r = a.min_r.min(r);
            a.max_r = a.max_r.max(r);
            a.min_c = a.min_c.min(c);
            a.max_c = a.max_c.max(c);
        }
    }

    let label_at = |r: isize, c: isize| -> u32 {
        if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
            DAM
        } else {
            map.labels[r as usize * w + c as usize]
        }
    };
    for r in -1..h as isize {
        for c in -1..w as isize {
            let corners = [label_at(r, c), label_at(r, c + 1), label_at(r + 1, c), label_at(r + 1, c + 1)];
            for (i, &l) in corners.iter().enumerate() {
                if l == DAM || corners[..i].contains(&l) {
                    continue;
                }
                let (p, a) = cell_contribution(corners.map(|x| x == l));
                acc[l as usize].perimeter += p;
                acc[l as usize].outline_area += a;
            }
        }
    }

    acc.into_iter()
        .enumerate()
        .skip(1)
        .filter(|(_, a)| a.area > 0)
        .map(|(label, a)| {
            let (bh, bw) = ((a.max_r - a.min_r + 1) as f64, (a.max_c - a.min_c + 1) as f64);
            RegionFeatures {
                label: label as u32,
                area_px: a.area,
                perimeter_px: a.perimeter,
                circularity: 4.0 * PI * a.outline_area / (a.perimeter * a.perimeter),
                centroid: (a.sum_r / a.area as f64, a.sum_c / a.area as f64),
                bbox_aspect: bh.max(bw) / bh.min(bw),
            }
        })
        .collect()
}

/// Ground sample distance in metres per native pixel.
pub fn ground_sample_distance(altitude_m: f64, camera: &CameraModel) -> f64 {
    2.0 * altitude_m * (camera.hfov_deg.to_radians() / 2.0).tan() / camera.native_width as f64
}

/// Expected disk area in pixels of a `target` (width, height) image
/// upscaled from the native frame.
pub fn expected_mine_area(altitude_m: f64, camera: &CameraModel, radius_m: f64, target: (usize, usize)) -> Result<f64> {
    if !(altitude_m > 0.0) {
        return Err(Error::validation(format!("altitude must be positive, got {altitude_m}")));
    }
    let gsd = ground_sample_distance(altitude_m, camera);
    let native = PI * (radius_m / gsd).powi(2);
    let sx = target.0 as f64 / camera.native_width as f64;
    let sy = target.1 as f64 / camera.native_height as f64;
    Ok(native * sx * sy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub circularity_min: f64,
    /// Accepted area as multiples `[lo, hi]` of the expected area.
    pub area_band: [f64; 2],
    pub score_threshold: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            circularity_min: 0.6,
            area_band: [0.3, 3.0],
            score_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    MinePresent,
    NoMine,
}

impl Verdict {
    pub fn is_positive(self) -> bool {
        self == Verdict::MinePresent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub verdict: Verdict,
    pub score: f64,
    pub best_region: Option<RegionFeatures>,
}

pub fn region_score(region: &RegionFeatures, expected_area: f64, thresholds: &Thresholds) -> f64 {
    let ratio = region.area_px as f64 / expected_area;
    let area = (1.0 - ratio.ln().abs() / thresholds.area_band[1].ln()).clamp(0.0, 1.0);
    region.circularity.clamp(0.0, 1.0) * area
}

pub fn decide(features: &[RegionFeatures], expected_area: f64, thresholds: &Thresholds) -> Decision {
    let mut best: Option<(f64, &RegionFeatures)> = None;
    for f in features {
        let s = region_score(f, expected_area, thresholds);
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, f));
        }
    }
    let Some((score, region)) = best else {
        return Decision {
            verdict: Verdict::NoMine,
            score: 0.0,
            best_region: None,
        };
    };
    let ratio = region.area_px as f64 / expected_area;
    let [lo, hi] = thresholds.area_band;
    let present = score >= thresholds.score_threshold
        && region.circularity >= thresholds.circularity_min
        && (lo..=hi).contains(&ratio);
    Decision {
        verdict: if present { Verdict::MinePresent } else { Verdict::NoMine },
        score,
        best_region: Some(region.clone()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub location_id: String,
    pub verdict: Verdict,
    pub best_region: Option<RegionFeatures>,
    pub score: f64,
    pub expected_area_px: f64,
    pub altitude_m: f64,
    pub frame_count: usize,
    pub config_hash: String,
    pub seed: Option<u64>,
    /// Milliseconds per stage.
    pub stage_timings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// Detected fraction of true mines.
    pub fn tp_rate(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Fraction of mine-free scenes flagged as mines.
    pub fn fp_rate(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

pub fn score_run(predictions: &[Verdict], ground_truth: &[bool]) -> Result<ConfusionMatrix> {
    if predictions.len() != ground_truth.len() {
        return Err(Error::validation(format!(
            "{} predictions for {} ground-truth entries",
            predictions.len(),
            ground_truth.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, &t) in predictions.iter().zip(ground_truth) {
        cm.record(p.is_positive(), t);
    }
    Ok(cm)
}
