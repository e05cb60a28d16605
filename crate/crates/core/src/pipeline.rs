//! End-to-end processing of one thermal series into a detection report.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use crate::config::{PipelineConfig, Polarity};
use crate::denoise::median_filter;
use crate::detect::{decide, expected_mine_area, region_features, DetectionReport, RegionFeatures};
use crate::enhance::equalize;
use crate::error::Result;
use crate::image::{quantize, GrayImage};
use crate::io::write_png;
use crate::klt::fuse_series;
use crate::resize::bicubic_resize;
use crate::series::ThermalSeries;
use crate::watershed::{segment, SegmentMap};

/// Intermediate images kept for debugging.
#[derive(Debug, Clone)]
pub struct StageImages {
    /// First frame after median filtering.
    pub filtered: GrayImage,
    /// First frame after upscaling.
    pub resized: GrayImage,
    pub fused: GrayImage,
    pub quantized: GrayImage,
    pub equalized: GrayImage,
    pub segments: SegmentMap,
    pub regions: Vec<RegionFeatures>,
}

impl StageImages {
    /// Writes `01_filtered.png` through `05_segments.png` into `dir`.
    pub fn write_pngs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| crate::error::Error::io(dir, e))?;
        write_png(&quantize(&self.filtered), dir.join("01_filtered.png"))?;
        write_png(&quantize(&self.resized), dir.join("02_resized.png"))?;
        write_png(&self.quantized, dir.join("03_fused.png"))?;
        write_png(&self.equalized, dir.join("04_equalized.png"))?;
        write_png(&self.segments.to_image(), dir.join("05_segments.png"))
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: DetectionReport,
    pub stages: StageImages,
}

/// Third central moment; its sign tells which tail is the outlier.
fn skewness_sign(image: &GrayImage) -> f64 {
    let mean = image.mean();
    image.pixels().iter().map(|p| (p - mean).powi(3)).sum::<f64>()
}

pub fn orient(image: &GrayImage, polarity: Polarity) -> GrayImage {
    match polarity {
        Polarity::AsIs => image.clone(),
        Polarity::OutlierDark if skewness_sign(image) > 0.0 => image.map(|p| -p).expect("negation stays finite"),
        Polarity::OutlierDark => image.clone(),
    }
}

pub fn run_pipeline(series: &ThermalSeries, config: &PipelineConfig, seed: Option<u64>) -> Result<PipelineOutput> {
    config.validate()?;
    let mut timings = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut BTreeMap<String, f64>| {
        let now = Instant::now();
        timings.insert(name.to_string(), (now - clock).as_secs_f64() * 1e3);
        clock = now;
    };

    let d = &config.denoise;
    let filtered = series.map_images(|img| median_filter(img, d.window, d.boundary))?;
    lap("denoise", &mut timings);

    let (tw, th) = (config.resize.width, config.resize.height);
    let resized = filtered.map_images(|img| bicubic_resize(img, tw, th))?;
    lap("resize", &mut timings);

    let fused = orient(&fuse_series(&resized, config.fusion.mode)?, config.fusion.polarity);
    lap("fusion", &mut timings);

    let quantized = quantize(&fused);
    let equalized = equalize(&quantized)?;
    lap("enhance", &mut timings);

    let segments = segment(&equalized, &config.segment.into());
    lap("segment", &mut timings);

    let regions = region_features(&segments);
    let expected = expected_mine_area(series.altitude_m(), &config.camera, config.detect.mine_radius_m, (tw, th))?;
    let decision = decide(&regions, expected, &config.detect.thresholds);
    lap("detect", &mut timings);

    let report = DetectionReport {
        location_id: series.location_id().to_string(),
        verdict: decision.verdict,
        best_region: decision.best_region,
        score: decision.score,
        expected_area_px: expected,
        altitude_m: series.altitude_m(),
        frame_count: series.len(),
        config_hash: config.config_hash(),
        seed,
        stage_timings: timings,
    };
    Ok(PipelineOutput {
        report,
        stages: StageImages {
            filtered: filtered.frames()[0].image.clone(),
            resized: resized.frames()[0].image.clone(),
            fused,
            quantized,
            equalized,
            segments,
            regions,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::Verdict;
    use crate::series::Frame;
    use chrono::NaiveDate;

    #[test]
    fn orientation_makes_minority_tail_dark() {
        let mut px = vec![0.0; 100];
        px[..5].iter_mut().for_each(|p| *p = 10.0);
        let img = GrayImage::new(10, 10, px).unwrap();
        let out = orient(&img, Polarity::OutlierDark);
        assert_eq!(out.get(0, 0), -10.0);
        assert_eq!(orient(&out, Polarity::OutlierDark), out);
        assert_eq!(orient(&img, Polarity::AsIs), img);
    }

    #[test]
    fn constant_series_reports_no_mine() {
        let t0 = NaiveDate::from_ymd_opt(2023, 6, 1).unwrap().and_hms_opt(6, 0, 0).unwrap();
        let frames = (0..3)
            .map(|i| Frame {
                timestamp: t0 + chrono::Duration::hours(i),
                image: GrayImage::filled(80, 60, 30000.0),
            })
            .collect();
        let series = ThermalSeries::new("flat", frames, 1.5).unwrap();
        let out = run_pipeline(&series, &PipelineConfig::default(), None).unwrap();
        assert_eq!(out.report.verdict, Verdict::NoMine);
        assert_eq!(out.report.frame_count, 3);
        assert_eq!(out.stages.equalized.width(), 184);
        for stage in ["denoise", "resize", "fusion", "enhance", "segment", "detect"] {
            assert!(out.report.stage_timings.contains_key(stage));
        }
    }
}
