//! Synthetic thermal minefield: a buried disk under a diurnal soil signal,
//! sensor and dust noise, and soft clutter blobs, rendered on a fixed
//! capture schedule with known ground truth.

use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::ground_sample_distance;
use crate::error::{Error, Result};
use crate::image::{round_half_up, GrayImage};
use crate::io::{write_atomic, write_frame, BitDepth};
use crate::series::{Frame, FrameName, ThermalSeries};

/// Identifier of the random stream layout recorded in manifests.
pub const GENERATOR: &str = "chacha8-splitmix64-v1";

const DAY_HOURS: f64 = 24.0;
const MAX_COUNT: f64 = 65535.0;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn diurnal(t: f64, phase_h: f64) -> f64 {
    (2.0 * std::f64::consts::PI * (t - phase_h) / DAY_HOURS).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraModel {
    pub native_width: usize,
    pub native_height: usize,
    pub hfov_deg: f64,
    pub bit_depth: u32,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            native_width: 80,
            native_height: 60,
            hfov_deg: 51.0,
            bit_depth: 16,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if self.native_width == 0 || self.native_height == 0 {
            return Err(Error::validation("camera dimensions must be positive"));
        }
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 180.0) {
            return Err(Error::validation(format!("hfov {} not in (0, 180)", self.hfov_deg)));
        }
        BitDepth::from_bits(self.bit_depth).map(|_| ())
    }
}

/// Soil signal `mean + amplitude * g(x) * sin(2 pi (t - phase) / 24)` in
/// counts, where `g` varies linearly across the ground along a random
/// direction by `gradient_per_m` (fraction of amplitude per metre).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoilModel {
    pub mean: f64,
    pub amplitude: f64,
    pub phase_h: f64,
    pub gradient_per_m: f64,
}

impl Default for SoilModel {
    fn default() -> Self {
        Self {
            mean: 30000.0,
            amplitude: 1500.0,
            phase_h: 9.0,
            gradient_per_m: 0.1,
        }
    }
}

/// Disk offset `amplitude * sin(2 pi (t - zero_crossing) / 24)`: negative in
/// the morning, positive in the evening.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContrastModel {
    pub amplitude: f64,
    pub zero_crossing_h: f64,
}

impl Default for ContrastModel {
    fn default() -> Self {
        Self {
            amplitude: 150.0,
            zero_crossing_h: 13.5,
        }
    }
}

/// Elongated soft blobs (stones, moisture patches) with their own diurnal
/// response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClutterConfig {
    pub count: usize,
    /// Peak offset in counts.
    pub magnitude: f64,
    /// Range of the blob's minor-axis sigma in metres.
    pub size_m: [f64; 2],
    /// Range of major/minor axis ratio.
    pub aspect: [f64; 2],
}

impl Default for ClutterConfig {
    fn default() -> Self {
        Self {
            count: 3,
            magnitude: 40.0,
            size_m: [0.015, 0.03],
            aspect: [3.5, 5.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub mine_present: bool,
    pub mine_radius_m: f64,
    /// Burial point `[x, y]` in metres from the nadir; `x` to the right, `y` down.
    pub burial_center_m: [f64; 2],
    pub soil: SoilModel,
    pub mine_contrast: ContrastModel,
    pub noise_sigma: f64,
    /// Dust noise at ground level; scaled by `max(0, 1 - altitude / dust_ceiling_m)`.
    pub dust_sigma: f64,
    pub dust_ceiling_m: f64,
    /// Width of the smoothed disk rim in native pixels.
    pub rim_px: f64,
    pub clutter: ClutterConfig,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            mine_present: true,
            mine_radius_m: 0.152,
            burial_center_m: [0.0, 0.0],
            soil: SoilModel::default(),
            mine_contrast: ContrastModel::default(),
            noise_sigma: 20.0,
            dust_sigma: 150.0,
            dust_ceiling_m: 1.2,
            rim_px: 1.5,
            clutter: ClutterConfig::default(),
            seed: 1,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mine_radius_m > 0.0) {
            return Err(Error::validation("mine radius must be positive"));
        }
        if !(self.noise_sigma >= 0.0) || !(self.dust_sigma >= 0.0) {
            return Err(Error::validation("noise sigma must be non-negative"));
        }
        if !(self.rim_px >= 0.0) || !(self.dust_ceiling_m > 0.0) {
            return Err(Error::validation("rim width and dust ceiling must be valid"));
        }
        Ok(())
    }

    fn dust_factor(&self, altitude_m: f64) -> f64 {
        (1.0 - altitude_m / self.dust_ceiling_m).max(0.0)
    }

    /// Total per-pixel noise sigma at `altitude_m`.
    pub fn noise_at(&self, altitude_m: f64) -> f64 {
        self.noise_sigma.hypot(self.dust_sigma * self.dust_factor(altitude_m))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CaptureSchedule {
    pub hours: Vec<f64>,
    pub frames_per_hour: usize,
    pub altitude_m: f64,
    pub date: NaiveDate,
    /// Spacing between repeated captures within one hour, seconds.
    pub repeat_interval_s: i64,
}

impl Default for CaptureSchedule {
    fn default() -> Self {
        Self {
            hours: vec![6.0, 7.0, 8.0, 9.0, 10.0, 17.0, 18.0, 19.0, 20.0, 21.0, 22.0],
            frames_per_hour: 4,
            altitude_m: 1.5,
            date: NaiveDate::from_ymd_opt(2023, 6, 1).expect("valid date"),
            repeat_interval_s: 10,
        }
    }
}

impl CaptureSchedule {
    pub fn frame_count(&self) -> usize {
        self.hours.len() * self.frames_per_hour
    }

    pub fn validate(&self) -> Result<()> {
        if self.hours.is_empty() || self.frames_per_hour == 0 {
            return Err(Error::validation("capture schedule is empty"));
        }
        if self.hours.iter().any(|h| !(0.0..DAY_HOURS).contains(h)) {
            return Err(Error::validation("capture hours must lie in [0, 24)"));
        }
        if self.hours.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("capture hours must be strictly increasing"));
        }
        if !(self.altitude_m > 0.0) || self.repeat_interval_s <= 0 {
            return Err(Error::validation("altitude and repeat interval must be positive"));
        }
        let span = self.repeat_interval_s * (self.frames_per_hour as i64 - 1);
        let min_gap = self.hours.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if (span as f64) >= min_gap * 3600.0 {
            return Err(Error::validation("repeated captures overlap the next capture hour"));
        }
        Ok(())
    }

    /// `(hour, timestamp)` for every frame in capture order.
    pub fn captures(&self) -> Vec<(f64, NaiveDateTime)> {
        let midnight = self.date.and_hms_opt(0, 0, 0).expect("midnight");
        let mut out = Vec::with_capacity(self.frame_count());
        for &h in &self.hours {
            let start = midnight + Duration::seconds((h * 3600.0).round() as i64);
            for k in 0..self.frames_per_hour {
                let ts = start + Duration::seconds(self.repeat_interval_s * k as i64);
                let hour = h + (self.repeat_interval_s * k as i64) as f64 / 3600.0;
                out.push((hour, ts));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Blob {
    row: f64,
    col: f64,
    sigma_major: f64,
    sigma_minor: f64,
    angle: f64,
    magnitude: f64,
    phase_h: f64,
}

/// Projected scene geometry in native pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGeometry {
    pub center_px: (f64, f64),
    pub radius_px: f64,
    gsd: f64,
    /// Unit direction `(row, col)` of increasing soil response.
    soil_direction: (f64, f64),
    blobs: Vec<Blob>,
}

impl SceneGeometry {
    pub fn new(scene: &SceneConfig, camera: &CameraModel, altitude_m: f64) -> Result<Self> {
        scene.validate()?;
        camera.validate()?;
        if !(altitude_m > 0.0) {
            return Err(Error::validation(format!("altitude must be positive, got {altitude_m}")));
        }
        let gsd = ground_sample_distance(altitude_m, camera);
        let (w, h) = (camera.native_width as f64, camera.native_height as f64);
        // pixel centres sit at integer coordinates; the nadir is the frame centre
        let center = (
            (h - 1.0) / 2.0 + scene.burial_center_m[1] / gsd,
            (w - 1.0) / 2.0 + scene.burial_center_m[0] / gsd,
        );
        let radius = scene.mine_radius_m / gsd;
        if scene.mine_present {
            let reach = radius + scene.rim_px / 2.0;
            let dr = (center.0 - center.0.clamp(0.0, h - 1.0)).abs();
            let dc = (center.1 - center.1.clamp(0.0, w - 1.0)).abs();
            if dr.hypot(dc) >= reach {
                return Err(Error::validation("mine disk projects entirely outside the frame"));
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(scene.seed ^ 0xC1A7_7E55));
        let angle: f64 = rng.random_range(0.0..2.0 * std::f64::consts::PI);
        let c = &scene.clutter;
        let blobs = (0..c.count)
            .map(|_| {
                let minor = rng.random_range(c.size_m[0]..=c.size_m[1]) / gsd;
                let aspect = rng.random_range(c.aspect[0]..=c.aspect[1]);
                Blob {
                    row: rng.random_range(0.0..h),
                    col: rng.random_range(0.0..w),
                    sigma_major: minor * aspect,
                    sigma_minor: minor,
                    angle: rng.random_range(0.0..std::f64::consts::PI),
                    magnitude: c.magnitude * rng.random_range(0.5..=1.0),
                    phase_h: rng.random_range(0.0..DAY_HOURS),
                }
            })
            .collect();
        Ok(Self {
            center_px: center,
            radius_px: radius,
            gsd,
            soil_direction: angle.sin_cos(),
            blobs,
        })
    }

    /// Disk membership weight in `[0, 1]` with a linear rim of width `rim`.
    pub fn disk_weight(&self, row: f64, col: f64, rim: f64) -> f64 {
        let d = (row - self.center_px.0).hypot(col - self.center_px.1);
        if rim <= 0.0 {
            return if d <= self.radius_px { 1.0 } else { 0.0 };
        }
        ((self.radius_px + rim / 2.0 - d) / rim).clamp(0.0, 1.0)
    }
}

/// Noise-free scene without the disk: soil signal plus clutter.
pub fn background_field(scene: &SceneConfig, camera: &CameraModel, altitude_m: f64, hour: f64) -> Result<GrayImage> {
    let geom = SceneGeometry::new(scene, camera, altitude_m)?;
    Ok(render_with(scene, camera, &geom, hour, None, false))
}

fn render_with(
    scene: &SceneConfig,
    camera: &CameraModel,
    geom: &SceneGeometry,
    hour: f64,
    mut noise: Option<(&mut ChaCha8Rng, Normal<f64>)>,
    with_disk: bool,
) -> GrayImage {
    let soil_swing = scene.soil.amplitude * diurnal(hour, scene.soil.phase_h);
    let (mid_r, mid_c) = ((camera.native_height as f64 - 1.0) / 2.0, (camera.native_width as f64 - 1.0) / 2.0);
    let contrast = scene.mine_contrast.amplitude * diurnal(hour, scene.mine_contrast.zero_crossing_h);
    let blob_gain: Vec<f64> = geom
        .blobs
        .iter()
        .map(|b| b.magnitude * (0.5 + 0.5 * diurnal(hour, b.phase_h)))
        .collect();
    let (w, h) = (camera.native_width, camera.native_height);
    let mut px = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let (rf, cf) = (r as f64, c as f64);
            let along = ((rf - mid_r) * geom.soil_direction.0 + (cf - mid_c) * geom.soil_direction.1) * geom.gsd;
            let mut v = scene.soil.mean + soil_swing * (1.0 + scene.soil.gradient_per_m * along);
            for (b, gain) in geom.blobs.iter().zip(&blob_gain) {
                let (dr, dc) = (rf - b.row, cf - b.col);
                let (sin, cos) = b.angle.sin_cos();
                let u = dc * cos + dr * sin;
                let t = -dc * sin + dr * cos;
                v += gain * (-0.5 * ((u / b.sigma_major).powi(2) + (t / b.sigma_minor).powi(2))).exp();
            }
            if with_disk {
                v += contrast * geom.disk_weight(rf, cf, scene.rim_px);
            }
            if let Some((rng, dist)) = noise.as_mut() {
                v += dist.sample(*rng);
            }
            px.push(round_half_up(v).clamp(0.0, MAX_COUNT));
        }
    }
    GrayImage::from_raw(w, h, px)
}

fn frame_rng(seed: u64, hour: f64, frame_index: usize) -> ChaCha8Rng {
    let key = splitmix64(hour.to_bits() ^ splitmix64(frame_index as u64));
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ key))
}

/// Renders one raw sensor frame (integer counts).
pub fn render_frame(
    scene: &SceneConfig,
    camera: &CameraModel,
    altitude_m: f64,
    hour: f64,
    frame_index: usize,
) -> Result<GrayImage> {
    if !(0.0..DAY_HOURS).contains(&hour) {
        return Err(Error::validation(format!("hour {hour} not in [0, 24)")));
    }
    let geom = SceneGeometry::new(scene, camera, altitude_m)?;
    Ok(render_geom(scene, camera, &geom, altitude_m, hour, frame_index))
}

fn render_geom(
    scene: &SceneConfig,
    camera: &CameraModel,
    geom: &SceneGeometry,
    altitude_m: f64,
    hour: f64,
    frame_index: usize,
) -> GrayImage {
    let sigma = scene.noise_at(altitude_m);
    let mut rng = frame_rng(scene.seed, hour, frame_index);
    let noise = (sigma > 0.0).then(|| (&mut rng, Normal::new(0.0, sigma).expect("finite sigma")));
    render_with(scene, camera, geom, hour, noise, scene.mine_present)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub mine_present: bool,
    /// `[row, col]` in native pixels; absent for mine-free scenes.
    pub center_px: Option<[f64; 2]>,
    pub radius_px: Option<f64>,
}

pub fn render_series(
    location_id: &str,
    scene: &SceneConfig,
    camera: &CameraModel,
    schedule: &CaptureSchedule,
) -> Result<(ThermalSeries, GroundTruth)> {
    schedule.validate()?;
    let altitude = schedule.altitude_m;
    let geom = SceneGeometry::new(scene, camera, altitude)?;
    let frames = schedule
        .captures()
        .into_par_iter()
        .enumerate()
        .map(|(i, (hour, timestamp))| Frame {
            timestamp,
            image: render_geom(scene, camera, &geom, altitude, hour, i),
        })
        .collect();
    let series = ThermalSeries::new(location_id, frames, altitude)?;
    let truth = GroundTruth {
        mine_present: scene.mine_present,
        center_px: scene.mine_present.then_some([geom.center_px.0, geom.center_px.1]),
        radius_px: scene.mine_present.then_some(geom.radius_px),
    };
    Ok((series, truth))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub series_id: String,
    pub mine_present: bool,
    pub altitude_m: f64,
    pub center_px: Option<[f64; 2]>,
    pub radius_px: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: String,
    pub base_seed: u64,
    pub series: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("manifest {}: {e}", path.display())))
    }
}

/// What to render for a benchmark.
#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    /// Mine-present series per altitude.
    pub positives: usize,
    /// Mine-free series per altitude.
    pub negatives: usize,
    pub altitudes: Vec<f64>,
    pub base_seed: u64,
    /// Burial points are drawn uniformly within this many metres of the nadir.
    pub position_jitter_m: f64,
}

impl BenchmarkSpec {
    pub fn new(positives: usize, negatives: usize, altitudes: Vec<f64>, base_seed: u64) -> Self {
        Self {
            positives,
            negatives,
            altitudes,
            base_seed,
            position_jitter_m: 0.1,
        }
    }
}

fn series_id(altitude: f64, positive: bool, i: usize) -> String {
    format!(
        "alt{:03}-{}-{:03}",
        (altitude * 100.0).round() as u32,
        if positive { "pos" } else { "neg" },
        i
    )
}

/// Plans the series of a benchmark without rendering them.
pub fn plan_benchmark(spec: &BenchmarkSpec, template: &SceneConfig) -> Vec<(String, SceneConfig, f64)> {
    let mut plan = Vec::new();
    for &alt in &spec.altitudes {
        for (positive, count) in [(true, spec.positives), (false, spec.negatives)] {
            for i in 0..count {
                let seed = splitmix64(spec.base_seed ^ splitmix64(plan.len() as u64));
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let j = spec.position_jitter_m;
                let mut scene = template.clone();
                scene.seed = seed;
                scene.mine_present = positive;
                if j > 0.0 {
                    scene.burial_center_m = [
                        template.burial_center_m[0] + rng.random_range(-j..=j),
                        template.burial_center_m[1] + rng.random_range(-j..=j),
                    ];
                }
                plan.push((series_id(alt, positive, i), scene, alt));
            }
        }
    }
    plan
}

/// Renders a benchmark into `root/<series_id>/` plus `root/manifest.json`.
pub fn render_benchmark(
    spec: &BenchmarkSpec,
    template: &SceneConfig,
    camera: &CameraModel,
    schedule: &CaptureSchedule,
    root: impl AsRef<Path>,
) -> Result<Manifest> {
    let root = root.as_ref();
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let depth = BitDepth::from_bits(camera.bit_depth)?;
    let entries = plan_benchmark(spec, template)
        .into_par_iter()
        .map(|(id, scene, alt)| {
            let sched = CaptureSchedule {
                altitude_m: alt,
                ..schedule.clone()
            };
            let (series, truth) = render_series(&id, &scene, camera, &sched)?;
            let dir = root.join(&id);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for frame in series.frames() {
                let name = FrameName::new(id.clone(), frame.timestamp).file_name();
                write_frame(&frame.image, dir.join(name), depth)?;
            }
            Ok(ManifestEntry {
                series_id: id,
                mine_present: truth.mine_present,
                altitude_m: alt,
                center_px: truth.center_px,
                radius_px: truth.radius_px,
                seed: scene.seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        generator: GENERATOR.to_string(),
        base_seed: spec.base_seed,
        series: entries,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(root.join("manifest.json"), json.as_bytes())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> SceneConfig {
        SceneConfig {
            noise_sigma: 0.0,
            dust_sigma: 0.0,
            clutter: ClutterConfig {
                count: 0,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn measured_radius(img: &GrayImage, background: &GrayImage) -> f64 {
        let diff: Vec<f64> = img.pixels().iter().zip(background.pixels()).map(|(a, b)| (a - b).abs()).collect();
        let peak = diff.iter().copied().fold(0.0, f64::max);
        let area = diff.iter().filter(|&&d| d >= peak / 2.0).count();
        (area as f64 / std::f64::consts::PI).sqrt()
    }

    #[test]
    fn zero_contrast_equals_background() {
        let scene = SceneConfig {
            mine_contrast: ContrastModel {
                amplitude: 0.0,
                ..Default::default()
            },
            ..quiet()
        };
        let cam = CameraModel::default();
        let frame = render_frame(&scene, &cam, 1.5, 8.0, 0).unwrap();
        assert_eq!(frame, background_field(&scene, &cam, 1.5, 8.0).unwrap());
    }

    #[test]
    fn mine_changes_only_disk_support() {
        let cam = CameraModel::default();
        let pos = SceneConfig { mine_present: true, ..Default::default() };
        let neg = SceneConfig { mine_present: false, ..Default::default() };
        let (a, b) = (render_frame(&pos, &cam, 1.5, 19.0, 3).unwrap(), render_frame(&neg, &cam, 1.5, 19.0, 3).unwrap());
        let geom = SceneGeometry::new(&pos, &cam, 1.5).unwrap();
        let mut differing = 0;
        for r in 0..60 {
            for c in 0..80 {
                if a.get(r, c) != b.get(r, c) {
                    differing += 1;
                    assert!(geom.disk_weight(r as f64, c as f64, pos.rim_px) > 0.0);
                }
            }
        }
        assert!(differing > 100);
    }

    #[test]
    fn disk_radius_follows_altitude() {
        let cam = CameraModel::default();
        let scene = quiet();
        let bg = |alt| background_field(&scene, &cam, alt, 20.0).unwrap();
        let r1 = measured_radius(&render_frame(&scene, &cam, 1.0, 20.0, 0).unwrap(), &bg(1.0));
        let r2 = measured_radius(&render_frame(&scene, &cam, 2.0, 20.0, 0).unwrap(), &bg(2.0));
        let expected = |alt| scene.mine_radius_m / ground_sample_distance(alt, &cam);
        assert!((r1 - expected(1.0)).abs() <= 0.5, "{r1} vs {}", expected(1.0));
        assert!((r2 - expected(2.0)).abs() <= 0.5, "{r2} vs {}", expected(2.0));
        assert!((r1 / 2.0 - r2).abs() <= 0.5);
    }

    #[test]
    fn negative_scene_is_pure_background() {
        let cam = CameraModel::default();
        let scene = SceneConfig {
            mine_present: false,
            noise_sigma: 0.0,
            dust_sigma: 0.0,
            ..Default::default()
        };
        for hour in [6.0, 21.0] {
            assert_eq!(
                render_frame(&scene, &cam, 1.5, hour, 0).unwrap(),
                background_field(&scene, &cam, 1.5, hour).unwrap()
            );
        }
    }

    #[test]
    fn misplaced_disk_rejected() {
        let scene = SceneConfig {
            burial_center_m: [5.0, 0.0],
            ..Default::default()
        };
        assert!(render_frame(&scene, &CameraModel::default(), 1.5, 8.0, 0).is_err());
        assert!(render_frame(&SceneConfig::default(), &CameraModel::default(), 1.5, 24.0, 0).is_err());
        assert!(render_frame(&SceneConfig::default(), &CameraModel::default(), 0.0, 8.0, 0).is_err());
    }

    #[test]
    fn default_schedule_has_44_frames_outside_midday() {
        let sched = CaptureSchedule::default();
        let caps = sched.captures();
        assert_eq!(caps.len(), 44);
        assert!(caps.iter().all(|(h, _)| !(11.0..17.0).contains(h)));
        assert!(caps.windows(2).all(|w| w[0].1 < w[1].1));
    }

    #[test]
    fn empty_schedule_rejected() {
        let sched = CaptureSchedule {
            hours: vec![],
            ..Default::default()
        };
        assert!(render_series("x", &SceneConfig::default(), &CameraModel::default(), &sched).is_err());
    }

    #[test]
    fn seeds_change_noise_not_geometry() {
        let cam = CameraModel::default();
        let sched = CaptureSchedule {
            hours: vec![7.0, 20.0],
            frames_per_hour: 1,
            ..Default::default()
        };
        let a = SceneConfig { seed: 1, ..Default::default() };
        let b = SceneConfig { seed: 2, ..Default::default() };
        let (sa, ta) = render_series("a", &a, &cam, &sched).unwrap();
        let (sb, tb) = render_series("a", &b, &cam, &sched).unwrap();
        assert_eq!(ta, tb);
        assert_ne!(sa.frames()[0].image, sb.frames()[0].image);
        let (sa2, _) = render_series("a", &a, &cam, &sched).unwrap();
        assert_eq!(sa.frames()[1].image, sa2.frames()[1].image);
    }

    #[test]
    fn benchmark_plan_counts() {
        let plan = plan_benchmark(&BenchmarkSpec::new(10, 0, vec![1.0, 1.5, 2.0], 2), &SceneConfig::default());
        assert_eq!(plan.len(), 30);
        for alt in [1.0, 1.5, 2.0] {
            assert_eq!(plan.iter().filter(|p| p.2 == alt).count(), 10);
        }
        assert!(plan_benchmark(&BenchmarkSpec::new(0, 0, vec![1.5], 1), &SceneConfig::default()).is_empty());
    }
}
