//! Pipeline configuration loaded from TOML, with a stable content hash.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::denoise::{BoundaryPolicy, WindowSpec};
use crate::detect::Thresholds;
use crate::error::{Error, Result};
use crate::klt::KltMode;
use crate::synth::{CameraModel, CaptureSchedule, SceneConfig};
use crate::watershed::{Connectivity, PreTransform, SegmentOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiseConfig {
    pub window: WindowSpec,
    pub boundary: BoundaryPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResizeConfig {
    pub width: usize,
    pub height: usize,
}

impl Default for ResizeConfig {
    fn default() -> Self {
        Self { width: 184, height: 168 }
    }
}

/// Sign convention applied to the fused image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Keep the sign produced by the transform.
    AsIs,
    /// Flip so the minority tail of the intensity distribution is dark.
    #[default]
    OutlierDark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub mode: KltMode,
    pub polarity: Polarity,
}

/// Segmentation settings for the pipeline. Unlike a bare
/// [`SegmentOptions`], flooding runs on the gradient magnitude by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentConfig {
    pub connectivity: Connectivity,
    pub pre_transform: PreTransform,
    pub h: u32,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            pre_transform: PreTransform::GradientMagnitude,
            ..SegmentOptions::default().into()
        }
    }
}

impl From<SegmentOptions> for SegmentConfig {
    fn from(o: SegmentOptions) -> Self {
        Self {
            connectivity: o.connectivity,
            pre_transform: o.pre_transform,
            h: o.h,
        }
    }
}

impl From<SegmentConfig> for SegmentOptions {
    fn from(c: SegmentConfig) -> Self {
        Self {
            connectivity: c.connectivity,
            pre_transform: c.pre_transform,
            h: c.h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub mine_radius_m: f64,
    #[serde(flatten)]
    pub thresholds: Thresholds,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            mine_radius_m: 0.152,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WatchConfig {
    pub poll_interval_ms: u64,
    /// A location with no new frames for this long is processed with what it has.
    pub flush_after_s: f64,
}

impl Default for WatchConfig {
    fn default() -> Self {
        Self {
            poll_interval_ms: 1000,
            flush_after_s: 60.0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub denoise: DenoiseConfig,
    pub resize: ResizeConfig,
    pub fusion: FusionConfig,
    pub segment: SegmentConfig,
    pub detect: DetectConfig,
    pub camera: CameraModel,
    pub scene: SceneConfig,
    pub schedule: CaptureSchedule,
    pub watch: WatchConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.denoise.window.validate()?;
        if self.resize.width < 2 || self.resize.height < 2 {
            return Err(Error::validation("resize target must be at least 2x2"));
        }
        let t = &self.detect.thresholds;
        if !(self.detect.mine_radius_m > 0.0) {
            return Err(Error::validation("mine radius must be positive"));
        }
        if !(0.0 < t.area_band[0] && t.area_band[0] < 1.0 && 1.0 < t.area_band[1]) {
            return Err(Error::validation("area band must bracket 1"));
        }
        if !(self.watch.flush_after_s >= 0.0) || self.watch.poll_interval_ms == 0 {
            return Err(Error::validation("watch timings must be positive"));
        }
        self.camera.validate()?;
        self.scene.validate()?;
        self.schedule.validate()
    }

    /// Hex SHA-256 of the canonical JSON form (keys sorted, no whitespace).
    pub fn config_hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes to JSON");
        let canonical = serde_json::to_string(&value).expect("JSON value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
