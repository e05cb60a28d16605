//! Thermal time series for one ground location and the frame filename
//! convention `<location_id>_t<YYYYMMDDTHHMMSS>.pgm`.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::io::read_frame;

const STAMP_FORMAT: &str = "%Y%m%dT%H%M%S";

#[derive(Debug, Clone)]
pub struct Frame {
    pub timestamp: NaiveDateTime,
    pub image: GrayImage,
}

#[derive(Debug, Clone)]
pub struct ThermalSeries {
    location_id: String,
    frames: Vec<Frame>,
    altitude_m: f64,
}

impl ThermalSeries {
    pub fn new(location_id: impl Into<String>, frames: Vec<Frame>, altitude_m: f64) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::validation("series must contain at least one frame"));
        };
        let (w, h) = (first.image.width(), first.image.height());
        for (i, f) in frames.iter().enumerate() {
            if f.image.width() != w || f.image.height() != h {
                return Err(Error::validation(format!(
                    "frame {i} is {}x{}, expected {w}x{h}",
                    f.image.width(),
                    f.image.height()
                )));
            }
        }
        if let Some(i) = frames.windows(2).position(|p| p[1].timestamp <= p[0].timestamp) {
            return Err(Error::validation(format!(
                "timestamps not strictly increasing at frame {}",
                i + 1
            )));
        }
        Ok(Self {
            location_id: location_id.into(),
            frames,
            altitude_m,
        })
    }

    pub fn location_id(&self) -> &str {
        &self.location_id
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn images(&self) -> impl Iterator<Item = &GrayImage> {
        self.frames.iter().map(|f| &f.image)
    }

    pub fn altitude_m(&self) -> f64 {
        self.altitude_m
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].image.width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].image.height()
    }

    /// Replaces every frame image, keeping timestamps.
    pub fn map_images(&self, f: impl Fn(&GrayImage) -> Result<GrayImage> + Sync) -> Result<ThermalSeries> {
        use rayon::prelude::*;
        let images: Vec<GrayImage> = self.frames.par_iter().map(|fr| f(&fr.image)).collect::<Result<_>>()?;
        let frames = self
            .frames
            .iter()
            .zip(images)
            .map(|(fr, image)| Frame {
                timestamp: fr.timestamp,
                image,
            })
            .collect();
        ThermalSeries::new(self.location_id.clone(), frames, self.altitude_m)
    }

    /// Loads every conforming frame in `dir`, sorted by timestamp. Files that
    /// do not follow the naming convention are skipped with a warning.
    pub fn load_dir(dir: impl AsRef<Path>, altitude_m: f64) -> Result<ThermalSeries> {
        let dir = dir.as_ref();
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut named = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if !path.is_file() {
                continue;
            }
            match FrameName::parse(&path) {
                Some(name) => named.push((name, path)),
                None => log::warn!("skipping non-conforming file {}", path.display()),
            }
        }
        if named.is_empty() {
            return Err(Error::Input(format!("no conforming frames in {}", dir.display())));
        }
        Self::load_files(named, altitude_m)
    }

    /// Loads the given frames as one series. All names must share a location.
    pub fn load_files(mut named: Vec<(FrameName, PathBuf)>, altitude_m: f64) -> Result<ThermalSeries> {
        if named.is_empty() {
            return Err(Error::Input("no frames".into()));
        }
        named.sort_by(|a, b| a.0.timestamp.cmp(&b.0.timestamp));
        let location = named[0].0.location_id.clone();
        if let Some((other, _)) = named.iter().find(|(n, _)| n.location_id != location) {
            return Err(Error::validation(format!(
                "mixed locations {location:?} and {:?}",
                other.location_id
            )));
        }
        let frames = named
            .into_iter()
            .map(|(name, path)| {
                Ok(Frame {
                    timestamp: name.timestamp,
                    image: read_frame(&path)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ThermalSeries::new(location, frames, altitude_m)
    }
}

/// Parsed frame filename.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameName {
    pub location_id: String,
    pub timestamp: NaiveDateTime,
}

impl FrameName {
    pub fn new(location_id: impl Into<String>, timestamp: NaiveDateTime) -> Self {
        Self {
            location_id: location_id.into(),
            timestamp,
        }
    }

    pub fn parse(path: &Path) -> Option<FrameName> {
        if path.extension()?.to_str()? != "pgm" {
            return None;
        }
        let stem = path.file_stem()?.to_str()?;
        let (location, stamp) = stem.rsplit_once("_t")?;
        if location.is_empty() {
            return None;
        }
        let timestamp = NaiveDateTime::parse_from_str(stamp, STAMP_FORMAT).ok()?;
        Some(FrameName::new(location, timestamp))
    }

    pub fn file_name(&self) -> String {
        format!("{}_t{}.pgm", self.location_id, self.timestamp.format(STAMP_FORMAT))
    }
}
