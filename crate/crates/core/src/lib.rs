//! Detection of buried landmines from diurnal thermal image series.
//!
//! Frames are median filtered, upscaled with bicubic patches, fused across
//! time with a Karhunen-Loeve transform, equalized and segmented by marker
//! flooding. Segments are scored against the expected projected mine disk.

pub mod config;
pub mod denoise;
pub mod detect;
pub mod enhance;
pub mod error;
pub mod image;
pub mod io;
pub mod klt;
pub mod pipeline;
pub mod resize;
pub mod series;
pub mod synth;
pub mod watershed;

pub use config::{PipelineConfig, SegmentConfig};
pub use denoise::{median_filter, BoundaryPolicy, WindowSpec};
pub use detect::{decide, score_run, ConfusionMatrix, DetectionReport, RegionFeatures, Thresholds, Verdict};
pub use enhance::{equalize, histogram, Histogram};
pub use error::{Error, Result};
pub use image::{quantize, GrayImage, PixelCoord};
pub use io::{read_frame, write_frame, write_png, BitDepth};
pub use klt::{compute_basis, fuse_series, transform, KltBasis, KltMode, ObservationSet};
pub use pipeline::{run_pipeline, PipelineOutput};
pub use resize::{bicubic_resize, eval_patch, fit_patch, BicubicPatch, CornerData};
pub use series::{Frame, FrameName, ThermalSeries};
pub use synth::{render_frame, render_series, CameraModel, CaptureSchedule, GroundTruth, SceneConfig};
pub use watershed::{flood, segment, Connectivity, SegmentMap, SegmentOptions, TopographicSurface};
