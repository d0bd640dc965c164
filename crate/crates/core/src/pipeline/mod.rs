//! Image-to-ellipse extraction.
//!
//! A photographed pattern becomes an ellipse table in five steps: grayscale
//! conversion, background estimation and subtraction, triangle thresholding,
//! morphological smoothing, and per-region moment ellipse fits with a
//! goodness-of-fit filter. [`extract_pattern`] runs the whole chain;
//! the submodules expose each stage for testing and for custom pipelines.

pub mod ellipse_fit;
pub mod gray;
pub mod morphology;
pub mod regions;
pub mod threshold;

use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

pub use ellipse_fit::{
    fit_ellipse_moments, fit_quality, hausdorff, rasterize_ellipse, FitQuality,
};
pub use gray::{estimate_background, subtract_background, to_grayscale, ColorImage, GrayImage};
pub use morphology::{dilate, erode, morph_smooth, BinaryImage, StructuringElement};
pub use regions::{label_regions, Region};
pub use threshold::{histogram, triangle_split, triangle_threshold, Split};

use crate::types::PatternRecord;

/// Errors from image loading and the extraction chain.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("image has zero width or height")]
    EmptyImage,
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("pixel ({x}, {y}) has value {value} outside [0, 1]")]
    InvalidPixel { x: usize, y: usize, value: f32 },
    #[error("downsample factor {factor} exceeds image size {width}x{height}")]
    FactorTooLarge {
        factor: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("image {path:?}: {msg}")]
    Image { path: PathBuf, msg: String },
    #[error("histogram has at most one occupied bin; nothing to threshold")]
    DegenerateHistogram,
    #[error("region of {area} pixels cannot be fitted: {detail}")]
    DegenerateRegion { area: usize, detail: String },
}

/// Tuning knobs for [`extract_pattern`]. The defaults handle photographs of
/// dark stains on a light card at roughly 0.1 mm/pixel.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Block size for the coarse background grid.
    pub background_downsample: usize,
    /// Median-filter window (odd) applied to the background grid.
    pub background_median_window: usize,
    /// Erosion/dilation rounds in the morphological opening.
    pub morph_iterations: usize,
    /// Neighborhood used by the opening.
    pub structuring_element: StructuringElement,
    /// Regions smaller than this many pixels are dropped before fitting.
    pub min_region_area: usize,
    /// Reject a fit when the region/ellipse Jaccard dissimilarity exceeds this.
    pub jaccard_max: f64,
    /// Interpret `jaccard_max` as a similarity-index cutoff instead: reject
    /// when `1 - dissimilarity` exceeds it. Off by default; the dissimilarity
    /// reading is the one that keeps well-fitted stains.
    pub jaccard_raw_index: bool,
    /// Reject a fit when the contour Hausdorff distance exceeds this (pixels).
    pub hausdorff_max: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            background_downsample: 16,
            background_median_window: 5,
            morph_iterations: 4,
            structuring_element: StructuringElement::Cross3,
            min_region_area: 8,
            jaccard_max: 0.9,
            jaccard_raw_index: false,
            hausdorff_max: 5.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.background_downsample == 0 {
            return Err(PipelineError::InvalidConfig(
                "background_downsample must be positive".into(),
            ));
        }
        if self.background_median_window == 0 || self.background_median_window % 2 == 0 {
            return Err(PipelineError::InvalidConfig(format!(
                "background_median_window must be odd, got {}",
                self.background_median_window
            )));
        }
        if !(0.0..=1.0).contains(&self.jaccard_max) {
            return Err(PipelineError::InvalidConfig(format!(
                "jaccard_max must be in [0, 1], got {}",
                self.jaccard_max
            )));
        }
        if !(self.hausdorff_max >= 0.0) {
            return Err(PipelineError::InvalidConfig(format!(
                "hausdorff_max must be non-negative, got {}",
                self.hausdorff_max
            )));
        }
        Ok(())
    }
}

/// Counters describing one extraction run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct ExtractionStats {
    pub regions_found: usize,
    pub rejected_small: usize,
    pub rejected_degenerate: usize,
    pub rejected_quality: usize,
    pub ellipses_kept: usize,
    /// Triangle threshold bin, or `None` when the image was blank.
    pub threshold_bin: Option<usize>,
    /// Foreground pixels after morphological smoothing.
    pub foreground_pixels: usize,
}

/// An extracted pattern together with its run counters.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub record: PatternRecord,
    pub stats: ExtractionStats,
}

/// Runs the full chain on one image and returns the ellipse table as an
/// unlabeled [`PatternRecord`].
///
/// A blank image (every pixel in one histogram bin after background
/// subtraction) is not an error; it yields a record with no ellipses, which
/// downstream validation then rejects for having too few.
pub fn extract_pattern(
    img: &ColorImage,
    id: &str,
    cfg: &PipelineConfig,
) -> Result<PatternRecord, PipelineError> {
    extract_pattern_detailed(img, id, cfg).map(|e| e.record)
}

/// [`extract_pattern`], plus counters for logging and tests.
pub fn extract_pattern_detailed(
    img: &ColorImage,
    id: &str,
    cfg: &PipelineConfig,
) -> Result<Extraction, PipelineError> {
    cfg.validate()?;
    let gray = to_grayscale(img);
    let bg = estimate_background(&gray, cfg.background_downsample, cfg.background_median_window)?;
    let stain = subtract_background(&gray, &bg)?;

    let mut stats = ExtractionStats::default();
    let split = match triangle_split(&histogram(&stain)) {
        Ok(s) => s,
        Err(PipelineError::DegenerateHistogram) => {
            return Ok(Extraction {
                record: PatternRecord::new(id, Vec::new()),
                stats,
            });
        }
        Err(e) => return Err(e),
    };
    stats.threshold_bin = Some(split.bin);

    let mask = threshold::apply_split(&stain, split);
    let smoothed = morph_smooth(&mask, cfg.morph_iterations, cfg.structuring_element);
    stats.foreground_pixels = smoothed.count_ones();

    let regions = label_regions(&smoothed, 1);
    stats.regions_found = regions.len();

    let mut ellipses = Vec::new();
    for region in &regions {
        if region.area() < cfg.min_region_area {
            stats.rejected_small += 1;
            continue;
        }
        let ellipse = match fit_ellipse_moments(region) {
            Ok(e) => e,
            Err(PipelineError::DegenerateRegion { .. }) => {
                stats.rejected_degenerate += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let q = fit_quality(region, &ellipse);
        let jaccard_bad = if cfg.jaccard_raw_index {
            1.0 - q.jaccard_dissimilarity > cfg.jaccard_max
        } else {
            q.jaccard_dissimilarity > cfg.jaccard_max
        };
        if jaccard_bad || q.hausdorff > cfg.hausdorff_max {
            stats.rejected_quality += 1;
            continue;
        }
        ellipses.push(ellipse);
    }
    stats.ellipses_kept = ellipses.len();
    Ok(Extraction {
        record: PatternRecord::new(id, ellipses),
        stats,
    })
}
