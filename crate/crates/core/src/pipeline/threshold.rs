//! Triangle-method global thresholding.
//!
//! The 256-bin histogram of a stain-strength image has a dominant peak
//! (background, near zero after subtraction) and a long thin tail (stain
//! pixels). The triangle method draws a chord from the peak to the farthest
//! non-empty bin and thresholds at the bin lying farthest from that chord,
//! which lands at the foot of the peak regardless of how unbalanced the two
//! populations are.

use crate::pipeline::morphology::BinaryImage;
use crate::pipeline::{GrayImage, PipelineError};

pub const HISTOGRAM_BINS: usize = 256;

/// Bin index of a value in `[0, 1]`.
pub fn bin_of(v: f32) -> usize {
    ((f64::from(v) * 255.0).round() as isize).clamp(0, 255) as usize
}

/// 256-bin histogram of a grayscale image.
pub fn histogram(img: &GrayImage) -> [u64; HISTOGRAM_BINS] {
    let mut h = [0u64; HISTOGRAM_BINS];
    for &v in img.data() {
        h[bin_of(v)] += 1;
    }
    h
}

/// Where the triangle method separates a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split {
    /// Threshold bin; the bin itself counts as background.
    pub bin: usize,
    /// True when the tail (foreground) lies right of the peak.
    pub foreground_right: bool,
}

/// Runs the triangle construction on a histogram.
///
/// Ties are broken deterministically: the peak is the smallest maximal bin,
/// an equidistant tail goes right, and among equal chord distances the bin
/// closest to the peak wins. A histogram with all mass in one bin has no
/// triangle to draw and is rejected.
pub fn triangle_split(hist: &[u64; HISTOGRAM_BINS]) -> Result<Split, PipelineError> {
    let lo = hist.iter().position(|&c| c > 0).ok_or(PipelineError::DegenerateHistogram)?;
    let hi = hist.iter().rposition(|&c| c > 0).unwrap();
    if lo == hi {
        return Err(PipelineError::DegenerateHistogram);
    }
    let peak = hist
        .iter()
        .enumerate()
        .max_by(|(ia, ca), (ib, cb)| ca.cmp(cb).then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .unwrap();
    let tail = if hi - peak >= peak - lo { hi } else { lo };
    // chord from (peak, h[peak]) to (tail, h[tail]); maximize the distance
    // numerator |A x + B h(x) + C| over bins strictly between them
    let (xp, yp) = (peak as f64, hist[peak] as f64);
    let (xt, yt) = (tail as f64, hist[tail] as f64);
    let (a, b, c) = (yt - yp, xp - xt, xt * yp - xp * yt);
    let mut best = peak;
    let mut best_d = -1.0;
    let interior: Box<dyn Iterator<Item = usize>> = if tail > peak {
        Box::new(peak + 1..tail)
    } else {
        Box::new((tail + 1..peak).rev())
    };
    for i in interior {
        let d = (a * i as f64 + b * hist[i] as f64 + c).abs();
        if d > best_d {
            best_d = d;
            best = i;
        }
    }
    Ok(Split {
        bin: best,
        foreground_right: tail > peak,
    })
}

/// Masks the image against a split: foreground is the tail side, strictly
/// beyond the threshold bin.
pub fn apply_split(img: &GrayImage, split: Split) -> BinaryImage {
    let fg = |v: f32| {
        let b = bin_of(v);
        if split.foreground_right {
            b > split.bin
        } else {
            b < split.bin
        }
    };
    BinaryImage::from_fn(img.width(), img.height(), |x, y| fg(img.get(x, y)))
}

/// Thresholds an image with the triangle method.
pub fn triangle_threshold(img: &GrayImage) -> Result<BinaryImage, PipelineError> {
    let split = triangle_split(&histogram(img))?;
    Ok(apply_split(img, split))
}
