//! Moment-based ellipse fitting and fit-quality metrics.

use std::collections::HashSet;

use crate::pipeline::regions::Region;
use crate::pipeline::PipelineError;
use crate::types::{wrap_axial, Ellipse};

/// Fits an ellipse to a region by matching its first and second central
/// moments: center at the centroid, axes `2 * sqrt(lambda_i)` from the
/// covariance eigenvalues, orientation `atan2(2 m11, m20 - m02) / 2`.
///
/// The `2 sqrt(lambda)` scaling makes a filled disc of radius `R` come back
/// with `a = b = R` (a uniform disc has second moment `R^2 / 4`).
pub fn fit_ellipse_moments(region: &Region) -> Result<Ellipse, PipelineError> {
    let n = region.area();
    if n < 3 {
        return Err(PipelineError::DegenerateRegion {
            area: n,
            detail: "fewer than 3 pixels".into(),
        });
    }
    let (cx, cy) = region.centroid();
    let (mut m20, mut m02, mut m11) = (0.0f64, 0.0f64, 0.0f64);
    for &(x, y) in &region.pixels {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        m20 += dx * dx;
        m02 += dy * dy;
        m11 += dx * dy;
    }
    let nf = n as f64;
    m20 /= nf;
    m02 /= nf;
    m11 /= nf;
    let half_tr = (m20 + m02) / 2.0;
    let disc = ((m20 - m02) / 2.0).hypot(m11);
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if !(l2 > 0.0) || l2 <= l1 * 1e-12 {
        return Err(PipelineError::DegenerateRegion {
            area: n,
            detail: "pixels are collinear".into(),
        });
    }
    let phi = wrap_axial(0.5 * (2.0 * m11).atan2(m20 - m02));
    Ellipse::new(cx, cy, 2.0 * l1.sqrt(), 2.0 * l2.sqrt(), phi).map_err(|e| {
        PipelineError::DegenerateRegion {
            area: n,
            detail: e.to_string(),
        }
    })
}

/// Pixels whose centers fall inside the ellipse (on-boundary included).
pub fn rasterize_ellipse(e: &Ellipse) -> Vec<(i32, i32)> {
    let reach = e.a + 1.0;
    let x0 = (e.x - reach).floor() as i32;
    let x1 = (e.x + reach).ceil() as i32;
    let y0 = (e.y - reach).floor() as i32;
    let y1 = (e.y + reach).ceil() as i32;
    let (c, s) = (e.phi.cos(), e.phi.sin());
    let mut pixels = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = x as f64 - e.x;
            let dy = y as f64 - e.y;
            let u = (dx * c + dy * s) / e.a;
            let v = (-dx * s + dy * c) / e.b;
            if u * u + v * v <= 1.0 {
                pixels.push((x, y));
            }
        }
    }
    pixels
}

/// How well an ellipse reproduces the region it was fitted to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitQuality {
    /// Jaccard dissimilarity of the filled pixel sets:
    /// `1 - |A intersect B| / |A union B|`; 0 is a perfect match.
    pub jaccard_dissimilarity: f64,
    /// Symmetric Hausdorff distance between the two contours, pixels.
    pub hausdorff: f64,
}

/// Compares a region against the rasterization of an ellipse.
pub fn fit_quality(region: &Region, e: &Ellipse) -> FitQuality {
    let raster = Region::from_pixels(rasterize_ellipse(e));
    let a: HashSet<(i32, i32)> = region.pixels.iter().copied().collect();
    let b: HashSet<(i32, i32)> = raster.pixels.iter().copied().collect();
    let inter = a.intersection(&b).count();
    let union = a.len() + b.len() - inter;
    let jaccard_dissimilarity = if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    };
    FitQuality {
        jaccard_dissimilarity,
        hausdorff: hausdorff(&region.contour, &raster.contour),
    }
}

/// Symmetric Hausdorff distance between two point sets, in pixels.
/// Empty sets are infinitely far from non-empty ones.
pub fn hausdorff(a: &[(i32, i32)], b: &[(i32, i32)]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let directed = |from: &[(i32, i32)], to: &[(i32, i32)]| -> f64 {
        let mut worst = 0i64;
        for &(px, py) in from {
            let mut best = i64::MAX;
            for &(qx, qy) in to {
                let (dx, dy) = (i64::from(px - qx), i64::from(py - qy));
                let d = dx * dx + dy * dy;
                if d < best {
                    best = d;
                    if best == 0 {
                        break;
                    }
                }
            }
            worst = worst.max(best);
        }
        worst as f64
    };
    directed(a, b).max(directed(b, a)).sqrt()
}
