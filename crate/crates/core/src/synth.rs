//! Synthetic data generators for tests, benchmarks, and demos.
//!
//! Everything here is seedable: pass a fixed RNG and the output is
//! reproducible bit for bit.

use nalgebra::{Cholesky, Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::pipeline::{rasterize_ellipse, ColorImage};
use crate::types::Ellipse;

/// Draws `n` points from a bivariate normal with the given mean and
/// covariance. The covariance must be symmetric positive definite.
pub fn sample_gaussian2<R: Rng>(
    rng: &mut R,
    mu: Vector2<f64>,
    sigma: Matrix2<f64>,
    n: usize,
) -> Vec<Vector2<f64>> {
    let chol = Cholesky::new(sigma).expect("covariance must be positive definite");
    let l = chol.l();
    (0..n)
        .map(|_| {
            let z = Vector2::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            mu + l * z
        })
        .collect()
}

/// Layout and shading of a rendered test scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    /// Number of elliptical stains to place.
    pub count: usize,
    /// Semi-minor axis range, pixels.
    pub b_range: (f64, f64),
    /// Axis ratio `a / b` range; 1 is a circle.
    pub ratio_range: (f64, f64),
    /// Clear border, pixels.
    pub margin: f64,
    /// Background gray level.
    pub background: f32,
    /// Stain gray level (darker than the background).
    pub stain: f32,
    /// Linear left-to-right darkening subtracted across the image width;
    /// 0 keeps the background flat.
    pub horizontal_shade: f32,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            width: 800,
            height: 800,
            count: 22,
            b_range: (10.0, 14.0),
            ratio_range: (1.4, 2.1),
            margin: 50.0,
            background: 0.92,
            stain: 0.12,
            horizontal_shade: 0.0,
        }
    }
}

/// Places `cfg.count` random ellipses on a jittered grid so that no two
/// stains touch and none crosses the margin.
///
/// # Panics
///
/// Panics when the scene is too small to hold `count` stains of the
/// requested size without risking contact.
pub fn scatter_ellipses<R: Rng>(rng: &mut R, cfg: &SceneConfig) -> Vec<Ellipse> {
    assert!(cfg.count > 0, "count must be positive");
    let cols = (cfg.count as f64).sqrt().ceil() as usize;
    let rows = cfg.count.div_ceil(cols);
    let usable_w = cfg.width as f64 - 2.0 * cfg.margin;
    let usable_h = cfg.height as f64 - 2.0 * cfg.margin;
    let cell_w = usable_w / cols as f64;
    let cell_h = usable_h / rows as f64;
    let a_max = cfg.b_range.1 * cfg.ratio_range.1;
    let jitter_x = cell_w / 2.0 - a_max - 2.0;
    let jitter_y = cell_h / 2.0 - a_max - 2.0;
    assert!(
        jitter_x > 0.0 && jitter_y > 0.0,
        "cells of {cell_w:.0}x{cell_h:.0} px cannot hold stains up to {a_max:.0} px"
    );
    (0..cfg.count)
        .map(|i| {
            let (row, col) = (i / cols, i % cols);
            let cx = cfg.margin
                + (col as f64 + 0.5) * cell_w
                + rng.random_range(-jitter_x..jitter_x);
            let cy = cfg.margin
                + (row as f64 + 0.5) * cell_h
                + rng.random_range(-jitter_y..jitter_y);
            let b = rng.random_range(cfg.b_range.0..cfg.b_range.1);
            let a = b * rng.random_range(cfg.ratio_range.0..cfg.ratio_range.1);
            let phi = rng.random_range(0.0..std::f64::consts::PI);
            Ellipse::new(cx, cy, a, b, phi).expect("generated axes are positive")
        })
        .collect()
}

/// Renders stains (plus any extra foreground pixels) onto a shaded card.
pub fn render_scene(
    ellipses: &[Ellipse],
    extra_pixels: &[(i32, i32)],
    cfg: &SceneConfig,
) -> ColorImage {
    let shade_step = if cfg.width > 1 {
        cfg.horizontal_shade / (cfg.width - 1) as f32
    } else {
        0.0
    };
    let data = (0..cfg.width * cfg.height)
        .map(|i| {
            let x = (i % cfg.width) as f32;
            let level = (cfg.background - shade_step * x).clamp(0.0, 1.0);
            [level; 3]
        })
        .collect();
    let mut img = ColorImage::new(cfg.width, cfg.height, data).expect("non-empty scene");
    let mut paint = |x: i32, y: i32| {
        if x >= 0 && y >= 0 && (x as usize) < cfg.width && (y as usize) < cfg.height {
            img.set(x as usize, y as usize, [cfg.stain; 3]);
        }
    };
    for e in ellipses {
        for (x, y) in rasterize_ellipse(e) {
            paint(x, y);
        }
    }
    for &(x, y) in extra_pixels {
        paint(x, y);
    }
    img
}

/// Pixels of a Z-shaped stroke: two horizontal bars of length `arm` joined
/// by a diagonal, all `thickness` pixels thick. Useful as a deliberately
/// non-elliptical blob; `thickness >= 9` survives the default morphological
/// opening. The top-left corner of the bounding box lands at `origin`.
pub fn zigzag_pixels(origin: (i32, i32), arm: i32, thickness: i32) -> Vec<(i32, i32)> {
    assert!(arm > 2 * thickness && thickness > 0, "degenerate zigzag");
    let (ox, oy) = origin;
    let mut pixels = Vec::new();
    for y in 0..arm {
        for x in 0..arm {
            let top = y < thickness;
            let bottom = y >= arm - thickness;
            // diagonal from the top-right corner down to the bottom-left
            let diag = (x - (arm - 1 - y)).abs() <= thickness / 2;
            if top || bottom || diag {
                pixels.push((ox + x, oy + y));
            }
        }
    }
    pixels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{label_regions, BinaryImage};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_samples_match_requested_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mu = Vector2::new(1.0, -2.0);
        let sigma = Matrix2::new(4.0, 1.2, 1.2, 1.0);
        let pts = sample_gaussian2(&mut rng, mu, sigma, 50_000);
        let n = pts.len() as f64;
        let mean = pts.iter().sum::<Vector2<f64>>() / n;
        assert_relative_eq!(mean.x, 1.0, epsilon = 0.05);
        assert_relative_eq!(mean.y, -2.0, epsilon = 0.05);
        let mut cov = Matrix2::zeros();
        for p in &pts {
            let d = p - mean;
            cov += d * d.transpose();
        }
        cov /= n;
        assert_relative_eq!(cov[(0, 0)], 4.0, epsilon = 0.1);
        assert_relative_eq!(cov[(0, 1)], 1.2, epsilon = 0.1);
        assert_relative_eq!(cov[(1, 1)], 1.0, epsilon = 0.05);
    }

    #[test]
    fn gaussian_sampling_is_reproducible() {
        let mu = Vector2::new(0.0, 0.0);
        let sigma = Matrix2::identity();
        let a = sample_gaussian2(&mut ChaCha8Rng::seed_from_u64(11), mu, sigma, 100);
        let b = sample_gaussian2(&mut ChaCha8Rng::seed_from_u64(11), mu, sigma, 100);
        assert_eq!(a, b);
    }

    #[test]
    fn scattered_ellipses_stay_apart_and_inside() {
        let cfg = SceneConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ellipses = scatter_ellipses(&mut rng, &cfg);
        assert_eq!(ellipses.len(), cfg.count);
        for e in &ellipses {
            assert!(e.x - e.a >= 0.0 && e.x + e.a <= cfg.width as f64);
            assert!(e.y - e.a >= 0.0 && e.y + e.a <= cfg.height as f64);
            assert!(e.a >= e.b && e.b >= cfg.b_range.0);
        }
        for (i, a) in ellipses.iter().enumerate() {
            for b in &ellipses[i + 1..] {
                let d = (a.x - b.x).hypot(a.y - b.y);
                assert!(d > a.a + b.a, "stains {d:.1} px apart overlap");
            }
        }
    }

    #[test]
    fn rendered_scene_has_dark_stains_on_light_card() {
        let cfg = SceneConfig {
            width: 300,
            height: 300,
            count: 2,
            margin: 30.0,
            ..SceneConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ellipses = scatter_ellipses(&mut rng, &cfg);
        let img = render_scene(&ellipses, &[], &cfg);
        let e = &ellipses[0];
        assert_eq!(img.get(e.x as usize, e.y as usize)[0], cfg.stain);
        assert_eq!(img.get(2, 2)[0], cfg.background);
    }

    #[test]
    fn zigzag_is_one_connected_blob() {
        let pixels = zigzag_pixels((0, 0), 60, 9);
        let img = BinaryImage::from_fn(70, 70, |x, y| pixels.contains(&(x as i32, y as i32)));
        let regions = label_regions(&img, 1);
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].area(), pixels.len());
    }
}
