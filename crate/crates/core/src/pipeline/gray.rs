//! Image containers, grayscale conversion and background removal.
//!
//! Pixels are `f32` in `[0, 1]` to keep large scans affordable; statistics
//! that accumulate over many pixels run in `f64`.

use std::path::Path;

use crate::pipeline::PipelineError;

/// RGB image with channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    data: Vec<[f32; 3]>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, data: Vec<[f32; 3]>) -> Result<Self, PipelineError> {
        if width == 0 || height == 0 {
            return Err(PipelineError::EmptyImage);
        }
        if data.len() != width * height {
            return Err(PipelineError::DimensionMismatch {
                expected: (width, height),
                found: (data.len(), 1),
            });
        }
        Ok(ColorImage { width, height, data })
    }

    /// Loads any format the `image` crate understands and scales to `[0, 1]`.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let img = image::open(path)
            .map_err(|e| PipelineError::Image {
                path: path.to_path_buf(),
                msg: e.to_string(),
            })?
            .into_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data = img
            .pixels()
            .map(|p| {
                let s = 1.0 / 255.0;
                [p.0[0] as f32 * s, p.0[1] as f32 * s, p.0[2] as f32 * s]
            })
            .collect();
        ColorImage::new(w, h, data)
    }

    /// Writes an 8-bit PNG (used by the synthetic-scene generator).
    pub fn save_png(&self, path: &Path) -> Result<(), PipelineError> {
        let mut img = image::RgbImage::new(self.width as u32, self.height as u32);
        for (i, p) in self.data.iter().enumerate() {
            let to8 = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            img.put_pixel(
                (i % self.width) as u32,
                (i / self.width) as u32,
                image::Rgb([to8(p[0]), to8(p[1]), to8(p[2])]),
            );
        }
        img.save(path).map_err(|e| PipelineError::Image {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        self.data[y * self.width + x] = rgb;
    }
}

/// Single-channel image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self, PipelineError> {
        if width == 0 || height == 0 {
            return Err(PipelineError::EmptyImage);
        }
        if data.len() != width * height {
            return Err(PipelineError::DimensionMismatch {
                expected: (width, height),
                found: (data.len(), 1),
            });
        }
        if let Some(pos) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(PipelineError::InvalidPixel {
                x: pos % width,
                y: pos / width,
                value: data[pos],
            });
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Result<Self, PipelineError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

/// Rec. 601 luminance: `0.299 R + 0.587 G + 0.114 B`, clamped to `[0, 1]`
/// (the weights do not sum to exactly 1 in `f32`).
pub fn to_grayscale(img: &ColorImage) -> GrayImage {
    let data = (0..img.height)
        .flat_map(|y| (0..img.width).map(move |x| (x, y)))
        .map(|(x, y)| {
            let [r, g, b] = img.get(x, y);
            (0.299 * r + 0.587 * g + 0.114 * b).clamp(0.0, 1.0)
        })
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Estimates smooth background shading: block-mean downsample by `factor`,
/// median filter with a `window x window` kernel (replicate-padded at the
/// borders), bilinear upsample back to full size.
///
/// The median makes block means contaminated by stains fall back to their
/// neighborhood's level, so stains do not subtract themselves away.
pub fn estimate_background(
    img: &GrayImage,
    factor: usize,
    window: usize,
) -> Result<GrayImage, PipelineError> {
    if factor == 0 {
        return Err(PipelineError::InvalidConfig(
            "background downsample factor must be at least 1".into(),
        ));
    }
    if factor > img.width || factor > img.height {
        return Err(PipelineError::FactorTooLarge {
            factor,
            width: img.width,
            height: img.height,
        });
    }
    if window == 0 || window % 2 == 0 {
        return Err(PipelineError::InvalidConfig(format!(
            "median window must be odd and positive, got {window}"
        )));
    }
    let bw = img.width.div_ceil(factor);
    let bh = img.height.div_ceil(factor);
    // block means (f64 accumulation; blocks can hold millions of pixels)
    let mut blocks = vec![0.0f32; bw * bh];
    for by in 0..bh {
        for bx in 0..bw {
            let x1 = (bx * factor + factor).min(img.width);
            let y1 = (by * factor + factor).min(img.height);
            let mut sum = 0.0f64;
            let mut count = 0u64;
            for y in by * factor..y1 {
                for x in bx * factor..x1 {
                    sum += f64::from(img.get(x, y));
                    count += 1;
                }
            }
            blocks[by * bw + bx] = (sum / count as f64) as f32;
        }
    }
    // median filter on the block grid
    let half = (window / 2) as isize;
    let mut filtered = vec![0.0f32; bw * bh];
    let mut buf: Vec<f32> = Vec::with_capacity(window * window);
    for by in 0..bh as isize {
        for bx in 0..bw as isize {
            buf.clear();
            for dy in -half..=half {
                for dx in -half..=half {
                    let sx = (bx + dx).clamp(0, bw as isize - 1) as usize;
                    let sy = (by + dy).clamp(0, bh as isize - 1) as usize;
                    buf.push(blocks[sy * bw + sx]);
                }
            }
            buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
            filtered[by as usize * bw + bx as usize] = buf[buf.len() / 2];
        }
    }
    // bilinear upsample, block centers as sample points
    let mut out = vec![0.0f32; img.width * img.height];
    let f = factor as f64;
    for y in 0..img.height {
        let v = ((y as f64 + 0.5) / f - 0.5).clamp(0.0, bh as f64 - 1.0);
        let y0 = v.floor() as usize;
        let y1 = (y0 + 1).min(bh - 1);
        let ty = v - y0 as f64;
        for x in 0..img.width {
            let u = ((x as f64 + 0.5) / f - 0.5).clamp(0.0, bw as f64 - 1.0);
            let x0 = u.floor() as usize;
            let x1 = (x0 + 1).min(bw - 1);
            let tx = u - x0 as f64;
            let g = |xx: usize, yy: usize| f64::from(filtered[yy * bw + xx]);
            let top = g(x0, y0) + tx * (g(x1, y0) - g(x0, y0));
            let bot = g(x0, y1) + tx * (g(x1, y1) - g(x0, y1));
            out[y * img.width + x] = (top + ty * (bot - top)) as f32;
        }
    }
    GrayImage::new(img.width, img.height, out)
}

/// Stain-strength image: `max(background - image, 0)`, rescaled so the
/// strongest stain is 1. Dark-on-light stains become bright; an image with
/// nothing darker than its background comes back all zero.
pub fn subtract_background(img: &GrayImage, background: &GrayImage) -> Result<GrayImage, PipelineError> {
    if img.width != background.width || img.height != background.height {
        return Err(PipelineError::DimensionMismatch {
            expected: (img.width, img.height),
            found: (background.width, background.height),
        });
    }
    let mut diff: Vec<f32> = img
        .data
        .iter()
        .zip(&background.data)
        .map(|(v, b)| (b - v).max(0.0))
        .collect();
    let peak = diff.iter().cloned().fold(0.0f32, f32::max);
    if peak > 0.0 {
        for d in &mut diff {
            *d = (*d / peak).clamp(0.0, 1.0);
        }
    }
    GrayImage::new(img.width, img.height, diff)
}
