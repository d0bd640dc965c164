//! Connected-component labeling.
//!
//! Regions are 8-connected foreground components; a region's contour is the
//! set of its pixels with at least one 4-neighbor outside the region (the
//! image border counts as outside).

use std::collections::HashSet;

use crate::pipeline::morphology::BinaryImage;

/// One connected stain candidate. Coordinates are signed so synthetic
/// regions can live anywhere; labeled image regions are non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// All pixels, sorted by `(y, x)`.
    pub pixels: Vec<(i32, i32)>,
    /// Boundary pixels, sorted by `(y, x)`.
    pub contour: Vec<(i32, i32)>,
}

impl Region {
    /// Builds a region from an arbitrary pixel set (deduplicated), computing
    /// the contour with the same 4-adjacency rule the labeler uses.
    pub fn from_pixels(pixels: impl IntoIterator<Item = (i32, i32)>) -> Region {
        let set: HashSet<(i32, i32)> = pixels.into_iter().collect();
        let mut pixels: Vec<(i32, i32)> = set.iter().copied().collect();
        pixels.sort_by_key(|&(x, y)| (y, x));
        let contour = contour_of(&pixels, &set);
        Region { pixels, contour }
    }

    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn centroid(&self) -> (f64, f64) {
        let n = self.pixels.len() as f64;
        let (sx, sy) = self
            .pixels
            .iter()
            .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x as f64, sy + y as f64));
        (sx / n, sy / n)
    }

    pub fn translated(&self, dx: i32, dy: i32) -> Region {
        Region {
            pixels: self.pixels.iter().map(|&(x, y)| (x + dx, y + dy)).collect(),
            contour: self.contour.iter().map(|&(x, y)| (x + dx, y + dy)).collect(),
        }
    }
}

fn contour_of(pixels: &[(i32, i32)], set: &HashSet<(i32, i32)>) -> Vec<(i32, i32)> {
    pixels
        .iter()
        .filter(|&&(x, y)| {
            [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]
                .iter()
                .any(|q| !set.contains(q))
        })
        .copied()
        .collect()
}

/// Finds all 8-connected foreground regions with at least `min_area`
/// pixels, in scan order of their topmost-leftmost pixel.
pub fn label_regions(img: &BinaryImage, min_area: usize) -> Vec<Region> {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut regions = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for start_y in 0..h {
        for start_x in 0..w {
            if !img.get(start_x, start_y) || seen[start_y * w + start_x] {
                continue;
            }
            let mut pixels: Vec<(i32, i32)> = Vec::new();
            seen[start_y * w + start_x] = true;
            stack.push((start_x, start_y));
            while let Some((x, y)) = stack.pop() {
                pixels.push((x as i32, y as i32));
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (nx, ny) = (x as isize + dx, y as isize + dy);
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if img.get(nx, ny) && !seen[ny * w + nx] {
                            seen[ny * w + nx] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            if pixels.len() >= min_area {
                pixels.sort_by_key(|&(x, y)| (y, x));
                let set: HashSet<(i32, i32)> = pixels.iter().copied().collect();
                let contour = contour_of(&pixels, &set);
                regions.push(Region { pixels, contour });
            }
        }
    }
    regions
}
