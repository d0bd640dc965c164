//! Binary images and morphological smoothing.

use serde::Deserialize;

/// Bit mask over an image grid. Out-of-bounds reads are background.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryImage {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut img = BinaryImage::new(width, height);
        for y in 0..height {
            for x in 0..width {
                img.data[y * width + x] = f(x, y);
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.data[y * self.width + x]
    }

    /// Signed-coordinate read; anything outside is background.
    pub fn get_i(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && self.get(x as usize, y as usize)
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// True if every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.data.iter().zip(&other.data).all(|(a, b)| !a || *b)
    }
}

/// 3x3 structuring element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuringElement {
    /// Center plus 4-neighbors (a diamond).
    #[default]
    Cross3,
    /// Full 3x3 square.
    Square3,
}

impl StructuringElement {
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            StructuringElement::Cross3 => &[(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)],
            StructuringElement::Square3 => &[
                (0, 0),
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
            ],
        }
    }
}

/// Erosion: a pixel survives only if the whole element fits in foreground.
/// The image border counts as background, so shapes touching it shrink.
pub fn erode(img: &BinaryImage, se: StructuringElement) -> BinaryImage {
    BinaryImage::from_fn(img.width, img.height, |x, y| {
        se.offsets()
            .iter()
            .all(|&(dx, dy)| img.get_i(x as isize + dx, y as isize + dy))
    })
}

/// Dilation: a pixel turns on if the element reaches any foreground pixel.
pub fn dilate(img: &BinaryImage, se: StructuringElement) -> BinaryImage {
    BinaryImage::from_fn(img.width, img.height, |x, y| {
        se.offsets()
            .iter()
            .any(|&(dx, dy)| img.get_i(x as isize + dx, y as isize + dy))
    })
}

/// Morphological opening: `iterations` erosions, then `iterations`
/// dilations. Removes specks and thin bridges narrower than roughly twice
/// the iteration count while keeping compact blobs close to their original
/// outline. The result is always a subset of the input.
pub fn morph_smooth(img: &BinaryImage, iterations: usize, se: StructuringElement) -> BinaryImage {
    let mut out = img.clone();
    for _ in 0..iterations {
        out = erode(&out, se);
    }
    for _ in 0..iterations {
        out = dilate(&out, se);
    }
    out
}
