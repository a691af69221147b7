//! Binary rasters.

use crate::error::{Error, Result};

/// Row-major foreground flags.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    /// An all-background mask.
    pub fn new(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Geometry(format!(
                "mask {width}x{height} needs {} flags, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        BinaryMask {
            width,
            height,
            bits,
        }
    }

    /// Builds a mask from rows of text, `#` marking foreground.
    pub fn from_rows(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        BinaryMask::from_fn(width, height, |x, y| rows[y].as_bytes()[x] == b'#')
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Out-of-bounds coordinates read as background.
    #[inline]
    pub fn get_or_background(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Foreground pixels in raster order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Inclusive bounding box `(min_x, min_y, max_x, max_y)` of the foreground.
    pub fn bbox(&self) -> Option<(usize, usize, usize, usize)> {
        self.foreground().fold(None, |acc, (x, y)| match acc {
            None => Some((x, y, x, y)),
            Some((x0, y0, x1, y1)) => Some((x0.min(x), y0.min(y), x1.max(x), y1.max(y))),
        })
    }

    pub fn complement(&self) -> Self {
        self.map(|b| !b)
    }

    fn map(&self, f: impl Fn(bool) -> bool) -> Self {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| f(b)).collect(),
        }
    }

    fn zip(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Self {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "mask dimensions differ"
        );
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn and(&self, other: &BinaryMask) -> Self {
        self.zip(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BinaryMask) -> Self {
        self.zip(other, |a, b| a || b)
    }

    /// Set difference `self \ other`.
    pub fn and_not(&self, other: &BinaryMask) -> Self {
        self.zip(other, |a, b| a && !b)
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Window starting at `(x0, y0)`; parts outside `self` are background.
    pub fn crop(&self, x0: i64, y0: i64, width: usize, height: usize) -> Self {
        BinaryMask::from_fn(width, height, |x, y| {
            self.get_or_background(x0 + x as i64, y0 + y as i64)
        })
    }

    /// Surrounds the mask with `n` background pixels on every side.
    pub fn pad(&self, n: usize) -> Self {
        self.crop(
            -(n as i64),
            -(n as i64),
            self.width + 2 * n,
            self.height + 2 * n,
        )
    }

    /// Quarter turn clockwise; `(x, y)` lands at `(height - 1 - y, x)`.
    pub fn rotated_cw(&self) -> Self {
        let h = self.height;
        BinaryMask::from_fn(h, self.width, |nx, ny| self.get(ny, h - 1 - nx))
    }
}
