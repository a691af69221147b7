//! Depth frames and the on-disk formats the pipeline reads and writes.
//!
//! * Depth input: binary PGM (`P5`, 16-bit big-endian) or headerless raw
//!   little-endian 16-bit samples with externally supplied dimensions.
//! * Detection reports: fixed-layout JSON, see [`write_report`].
//! * Annotated overlays: binary PPM (`P6`), see [`write_overlay`].

mod overlay;
mod pgm;
mod raw;
mod report;

pub use overlay::{depth_to_gray, write_overlay};
pub use pgm::{read_pgm, write_pgm, PgmDecoded};
pub use raw::{read_raw, write_raw};
pub use report::{write_report, write_report_line, DetectionReport, REPORT_SCHEMA};

use crate::depth_model::{RawDepth, RAW_MAX};
use crate::error::{Error, Result};

/// A rectangular grid of 11-bit raw disparity samples, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthFrame {
    width: usize,
    height: usize,
    samples: Vec<u16>,
}

impl DepthFrame {
    pub fn new(width: usize, height: usize, samples: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::Geometry(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|&s| s > RAW_MAX) {
            return Err(Error::Domain(format!(
                "sample {} at index {i} exceeds 11-bit range",
                samples[i]
            )));
        }
        Ok(DepthFrame {
            width,
            height,
            samples,
        })
    }

    /// A frame with every sample set to `value`.
    pub fn filled(width: usize, height: usize, value: RawDepth) -> Result<Self> {
        DepthFrame::new(width, height, vec![value.value(); width * height])
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
    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.samples[y * self.width + x]
    }

    /// Overwrites one sample.
    pub fn set(&mut self, x: usize, y: usize, value: RawDepth) {
        self.samples[y * self.width + x] = value.value();
    }

    /// Rotates the frame a quarter turn clockwise.
    ///
    /// Pixel `(x, y)` lands at `(height - 1 - y, x)`.
    pub fn rotated_cw(&self) -> DepthFrame {
        let (w, h) = (self.width, self.height);
        let mut samples = vec![0u16; w * h];
        for y in 0..h {
            for x in 0..w {
                let (nx, ny) = (h - 1 - y, x);
                samples[ny * h + nx] = self.samples[y * w + x];
            }
        }
        DepthFrame {
            width: h,
            height: w,
            samples,
        }
    }
}

/// Maps a pixel through [`DepthFrame::rotated_cw`] for a frame of the given height.
#[inline]
pub fn rotate_point_cw(x: usize, y: usize, height: usize) -> (usize, usize) {
    (height - 1 - y, x)
}

#[cfg(test)]
pub(crate) fn arb_frame() -> impl proptest::strategy::Strategy<Value = DepthFrame> {
    use proptest::prelude::*;
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        prop::collection::vec(0u16..=RAW_MAX, w * h)
            .prop_map(move |s| DepthFrame::new(w, h, s).unwrap())
    })
}
