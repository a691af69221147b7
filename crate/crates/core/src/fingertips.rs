//! Fingertip localisation: within each finger mask the tip is the sample
//! closest to the camera.
//!
//! The minimum is taken over raw values. Calibration is strictly increasing
//! on the valid domain, so the argmin is the same as over centimetres.

use crate::depth_model::{DepthCm, DepthModel};
use crate::error::{Error, Result};
use crate::frame_io::DepthFrame;
use crate::segmentation::Blob;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fingertip {
    pub x: usize,
    pub y: usize,
    pub depth_cm: DepthCm,
    /// Position of the source finger mask in the detector input.
    pub finger_index: usize,
}

/// Tips of one hand, ordered by `finger_index`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FingertipSet {
    pub tips: Vec<Fingertip>,
}

impl FingertipSet {
    pub fn len(&self) -> usize {
        self.tips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tips.is_empty()
    }
}

fn valid_samples<'a>(
    frame: &'a DepthFrame,
    model: &'a DepthModel,
    finger: &'a Blob,
) -> impl Iterator<Item = (u16, usize, usize)> + 'a {
    finger
        .pixels
        .iter()
        .map(|&(x, y)| (frame.get(x, y), y, x))
        .filter(|&(raw, _, _)| model.is_valid(raw))
}

/// Minimum-depth pixel of one finger mask, ties broken by smallest y then x.
/// Sentinel samples are skipped.
pub fn detect_fingertip(
    frame: &DepthFrame,
    model: &DepthModel,
    finger: &Blob,
    finger_index: usize,
) -> Result<Fingertip> {
    let (raw, y, x) = valid_samples(frame, model, finger)
        .min()
        .ok_or(Error::NoValidDepth)?;
    Ok(Fingertip {
        x,
        y,
        depth_cm: DepthCm(model.depth_of(raw).expect("valid raw")),
        finger_index,
    })
}

/// One tip per finger mask; fingers without any valid sample are left out.
pub fn detect_fingertips(frame: &DepthFrame, model: &DepthModel, fingers: &[Blob]) -> FingertipSet {
    let tips = fingers
        .iter()
        .enumerate()
        .filter_map(
            |(i, finger)| match detect_fingertip(frame, model, finger, i) {
                Ok(t) => Some(t),
                Err(e) => {
                    log::debug!("finger {i} skipped: {e}");
                    None
                }
            },
        )
        .collect();
    FingertipSet { tips }
}

/// Gap between the two smallest distinct raw depths in a finger mask.
/// Zero means the minimum is shared by several pixels.
pub fn tips_toward_camera_margin(
    frame: &DepthFrame,
    model: &DepthModel,
    finger: &Blob,
) -> Result<u16> {
    let mut raws: Vec<u16> = valid_samples(frame, model, finger)
        .map(|(r, _, _)| r)
        .collect();
    if raws.len() < 2 {
        return Err(Error::NoValidDepth);
    }
    raws.sort_unstable();
    let min = raws[0];
    if raws[1] == min {
        return Ok(0);
    }
    Ok(raws[1] - min)
}
