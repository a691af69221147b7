//! Binary morphology with closed-disk structuring elements, and the palm /
//! finger split built on it.
//!
//! Pixels outside the mask are background for both erosion and dilation.
//! Each operator works one disk row at a time using per-row prefix counts,
//! so the cost is `O(pixels * (2r + 1))` rather than `O(pixels * r^2)`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::segmentation::{connected_components, Blob};

/// Most fingers a hand can report.
pub const MAX_FINGERS: usize = 5;

/// Default fraction of the palm inradius used as the opening radius.
pub const DEFAULT_RADIUS_FACTOR: f64 = 0.7;

/// Closed digital disk `{(dx, dy) : dx^2 + dy^2 <= r^2}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiskElement {
    radius: u32,
    /// Row half-widths, indexed by `dy + radius`.
    half_widths: Vec<u32>,
}

impl DiskElement {
    pub fn new(radius: u32) -> Self {
        let r = i64::from(radius);
        let half_widths = (-r..=r)
            .map(|dy| {
                let rem = (r * r - dy * dy) as u64;
                isqrt(rem) as u32
            })
            .collect();
        DiskElement {
            radius,
            half_widths,
        }
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Rows as `(dy, half_width)`.
    pub fn rows(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let r = i64::from(self.radius);
        self.half_widths
            .iter()
            .enumerate()
            .map(move |(i, &hw)| (i as i64 - r, i64::from(hw)))
    }

    /// All member offsets, row by row.
    pub fn offsets(&self) -> Vec<(i64, i64)> {
        self.rows()
            .flat_map(|(dy, hw)| (-hw..=hw).map(move |dx| (dx, dy)))
            .collect()
    }
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Per-row prefix counts of foreground pixels, `width + 1` entries per row.
fn row_prefix(mask: &BinaryMask) -> Vec<u32> {
    let (w, h) = (mask.width(), mask.height());
    let mut pre = vec![0u32; (w + 1) * h];
    for y in 0..h {
        let row = &mut pre[y * (w + 1)..(y + 1) * (w + 1)];
        for x in 0..w {
            row[x + 1] = row[x] + u32::from(mask.get(x, y));
        }
    }
    pre
}

pub fn erode(mask: &BinaryMask, elem: &DiskElement) -> BinaryMask {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let pre = row_prefix(mask);
    let stride = (w + 1) as usize;
    BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        if !mask.get(x, y) {
            return false;
        }
        let (x, y) = (x as i64, y as i64);
        elem.rows().all(|(dy, hw)| {
            let yy = y + dy;
            let (lo, hi) = (x - hw, x + hw);
            if yy < 0 || yy >= h || lo < 0 || hi >= w {
                return false;
            }
            let base = yy as usize * stride;
            pre[base + hi as usize + 1] - pre[base + lo as usize] == (2 * hw + 1) as u32
        })
    })
}

pub fn dilate(mask: &BinaryMask, elem: &DiskElement) -> BinaryMask {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let pre = row_prefix(mask);
    let stride = (w + 1) as usize;
    BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        let (x, y) = (x as i64, y as i64);
        elem.rows().any(|(dy, hw)| {
            let yy = y + dy;
            if yy < 0 || yy >= h {
                return false;
            }
            let lo = (x - hw).max(0);
            let hi = (x + hw).min(w - 1);
            if lo > hi {
                return false;
            }
            let base = yy as usize * stride;
            pre[base + hi as usize + 1] > pre[base + lo as usize]
        })
    })
}

/// Erosion followed by dilation with the same element.
pub fn open(mask: &BinaryMask, elem: &DiskElement) -> BinaryMask {
    dilate(&erode(mask, elem), elem)
}

/// Palm body of a hand mask: its opening by a disk of `radius`, which
/// removes limbs narrower than the disk.
pub fn extract_palm(hand: &BinaryMask, radius: u32) -> Result<BinaryMask> {
    if radius < 1 {
        return Err(Error::Config(
            "palm opening radius must be at least 1".into(),
        ));
    }
    let palm = open(hand, &DiskElement::new(radius));
    if palm.is_empty() {
        return Err(Error::EmptyResult(format!(
            "opening with radius {radius} removed the whole hand"
        )));
    }
    Ok(palm)
}

/// Opening radius for a palm of the given inradius: `max(1, round(factor * inradius))`.
pub fn auto_radius(palm_inradius: f64, factor: f64) -> Result<u32> {
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::Config(format!(
            "radius factor must lie in (0, 1), got {factor}"
        )));
    }
    if !(palm_inradius >= 1.0) {
        return Err(Error::DegenerateHand(format!(
            "palm inradius {palm_inradius} below one pixel"
        )));
    }
    Ok(((factor * palm_inradius).round() as u32).max(1))
}

/// `max(4, round(0.05 * hand_area / 5))`.
pub fn default_min_finger_area(hand_area: usize) -> usize {
    ((0.05 * hand_area as f64 / MAX_FINGERS as f64).round() as usize).max(4)
}

/// Finger masks: components of `hand \ palm` with at least `min_finger_area`
/// pixels, at most the five largest, ordered by the angle of their centroid
/// around `palm_center` (counter-clockwise on screen from +x).
pub fn finger_masks(
    hand: &BinaryMask,
    palm: &BinaryMask,
    min_finger_area: usize,
    palm_center: (f64, f64),
) -> Vec<Blob> {
    let rest = hand.and_not(palm);
    let mut fingers: Vec<Blob> = connected_components(&rest)
        .into_iter()
        .filter(|b| b.area() >= min_finger_area)
        .collect();
    if fingers.len() > MAX_FINGERS {
        fingers.sort_by(|a, b| b.area().cmp(&a.area()));
        fingers.truncate(MAX_FINGERS);
    }
    let angle = |b: &Blob| {
        let a = (palm_center.1 - b.centroid.1).atan2(b.centroid.0 - palm_center.0);
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    };
    fingers.sort_by(|a, b| angle(a).total_cmp(&angle(b)).then(a.label.cmp(&b.label)));
    fingers
}
