use crate::depth_model::SENTINEL;
use crate::tracker::{HandReport, Rgb};

use super::DepthFrame;

/// Half extent of the palm-centre cross; the cross spans 7 pixels each way.
const CROSS_ARM: i64 = 3;

/// Gray level for a raw sample: nearest valid depth is brightest,
/// sentinel and out-of-range samples are black.
#[inline]
pub fn depth_to_gray(raw: u16, raw_valid_max: u16) -> u8 {
    if raw == SENTINEL || raw > raw_valid_max || raw_valid_max == 0 {
        return 0;
    }
    let max = u32::from(raw_valid_max);
    let scaled = (u32::from(raw) * 255 + max / 2) / max;
    255 - scaled as u8
}

struct Canvas {
    width: usize,
    height: usize,
    rgb: Vec<u8>,
}

impl Canvas {
    fn put(&mut self, x: i64, y: i64, color: Rgb) {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return;
        }
        let i = 3 * (y as usize * self.width + x as usize);
        self.rgb[i..i + 3].copy_from_slice(&color.0);
    }
}

/// Renders the depth frame as a `P6` image with per-hand annotations.
///
/// Fingertips are filled 3x3 squares, palm centres a cross, both in the
/// hand's overlay colour.
pub fn write_overlay(frame: &DepthFrame, hands: &[HandReport], raw_valid_max: u16) -> Vec<u8> {
    let mut canvas = Canvas {
        width: frame.width(),
        height: frame.height(),
        rgb: frame
            .samples()
            .iter()
            .flat_map(|&s| {
                let g = depth_to_gray(s, raw_valid_max);
                [g, g, g]
            })
            .collect(),
    };
    for hand in hands {
        let color = hand.overlay_color;
        for tip in &hand.fingertips.tips {
            let (tx, ty) = (tip.x as i64, tip.y as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    canvas.put(tx + dx, ty + dy, color);
                }
            }
        }
        let (cx, cy) = (hand.palm.x as i64, hand.palm.y as i64);
        for d in -CROSS_ARM..=CROSS_ARM {
            canvas.put(cx + d, cy, color);
            canvas.put(cx, cy + d, color);
        }
    }
    let header = format!("P6\n{} {}\n255\n", canvas.width, canvas.height);
    let mut out = header.into_bytes();
    out.extend_from_slice(&canvas.rgb);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth_model::DepthCm;
    use crate::fingertips::{Fingertip, FingertipSet};
    use crate::palm_center::PalmCenter;
    use crate::tracker::HandId;

    fn pixels(ppm: &[u8], w: usize, h: usize) -> &[u8] {
        &ppm[ppm.len() - 3 * w * h..]
    }

    fn hand(id: HandId, palm: (usize, usize), tip: (usize, usize)) -> HandReport {
        HandReport {
            id,
            overlay_color: id.color(),
            palm: PalmCenter {
                x: palm.0,
                y: palm.1,
                inradius_px: 4.0,
            },
            fingertips: FingertipSet {
                tips: vec![Fingertip {
                    x: tip.0,
                    y: tip.1,
                    depth_cm: DepthCm(70.0),
                    finger_index: 0,
                }],
            },
            blob_area: 50,
        }
    }

    #[test]
    fn gray_mapping() {
        assert_eq!(depth_to_gray(0, 1100), 255);
        assert_eq!(depth_to_gray(1100, 1100), 0);
        assert_eq!(depth_to_gray(2047, 1100), 0);
        assert_eq!(depth_to_gray(1500, 1100), 0);
        assert!(depth_to_gray(300, 1100) > depth_to_gray(600, 1100));
    }

    #[test]
    fn no_hands_is_grayscale() {
        let f = DepthFrame::new(3, 2, vec![0, 550, 1100, 2047, 10, 20]).unwrap();
        let ppm = write_overlay(&f, &[], 1100);
        assert!(ppm.starts_with(b"P6\n3 2\n255\n"));
        let px = pixels(&ppm, 3, 2);
        for (i, &s) in f.samples().iter().enumerate() {
            let g = depth_to_gray(s, 1100);
            assert_eq!(&px[3 * i..3 * i + 3], &[g, g, g]);
        }
    }

    #[test]
    fn marks_in_hand_colours_only() {
        let (w, h) = (40, 20);
        let f = DepthFrame::new(w, h, vec![800; w * h]).unwrap();
        let hands = [
            hand(HandId::Right, (30, 10), (30, 2)),
            hand(HandId::Left, (8, 10), (8, 2)),
        ];
        let base = write_overlay(&f, &[], 1100);
        let ppm = write_overlay(&f, &hands, 1100);
        let (a, b) = (pixels(&base, w, h), pixels(&ppm, w, h));
        let mut changed = 0;
        for i in 0..w * h {
            if a[3 * i..3 * i + 3] != b[3 * i..3 * i + 3] {
                changed += 1;
                let (x, y) = (i % w, i / w);
                let expect = if x >= 20 { Rgb::WHITE } else { Rgb::PINK };
                assert_eq!(&b[3 * i..3 * i + 3], &expect.0, "pixel {x},{y}");
            }
        }
        // two 3x3 squares and two 13-pixel crosses per side
        assert_eq!(changed, 2 * (9 + 13));
    }

    #[test]
    fn clips_marks_at_border() {
        let f = DepthFrame::new(2, 2, vec![0; 4]).unwrap();
        let ppm = write_overlay(&f, &[hand(HandId::Single, (0, 0), (1, 1))], 1100);
        assert_eq!(pixels(&ppm, 2, 2), &[255u8; 12][..]);
    }
}
