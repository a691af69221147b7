use std::fmt::Write as _;

use crate::tracker::{HandId, HandReport};

/// JSON Schema describing the document produced by [`write_report`].
pub const REPORT_SCHEMA: &str = include_str!("../../schema/detection_report.schema.json");

/// Per-frame detection output.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub frame_index: u64,
    pub hands: Vec<HandReport>,
}

impl DetectionReport {
    pub fn empty(frame_index: u64) -> Self {
        DetectionReport {
            frame_index,
            hands: Vec::new(),
        }
    }
}

fn hand_rank(id: HandId) -> u8 {
    match id {
        HandId::Single => 0,
        HandId::Right => 1,
        HandId::Left => 2,
    }
}

/// Serializes a report as compact JSON with a fixed key order.
///
/// Hands are ordered Right before Left; fingertips by increasing x, then y.
/// Real values carry exactly two decimals.
pub fn write_report(report: &DetectionReport) -> Vec<u8> {
    let mut hands: Vec<&HandReport> = report.hands.iter().collect();
    hands.sort_by_key(|h| hand_rank(h.id));

    let mut s = String::new();
    write!(s, "{{\"frame_index\":{},\"hands\":[", report.frame_index).unwrap();
    for (i, hand) in hands.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let [r, g, b] = hand.overlay_color.0;
        write!(
            s,
            "{{\"id\":\"{}\",\"overlay_color\":[{r},{g},{b}],\"palm_center\":{{\"x\":{},\"y\":{}}},\"palm_radius_px\":{:.2},\"fingertips\":[",
            hand.id.as_str(),
            hand.palm.x,
            hand.palm.y,
            hand.palm.inradius_px,
        )
        .unwrap();
        let mut tips: Vec<_> = hand.fingertips.tips.iter().collect();
        tips.sort_by_key(|t| (t.x, t.y));
        for (j, tip) in tips.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            write!(
                s,
                "{{\"x\":{},\"y\":{},\"depth_cm\":{:.2}}}",
                tip.x,
                tip.y,
                tip.depth_cm.value()
            )
            .unwrap();
        }
        s.push_str("]}");
    }
    s.push_str("]}");
    s.into_bytes()
}

/// [`write_report`] followed by a newline, for JSON-lines streams.
pub fn write_report_line(report: &DetectionReport) -> Vec<u8> {
    let mut v = write_report(report);
    v.push(b'\n');
    v
}
