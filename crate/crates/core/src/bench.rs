//! Accuracy metrics of detections against synthetic ground truth.

use rayon::prelude::*;
use serde::Serialize;

use crate::depth_model::DepthModel;
use crate::error::Result;
use crate::pipeline::{analyze_frame, PipelineConfig};
use crate::synth::{render_scene, GroundTruth, SceneSpec};
use crate::tracker::{HandReport, TrackState};

/// Width of one orientation bin, degrees.
pub const ORIENTATION_BIN_DEG: f64 = 45.0;

/// Fraction of the true palm radius a palm centre may be off by.
pub const PALM_TOLERANCE: f64 = 0.25;

/// Largest allowed distance between a detected tip and its true tip.
pub fn tip_tolerance(finger_width: f64) -> f64 {
    (finger_width / 2.0).max(2.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ErrorStats {
    pub count: usize,
    pub mean: Option<f64>,
    pub max: Option<f64>,
}

impl ErrorStats {
    fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return ErrorStats::default();
        }
        ErrorStats {
            count: values.len(),
            mean: Some(values.iter().sum::<f64>() / values.len() as f64),
            max: Some(values.iter().copied().fold(f64::MIN, f64::max)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OrientationBin {
    pub from_deg: f64,
    pub to_deg: f64,
    pub hands: usize,
    pub tips_true: usize,
    pub tips_detected: usize,
    pub tips_matched: usize,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub scenes: usize,
    pub hands_true: usize,
    pub hands_detected: usize,
    pub hands_matched: usize,
    pub tips_true: usize,
    pub tips_detected: usize,
    /// Paired tips within tolerance.
    pub tips_matched: usize,
    /// Paired tips beyond tolerance.
    pub tips_out_of_tolerance: usize,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    /// Distance of every paired tip to its true tip, pixels.
    pub tip_error_px: ErrorStats,
    /// Palm-centre error over the true palm radius, per matched hand.
    pub palm_error_ratio: ErrorStats,
    pub palm_within_tolerance: usize,
    pub palm_fraction: Option<f64>,
    pub by_orientation: Vec<OrientationBin>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Pairing of `rows` to `cols` of the largest possible size with the
/// smallest total cost. Exhaustive; intended for at most a handful of items.
pub fn min_cost_pairs(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    fn search(
        row: usize,
        cost: &[Vec<f64>],
        cols: usize,
        used: &mut Vec<bool>,
        current: &mut Vec<(usize, usize)>,
        acc: f64,
        best: &mut (usize, f64, Vec<(usize, usize)>),
    ) {
        if row == cost.len() {
            let better = current.len() > best.0 || (current.len() == best.0 && acc < best.1);
            if better {
                *best = (current.len(), acc, current.clone());
            }
            return;
        }
        // remaining rows can add at most this many pairs
        let reachable =
            current.len() + (cost.len() - row).min(used.iter().filter(|u| !**u).count());
        if reachable < best.0 {
            return;
        }
        for c in 0..cols {
            if !used[c] {
                used[c] = true;
                current.push((row, c));
                search(row + 1, cost, cols, used, current, acc + cost[row][c], best);
                current.pop();
                used[c] = false;
            }
        }
        if cost.len() - row > used.iter().filter(|u| !**u).count() {
            search(row + 1, cost, cols, used, current, acc, best);
        }
    }
    let cols = cost.first().map_or(0, Vec::len);
    let mut best = (0, f64::INFINITY, Vec::new());
    search(
        0,
        cost,
        cols,
        &mut vec![false; cols],
        &mut Vec::new(),
        0.0,
        &mut best,
    );
    best.2
}

#[derive(Default)]
struct Tally {
    hands_true: usize,
    hands_detected: usize,
    hands_matched: usize,
    tips_true: usize,
    tips_detected: usize,
    tips_matched: usize,
    tips_out: usize,
    tip_errors: Vec<f64>,
    palm_ratios: Vec<f64>,
    palm_within: usize,
}

/// Scores one frame's detections against its ground truth.
fn score(
    truth: &[GroundTruth],
    detected: &[HandReport],
    bins: &mut [OrientationBin],
    t: &mut Tally,
) {
    t.hands_true += truth.len();
    t.hands_detected += detected.len();
    let hand_cost: Vec<Vec<f64>> = truth
        .iter()
        .map(|g| {
            detected
                .iter()
                .map(|d| {
                    dist(
                        (d.palm.x as f64, d.palm.y as f64),
                        (g.palm_center[0], g.palm_center[1]),
                    )
                })
                .collect()
        })
        .collect();
    let pairs = min_cost_pairs(&hand_cost);
    let mut hand_detected = vec![false; detected.len()];
    for (gi, g) in truth.iter().enumerate() {
        let bin = &mut bins
            [(g.orientation.rem_euclid(360.0) / ORIENTATION_BIN_DEG) as usize % bins.len()];
        bin.hands += 1;
        bin.tips_true += g.fingertips.len();
        t.tips_true += g.fingertips.len();
        let Some(&(_, di)) = pairs.iter().find(|p| p.0 == gi) else {
            continue;
        };
        hand_detected[di] = true;
        let d = &detected[di];
        t.hands_matched += 1;
        let palm_ratio = hand_cost[gi][di] / g.palm_inradius;
        t.palm_ratios.push(palm_ratio);
        if palm_ratio <= PALM_TOLERANCE {
            t.palm_within += 1;
        }

        bin.tips_detected += d.fingertips.len();
        t.tips_detected += d.fingertips.len();
        let tip_cost: Vec<Vec<f64>> = g
            .fingertips
            .iter()
            .map(|gt| {
                d.fingertips
                    .tips
                    .iter()
                    .map(|dt| dist((dt.x as f64, dt.y as f64), (gt.x as f64, gt.y as f64)))
                    .collect()
            })
            .collect();
        for (ti, ri) in min_cost_pairs(&tip_cost) {
            let e = tip_cost[ti][ri];
            t.tip_errors.push(e);
            if e <= tip_tolerance(g.fingertips[ti].finger_width) {
                t.tips_matched += 1;
                bin.tips_matched += 1;
            } else {
                t.tips_out += 1;
            }
        }
    }
    // tips on hands that match nothing are all false positives
    for (d, _) in detected.iter().zip(&hand_detected).filter(|(_, m)| !**m) {
        t.tips_detected += d.fingertips.len();
    }
}

/// Metrics over `(ground truth, detections)` pairs, one pair per frame.
pub fn evaluate<'a>(
    cases: impl IntoIterator<Item = (&'a [GroundTruth], &'a [HandReport])>,
) -> Metrics {
    let mut bins: Vec<OrientationBin> = (0..(360.0 / ORIENTATION_BIN_DEG) as usize)
        .map(|i| OrientationBin {
            from_deg: i as f64 * ORIENTATION_BIN_DEG,
            to_deg: (i + 1) as f64 * ORIENTATION_BIN_DEG,
            ..Default::default()
        })
        .collect();
    let mut t = Tally::default();
    let mut scenes = 0;
    for (truth, detected) in cases {
        scenes += 1;
        score(truth, detected, &mut bins, &mut t);
    }
    for b in &mut bins {
        b.recall = ratio(b.tips_matched, b.tips_true);
        b.precision = ratio(b.tips_matched, b.tips_detected);
    }
    Metrics {
        scenes,
        hands_true: t.hands_true,
        hands_detected: t.hands_detected,
        hands_matched: t.hands_matched,
        tips_true: t.tips_true,
        tips_detected: t.tips_detected,
        tips_matched: t.tips_matched,
        tips_out_of_tolerance: t.tips_out,
        recall: ratio(t.tips_matched, t.tips_true),
        precision: ratio(t.tips_matched, t.tips_detected),
        tip_error_px: ErrorStats::from_values(&t.tip_errors),
        palm_error_ratio: ErrorStats::from_values(&t.palm_ratios),
        palm_within_tolerance: t.palm_within,
        palm_fraction: ratio(t.palm_within, t.hands_matched),
        by_orientation: bins,
    }
}

/// Detections for one independent scene: a fresh tracker labels the hands.
pub fn detect_scene(
    frame: &crate::frame_io::DepthFrame,
    model: &DepthModel,
    config: &PipelineConfig,
) -> Result<Vec<HandReport>> {
    let hands = analyze_frame(frame, model, config)?;
    Ok(TrackState::new(config.max_misses).label_hands(hands))
}

/// Renders every scene, runs detection on it and scores the result.
/// Scenes are independent, so they run in parallel.
pub fn run_benchmark(scenes: &[SceneSpec], config: &PipelineConfig) -> Result<Metrics> {
    config.validate()?;
    let model = config.model()?;
    let results: Vec<(Vec<GroundTruth>, Vec<HandReport>)> = scenes
        .par_iter()
        .map(|s| {
            let (frame, truth) = render_scene(s, &model)?;
            Ok((truth, detect_scene(&frame, &model, config)?))
        })
        .collect::<Result<_>>()?;
    Ok(evaluate(
        results.iter().map(|(g, d)| (g.as_slice(), d.as_slice())),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth_model::DepthCm;
    use crate::fingertips::{Fingertip, FingertipSet};
    use crate::mask::BinaryMask;
    use crate::palm_center::PalmCenter;
    use crate::synth::TipTruth;
    use crate::tracker::{HandId, Rgb};

    fn truth(center: [f64; 2], tips: &[(usize, usize)], orientation: f64) -> GroundTruth {
        GroundTruth {
            palm_center: center,
            palm_center_px: (center[0] as usize, center[1] as usize),
            palm_inradius: 20.0,
            fingertips: tips
                .iter()
                .map(|&(x, y)| TipTruth {
                    x,
                    y,
                    finger_width: 6.0,
                })
                .collect(),
            orientation,
            support: BinaryMask::new(1, 1),
        }
    }

    fn report(center: (usize, usize), tips: &[(usize, usize)]) -> HandReport {
        HandReport {
            id: HandId::Single,
            overlay_color: Rgb::WHITE,
            palm: PalmCenter {
                x: center.0,
                y: center.1,
                inradius_px: 15.0,
            },
            fingertips: FingertipSet {
                tips: tips
                    .iter()
                    .enumerate()
                    .map(|(i, &(x, y))| Fingertip {
                        x,
                        y,
                        depth_cm: DepthCm(70.0),
                        finger_index: i,
                    })
                    .collect(),
            },
            blob_area: 1000,
        }
    }

    #[test]
    fn empty_corpus_gives_zero_counts() {
        let m = evaluate(std::iter::empty());
        assert_eq!(m.scenes, 0);
        assert_eq!(m.tips_true, 0);
        assert_eq!(m.recall, None);
        assert_eq!(m.palm_fraction, None);
        assert_eq!(m.by_orientation.len(), 8);
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(json["recall"], serde_json::Value::Null);
        let empty = run_benchmark(&[], &PipelineConfig::default()).unwrap();
        assert_eq!(empty, m);
    }

    #[test]
    fn hand_counted_once_per_case() {
        let g = vec![truth([50.0, 50.0], &[(50, 10), (80, 20)], 100.0)];
        // one tip 2 px off (inside tolerance 3), one 5 px off, one extra
        let d = vec![report((52, 51), &[(50, 12), (85, 20), (10, 10)])];
        let m = evaluate([(g.as_slice(), d.as_slice())]);
        assert_eq!(
            (
                m.tips_true,
                m.tips_detected,
                m.tips_matched,
                m.tips_out_of_tolerance
            ),
            (2, 3, 1, 1)
        );
        assert_eq!(m.recall, Some(0.5));
        assert_eq!(m.precision, Some(1.0 / 3.0));
        assert_eq!(m.tip_error_px.max, Some(5.0));
        let ratio = 5f64.sqrt() / 20.0;
        assert_eq!(m.palm_error_ratio.mean, Some(ratio));
        assert_eq!(m.palm_within_tolerance, 1);
        let bin = &m.by_orientation[2];
        assert_eq!((bin.from_deg, bin.hands, bin.tips_matched), (90.0, 1, 1));
    }

    #[test]
    fn unmatched_hands_count_as_misses_and_false_tips() {
        let g = vec![truth([50.0, 50.0], &[(50, 10)], 0.0)];
        let m = evaluate([(g.as_slice(), &[][..])]);
        assert_eq!((m.tips_true, m.tips_matched, m.hands_matched), (1, 0, 0));
        let d = vec![
            report((50, 50), &[(50, 10)]),
            report((200, 50), &[(1, 1), (2, 2)]),
        ];
        let m = evaluate([(g.as_slice(), d.as_slice())]);
        assert_eq!(
            (
                m.hands_detected,
                m.hands_matched,
                m.tips_detected,
                m.tips_matched
            ),
            (2, 1, 3, 1)
        );
    }

    #[test]
    fn assignment_prefers_size_then_cost() {
        // row-by-row greedy would take (0, 0) and then pay 9 for (1, 1)
        let cost = vec![vec![1.0, 2.0], vec![3.0, 9.0]];
        assert_eq!(min_cost_pairs(&cost), vec![(0, 1), (1, 0)]);
        let wide = vec![vec![5.0, 1.0, 7.0]];
        assert_eq!(min_cost_pairs(&wide), vec![(0, 1)]);
        let tall = vec![vec![5.0], vec![1.0], vec![7.0]];
        assert_eq!(min_cost_pairs(&tall), vec![(1, 0)]);
        assert!(min_cost_pairs(&[]).is_empty());
    }
}
