use depthhand::depth_model::{CalibrationParams, DepthModel, RawDepth, DEFAULT_RAW_VALID_MAX};
use depthhand::frame_io::{read_pgm, read_raw, write_pgm, write_raw, write_report, REPORT_SCHEMA};
use depthhand::pipeline::{run_pipeline, PipelineConfig};
use depthhand::synth::{render_scene, FingerSpec, HandSpec, SceneSpec};
use depthhand::tracker::{HandId, Rgb};
use depthhand::DepthFrame;

fn model() -> DepthModel {
    DepthModel::new(CalibrationParams::default(), DEFAULT_RAW_VALID_MAX).unwrap()
}

fn hand(cx: f64, cy: f64, n: usize, depth: f64) -> HandSpec {
    HandSpec {
        palm_center: [cx, cy],
        palm_radius: 14.0,
        fingers: (0..n)
            .map(|i| FingerSpec {
                angle: 30.0 + 45.0 * i as f64,
                length: 22.0,
                width: 6.0,
            })
            .collect(),
        orientation: 0.0,
        base_depth_cm: depth,
        tip_slope: 2.0,
    }
}

fn scene(hands: Vec<HandSpec>) -> SceneSpec {
    SceneSpec {
        frame_size: [320, 240],
        background_depth_cm: 250.0,
        noise_seed: 0,
        dropout_rate: 0.0,
        hands,
    }
}

#[test]
fn single_hand_fingertips_match_truth() {
    let m = model();
    let (frame, truth) = render_scene(&scene(vec![hand(160.0, 130.0, 4, 80.0)]), &m).unwrap();
    let out = run_pipeline(&[frame], &PipelineConfig::default()).unwrap();
    let hands = &out[0].report.hands;
    assert_eq!(hands.len(), 1);
    let h = &hands[0];
    assert_eq!(h.id, HandId::Single);
    assert_eq!((h.palm.x, h.palm.y), (160, 130));
    assert_eq!(h.fingertips.len(), 4);
    for t in &truth[0].fingertips {
        let hit = h.fingertips.tips.iter().any(|d| {
            let (dx, dy) = (d.x as f64 - t.x as f64, d.y as f64 - t.y as f64);
            dx.hypot(dy) <= (t.finger_width / 2.0).max(2.0)
        });
        assert!(hit, "no detection near ({}, {})", t.x, t.y);
    }
}

#[test]
fn two_hands_are_labelled_by_side() {
    let m = model();
    let s = scene(vec![
        hand(80.0, 120.0, 2, 70.0),
        hand(240.0, 120.0, 3, 75.0),
    ]);
    let (frame, _) = render_scene(&s, &m).unwrap();
    let out = run_pipeline(&[frame], &PipelineConfig::default()).unwrap();
    let hands = &out[0].report.hands;
    assert_eq!(hands.len(), 2);
    let right = hands.iter().find(|h| h.id == HandId::Right).unwrap();
    let left = hands.iter().find(|h| h.id == HandId::Left).unwrap();
    assert!(right.palm.x > left.palm.x);
    assert_eq!(right.overlay_color, Rgb::WHITE);
    assert_eq!(left.overlay_color, Rgb::PINK);
}

#[test]
fn empty_frame_gives_empty_report() {
    let frame = DepthFrame::filled(64, 48, RawDepth::SENTINEL).unwrap();
    let out = run_pipeline(&[frame], &PipelineConfig::default()).unwrap();
    assert!(out[0].report.hands.is_empty());
    assert!(out[0].overlay.is_some());
}

#[test]
fn frame_formats_round_trip() {
    let m = model();
    let (frame, _) = render_scene(&scene(vec![hand(100.0, 100.0, 5, 90.0)]), &m).unwrap();
    let pgm = read_pgm(&write_pgm(&frame)).unwrap();
    assert_eq!(pgm.clamped, 0);
    assert_eq!(pgm.frame, frame);
    let raw = read_raw(&write_raw(&frame), 320, 240).unwrap();
    assert_eq!(raw, frame);
}

#[test]
fn reports_validate_against_schema() {
    let m = model();
    let frames: Vec<DepthFrame> = [1, 3, 5]
        .iter()
        .map(|&n| {
            render_scene(&scene(vec![hand(160.0, 120.0, n, 100.0)]), &m)
                .unwrap()
                .0
        })
        .collect();
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let validator = jsonschema::JSONSchema::compile(&schema).unwrap();
    for o in run_pipeline(&frames, &PipelineConfig::default()).unwrap() {
        let v: serde_json::Value = serde_json::from_slice(&write_report(&o.report)).unwrap();
        assert!(validator.is_valid(&v), "{v}");
    }
}
