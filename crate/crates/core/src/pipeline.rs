//! End-to-end per-frame analysis and the ordered multi-frame runner.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth_model::{CalibrationParams, DepthModel, DEFAULT_RAW_VALID_MAX};
use crate::error::{Error, Result};
use crate::fingertips::detect_fingertips;
use crate::frame_io::{write_overlay, DepthFrame, DetectionReport};
use crate::mask::BinaryMask;
use crate::morphology::{
    auto_radius, default_min_finger_area, dilate, extract_palm, finger_masks, DiskElement,
    DEFAULT_RADIUS_FACTOR,
};
use crate::palm_center::{distance_transform, find_palm_center, PalmCenter};
use crate::segmentation::{
    connected_components, depth_threshold, fill_holes, find_hand_seeds, select_hand_blob, Blob,
    SeedParams,
};
use crate::tracker::{HandObservation, TrackState, DEFAULT_MAX_MISSES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    /// Render an overlay image for every frame.
    pub overlays: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions { overlays: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub calibration: CalibrationParams,
    pub raw_valid_max: u16,
    /// Half-width of the segmentation band around the seed depth, cm.
    pub band_cm: f64,
    /// Depth slab behind the nearest sample searched for hands, cm.
    pub slab_cm: f64,
    /// Smallest slab component that can seed a hand, pixels.
    pub min_area: usize,
    /// Opening radius as a fraction of the hand inradius.
    pub radius_factor: f64,
    /// Smallest finger component, pixels; derived from the hand area when absent.
    pub min_finger_area: Option<usize>,
    /// Pixels the opened palm is grown by (inside the hand) before it is
    /// subtracted to leave the fingers.
    pub palm_margin_px: u32,
    /// How far past the palm inradius a finger must reach, as a fraction
    /// of that inradius. Zero keeps every component.
    pub min_finger_protrusion: f64,
    pub max_hands: usize,
    pub max_misses: u32,
    pub output: OutputOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            calibration: CalibrationParams::default(),
            raw_valid_max: DEFAULT_RAW_VALID_MAX,
            band_cm: 15.0,
            slab_cm: 20.0,
            min_area: 100,
            radius_factor: DEFAULT_RADIUS_FACTOR,
            min_finger_area: None,
            palm_margin_px: 1,
            min_finger_protrusion: 0.5,
            max_hands: 2,
            max_misses: DEFAULT_MAX_MISSES,
            output: OutputOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        self.calibration
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(self.band_cm > 0.0 && self.band_cm <= 100.0) {
            return cfg(format!(
                "band_cm must lie in (0, 100], got {}",
                self.band_cm
            ));
        }
        if !(self.slab_cm > 0.0 && self.slab_cm <= 200.0) {
            return cfg(format!(
                "slab_cm must lie in (0, 200], got {}",
                self.slab_cm
            ));
        }
        if self.min_area == 0 {
            return cfg("min_area must be at least 1".into());
        }
        if !(self.radius_factor > 0.0 && self.radius_factor < 1.0) {
            return cfg(format!(
                "radius_factor must lie in (0, 1), got {}",
                self.radius_factor
            ));
        }
        if self.min_finger_area == Some(0) {
            return cfg("min_finger_area must be at least 1".into());
        }
        if self.palm_margin_px > 16 {
            return cfg(format!(
                "palm_margin_px must be at most 16, got {}",
                self.palm_margin_px
            ));
        }
        if !(0.0..=5.0).contains(&self.min_finger_protrusion) {
            return cfg(format!(
                "min_finger_protrusion must lie in [0, 5], got {}",
                self.min_finger_protrusion
            ));
        }
        if !(1..=2).contains(&self.max_hands) {
            return cfg(format!("max_hands must be 1 or 2, got {}", self.max_hands));
        }
        if self.max_misses == 0 {
            return cfg("max_misses must be at least 1".into());
        }
        self.model().map(|_| ())
    }

    pub fn model(&self) -> Result<DepthModel> {
        DepthModel::new(self.calibration, self.raw_valid_max)
            .map_err(|e| Error::Config(e.to_string()))
    }

    fn seed_params(&self) -> SeedParams {
        SeedParams {
            max_hands: self.max_hands,
            min_area: self.min_area,
            slab_cm: self.slab_cm,
        }
    }
}

/// Largest component, lowest label on ties.
fn largest_component(mask: &BinaryMask) -> Option<Blob> {
    connected_components(mask)
        .into_iter()
        .reduce(|best, b| if b.area() > best.area() { b } else { best })
}

/// Intermediate results of one hand, in frame coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HandDetail {
    pub observation: HandObservation,
    /// Segmented blob with interior holes filled.
    pub hand: Blob,
    /// Largest component of the opened hand.
    pub palm: Blob,
    /// Every palm pixel attaining the distance maximum, raster order.
    pub palm_maxima: Vec<(usize, usize)>,
    /// Finger masks in the order their tips are indexed.
    pub fingers: Vec<Blob>,
}

/// Palm and fingertips of one segmented hand blob.
pub fn analyze_hand(
    frame: &DepthFrame,
    model: &DepthModel,
    config: &PipelineConfig,
    blob: &Blob,
) -> Result<HandObservation> {
    analyze_hand_detail(frame, model, config, blob).map(|d| d.observation)
}

/// [`analyze_hand`] keeping the masks it went through.
pub fn analyze_hand_detail(
    frame: &DepthFrame,
    model: &DepthModel,
    config: &PipelineConfig,
    blob: &Blob,
) -> Result<HandDetail> {
    // work in a window one pixel larger than the blob
    let (x0, y0, x1, y1) = blob.bbox;
    let (ox, oy) = (x0 as i64 - 1, y0 as i64 - 1);
    let (w, h) = (x1 - x0 + 3, y1 - y0 + 3);
    let hand = fill_holes(&blob.translated(-ox, -oy).to_mask(w, h));
    let hand_blob = Blob::from_pixels(blob.label, hand.foreground().collect());

    let hand_center = find_palm_center(&distance_transform(&hand), &hand_blob)?;
    let radius = auto_radius(hand_center.inradius_px, config.radius_factor)?;
    let opened = extract_palm(&hand, radius)?;
    let palm_blob = largest_component(&opened).expect("opening is non-empty");
    let palm = palm_blob.to_mask(w, h);
    let palm_dist = distance_transform(&palm);
    let center = find_palm_center(&palm_dist, &palm_blob)?;
    let top = palm_dist.get(center.x, center.y);
    let palm_maxima = palm_blob
        .pixels
        .iter()
        .filter(|&&(x, y)| palm_dist.get(x, y) == top)
        .map(|&(x, y)| ((x as i64 + ox) as usize, (y as i64 + oy) as usize))
        .collect();

    let min_finger_area = config
        .min_finger_area
        .unwrap_or_else(|| default_min_finger_area(hand_blob.area()));
    let (cx, cy) = (center.x as f64, center.y as f64);
    let reach_needed = (1.0 + config.min_finger_protrusion) * center.inradius_px;
    // the digital opening falls short of the palm rim; the thin ring it
    // leaves would otherwise join neighbouring fingers
    let cut = if config.palm_margin_px == 0 {
        palm.clone()
    } else {
        dilate(&palm, &DiskElement::new(config.palm_margin_px)).and(&hand)
    };
    let fingers: Vec<Blob> = finger_masks(&hand, &cut, min_finger_area, (cx, cy))
        .iter()
        .filter(|f| {
            // slivers left along the palm rim by the opening never get far from it
            let reach = f
                .pixels
                .iter()
                .map(|&(x, y)| (x as f64 - cx).hypot(y as f64 - cy))
                .fold(0.0, f64::max);
            reach >= reach_needed
        })
        .map(|f| f.translated(ox, oy))
        .collect();
    let observation = HandObservation {
        palm: PalmCenter {
            x: (center.x as i64 + ox) as usize,
            y: (center.y as i64 + oy) as usize,
            inradius_px: center.inradius_px,
        },
        fingertips: detect_fingertips(frame, model, &fingers),
        blob_area: hand_blob.area(),
    };
    Ok(HandDetail {
        observation,
        hand: hand_blob.translated(ox, oy),
        palm: palm_blob.translated(ox, oy),
        palm_maxima,
        fingers,
    })
}

/// Detects up to `max_hands` hands in one frame, largest seed first.
///
/// Frames without a usable hand give an empty list; only configuration
/// problems are errors.
pub fn analyze_frame(
    frame: &DepthFrame,
    model: &DepthModel,
    config: &PipelineConfig,
) -> Result<Vec<HandObservation>> {
    Ok(analyze_frame_detail(frame, model, config)?
        .into_iter()
        .map(|d| d.observation)
        .collect())
}

/// [`analyze_frame`] keeping each hand's intermediate masks.
pub fn analyze_frame_detail(
    frame: &DepthFrame,
    model: &DepthModel,
    config: &PipelineConfig,
) -> Result<Vec<HandDetail>> {
    let seeds = match find_hand_seeds(frame, model, &config.seed_params()) {
        Ok(s) => s,
        Err(Error::NotFound(m)) => {
            log::warn!("no hand: {m}");
            return Ok(Vec::new());
        }
        Err(e) => return Err(e),
    };
    let mut used = BinaryMask::new(frame.width(), frame.height());
    let mut hands = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let mask = depth_threshold(frame, model, &seed, config.band_cm)?;
        let blob = match select_hand_blob(&connected_components(&mask), &seed) {
            Ok(b) => b,
            Err(Error::NotFound(m)) => {
                log::warn!("seed ({}, {}) dropped: {m}", seed.x, seed.y);
                continue;
            }
            Err(e) => return Err(e),
        };
        if blob.pixels.iter().any(|&(x, y)| used.get(x, y)) {
            log::debug!(
                "seed ({}, {}) lies on an already analysed hand",
                seed.x,
                seed.y
            );
            continue;
        }
        for &(x, y) in &blob.pixels {
            used.set(x, y, true);
        }
        match analyze_hand_detail(frame, model, config, &blob) {
            Ok(h) => hands.push(h),
            Err(e @ (Error::DegenerateHand(_) | Error::EmptyResult(_))) => {
                log::warn!("hand at seed ({}, {}) skipped: {e}", seed.x, seed.y)
            }
            Err(e) => return Err(e),
        }
    }
    Ok(hands)
}

/// Report and optional overlay (binary PPM) for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub report: DetectionReport,
    pub overlay: Option<Vec<u8>>,
}

/// Stateful runner: frames are analysed in parallel, tracking is applied
/// in frame order.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    model: DepthModel,
    tracks: TrackState,
    next_index: u64,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let model = config.model()?;
        let tracks = TrackState::new(config.max_misses);
        Ok(Pipeline {
            config,
            model,
            tracks,
            next_index: 0,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn model(&self) -> &DepthModel {
        &self.model
    }

    /// Processes the next batch of frames; outputs are in input order.
    pub fn process(&mut self, frames: &[DepthFrame]) -> Result<Vec<FrameOutput>> {
        let observed: Vec<Result<Vec<HandObservation>>> = frames
            .par_iter()
            .map(|f| analyze_frame(f, &self.model, &self.config))
            .collect();
        let mut out = Vec::with_capacity(frames.len());
        for (frame, hands) in frames.iter().zip(observed) {
            let index = self.next_index;
            self.next_index += 1;
            let reports = self.tracks.label_hands(hands?);
            self.tracks.update(&reports, index);
            let overlay = self
                .config
                .output
                .overlays
                .then(|| write_overlay(frame, &reports, self.model.raw_valid_max()));
            out.push(FrameOutput {
                report: DetectionReport {
                    frame_index: index,
                    hands: reports,
                },
                overlay,
            });
        }
        Ok(out)
    }
}

/// Runs a fresh pipeline over a frame sequence.
pub fn run_pipeline(frames: &[DepthFrame], config: &PipelineConfig) -> Result<Vec<FrameOutput>> {
    Pipeline::new(config.clone())?.process(frames)
}
