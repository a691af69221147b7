//! Parametric hand renderer with exact ground truth.
//!
//! A hand is a filled palm disk plus up to five fingers. Each finger is a
//! strip of the given width running from the palm centre along its
//! direction, capped by a half-disc, so its apex sits `palm_radius + length`
//! from the centre. Pixels belong to a shape when their centre lies inside it.
//!
//! The palm is flat at `base_depth_cm`. Outside the palm a finger rises
//! toward the camera by `tip_slope` raw units per pixel of axial distance,
//! which makes the apex pixel the depth minimum of its finger; when rounding
//! would leave a tie, the apex is pulled one more raw unit forward.
//!
//! Angles are in degrees, counter-clockwise on screen from +x.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::depth_model::{DepthCm, DepthModel, SENTINEL};
use crate::error::{Error, Result};
use crate::frame_io::DepthFrame;
use crate::mask::BinaryMask;

pub const DEFAULT_TIP_SLOPE: f64 = 2.0;

/// Minimum gap between a hand and the background, in centimetres.
pub const MIN_BACKGROUND_GAP_CM: f64 = 50.0;

fn default_tip_slope() -> f64 {
    DEFAULT_TIP_SLOPE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerSpec {
    /// Direction relative to the hand orientation, degrees.
    pub angle: f64,
    /// Protrusion beyond the palm rim, pixels.
    pub length: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandSpec {
    pub palm_center: [f64; 2],
    pub palm_radius: f64,
    pub fingers: Vec<FingerSpec>,
    /// Degrees added to every finger angle.
    #[serde(default)]
    pub orientation: f64,
    pub base_depth_cm: f64,
    /// Raw units per pixel toward the camera along each finger.
    #[serde(default = "default_tip_slope")]
    pub tip_slope: f64,
}

impl HandSpec {
    pub fn finger_count(&self) -> usize {
        self.fingers.len()
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Geometry(m));
        let finite = self.palm_center.iter().all(|v| v.is_finite())
            && self.palm_radius.is_finite()
            && self.orientation.is_finite()
            && self.base_depth_cm.is_finite()
            && self.tip_slope.is_finite();
        if !finite {
            return bad("hand parameters must be finite".into());
        }
        if self.palm_radius < 1.0 {
            return bad(format!("palm radius {} below one pixel", self.palm_radius));
        }
        if self.fingers.len() > 5 {
            return bad(format!(
                "{} fingers requested, at most 5",
                self.fingers.len()
            ));
        }
        if self.tip_slope < 0.0 {
            return bad("tip_slope must be non-negative".into());
        }
        for (i, f) in self.fingers.iter().enumerate() {
            if !(f.width > 0.0 && f.width < self.palm_radius) {
                return bad(format!("finger {i}: width must lie in (0, palm_radius)"));
            }
            if !(f.length > 0.0 && f.angle.is_finite()) {
                return bad(format!("finger {i}: length must be positive"));
            }
            for (j, g) in self.fingers.iter().enumerate().take(i) {
                let diff = (f.angle - g.angle).rem_euclid(360.0);
                if diff == 0.0 {
                    return bad(format!("fingers {j} and {i} share an angle"));
                }
            }
        }
        Ok(())
    }
}

/// Ground truth of one rendered hand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub palm_center: [f64; 2],
    /// Nearest pixel to the palm centre.
    pub palm_center_px: (usize, usize),
    pub palm_inradius: f64,
    pub fingertips: Vec<TipTruth>,
    pub orientation: f64,
    #[serde(skip)]
    pub support: BinaryMask,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TipTruth {
    pub x: usize,
    pub y: usize,
    pub finger_width: f64,
}

/// Unit direction for a screen angle, exact at multiples of 90 degrees.
fn unit_dir(deg: f64) -> (f64, f64) {
    let d = deg.rem_euclid(360.0);
    if d == 0.0 {
        (1.0, 0.0)
    } else if d == 90.0 {
        (0.0, -1.0)
    } else if d == 180.0 {
        (-1.0, 0.0)
    } else if d == 270.0 {
        (0.0, 1.0)
    } else {
        let r = d.to_radians();
        (r.cos(), -r.sin())
    }
}

struct FingerGeom {
    dir: (f64, f64),
    /// Distance from the palm centre to the cap centre.
    reach: f64,
    half_width: f64,
}

impl FingerGeom {
    /// Axial coordinate of `(dx, dy)` when it lies in the finger, else `None`.
    fn axial(&self, dx: f64, dy: f64) -> Option<f64> {
        let t = dx * self.dir.0 + dy * self.dir.1;
        let s = dy * self.dir.0 - dx * self.dir.1;
        let in_strip = t >= 0.0 && t <= self.reach && s.abs() <= self.half_width;
        let (ex, ey) = (dx - self.reach * self.dir.0, dy - self.reach * self.dir.1);
        let in_cap = ex * ex + ey * ey <= self.half_width * self.half_width;
        (in_strip || in_cap).then_some(t)
    }
}

/// One hand's pixels with raw depths, plus its ground truth.
struct HandRaster {
    pixels: Vec<(usize, usize, u16)>,
    truth: GroundTruth,
}

fn rasterize(
    spec: &HandSpec,
    width: usize,
    height: usize,
    model: &DepthModel,
) -> Result<HandRaster> {
    spec.validate()?;
    let [cx, cy] = spec.palm_center;
    let r = spec.palm_radius;
    let fingers: Vec<FingerGeom> = spec
        .fingers
        .iter()
        .map(|f| FingerGeom {
            dir: unit_dir(spec.orientation + f.angle),
            reach: r + f.length - f.width / 2.0,
            half_width: f.width / 2.0,
        })
        .collect();

    let (max_x, max_y) = ((width - 1) as f64, (height - 1) as f64);
    let inside =
        |x0: f64, x1: f64, y0: f64, y1: f64| x0 >= 0.0 && y0 >= 0.0 && x1 <= max_x && y1 <= max_y;
    if !inside(cx - r, cx + r, cy - r, cy + r) {
        return Err(Error::Geometry("palm leaves the frame".into()));
    }
    let (mut bx0, mut bx1, mut by0, mut by1) = (cx - r, cx + r, cy - r, cy + r);
    for (i, f) in fingers.iter().enumerate() {
        let (ex, ey) = (cx + f.reach * f.dir.0, cy + f.reach * f.dir.1);
        let hw = f.half_width;
        if !inside(ex - hw, ex + hw, ey - hw, ey + hw) {
            return Err(Error::Geometry(format!("finger {i} leaves the frame")));
        }
        bx0 = bx0.min(ex - hw);
        bx1 = bx1.max(ex + hw);
        by0 = by0.min(ey - hw);
        by1 = by1.max(ey + hw);
    }

    let palm_raw = model.cm_to_raw(DepthCm(spec.base_depth_cm))?.value();
    let mut pixels = Vec::new();
    // per finger: (pixel index into `pixels`, axial coordinate) outside the palm
    let mut finger_pixels: Vec<Vec<(usize, f64)>> = vec![Vec::new(); fingers.len()];
    for y in by0.ceil() as usize..=by1.floor() as usize {
        for x in bx0.ceil() as usize..=bx1.floor() as usize {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= r * r {
                pixels.push((x, y, palm_raw));
                continue;
            }
            let mut owner = None;
            for (i, f) in fingers.iter().enumerate() {
                if let Some(t) = f.axial(dx, dy) {
                    if owner.is_some() {
                        return Err(Error::Geometry(format!(
                            "fingers overlap outside the palm at ({x}, {y})"
                        )));
                    }
                    owner = Some((i, t));
                }
            }
            if let Some((i, t)) = owner {
                let rise = (spec.tip_slope * (t - r).max(0.0)).round();
                if rise > f64::from(palm_raw) {
                    return Err(Error::Geometry(format!(
                        "finger {i} rises past raw 0; lower tip_slope"
                    )));
                }
                finger_pixels[i].push((pixels.len(), t));
                pixels.push((x, y, palm_raw - rise as u16));
            }
        }
    }

    let mut tips = Vec::with_capacity(fingers.len());
    for (i, members) in finger_pixels.iter().enumerate() {
        // apex: largest axial coordinate, then smallest y, then smallest x
        let &(apex, _) = members
            .iter()
            .max_by(|a, b| {
                let (pa, pb) = (pixels[a.0], pixels[b.0]);
                a.1.total_cmp(&b.1).then((pb.1, pb.0).cmp(&(pa.1, pa.0)))
            })
            .ok_or_else(|| Error::Geometry(format!("finger {i} has no pixel outside the palm")))?;
        let others_min = members
            .iter()
            .filter(|&&(k, _)| k != apex)
            .map(|&(k, _)| pixels[k].2)
            .min();
        if let Some(m) = others_min {
            if pixels[apex].2 >= m {
                if m == 0 {
                    return Err(Error::Geometry(format!(
                        "finger {i} tip cannot go below raw 0"
                    )));
                }
                pixels[apex].2 = m - 1;
            }
        }
        tips.push(TipTruth {
            x: pixels[apex].0,
            y: pixels[apex].1,
            finger_width: spec.fingers[i].width,
        });
    }

    let mut support = BinaryMask::new(width, height);
    for &(x, y, _) in &pixels {
        support.set(x, y, true);
    }
    let truth = GroundTruth {
        palm_center: spec.palm_center,
        palm_center_px: (cx.round() as usize, cy.round() as usize),
        palm_inradius: r,
        fingertips: tips,
        orientation: spec.orientation,
        support,
    };
    Ok(HandRaster { pixels, truth })
}

fn background_frame(
    width: usize,
    height: usize,
    background_depth_cm: f64,
    model: &DepthModel,
) -> Result<DepthFrame> {
    if width == 0 || height == 0 {
        return Err(Error::Geometry("frame size must be positive".into()));
    }
    let raw = model.cm_to_raw(DepthCm(background_depth_cm))?;
    DepthFrame::filled(width, height, raw)
}

fn check_background(spec: &HandSpec, background_depth_cm: f64) -> Result<()> {
    if background_depth_cm < spec.base_depth_cm + MIN_BACKGROUND_GAP_CM {
        return Err(Error::Geometry(format!(
            "background at {background_depth_cm} cm is less than {MIN_BACKGROUND_GAP_CM} cm behind the hand"
        )));
    }
    Ok(())
}

/// Renders one hand over a flat background.
pub fn render_hand(
    spec: &HandSpec,
    frame_size: (usize, usize),
    background_depth_cm: f64,
    model: &DepthModel,
) -> Result<(DepthFrame, GroundTruth)> {
    check_background(spec, background_depth_cm)?;
    let (w, h) = frame_size;
    let mut frame = background_frame(w, h, background_depth_cm, model)?;
    let raster = rasterize(spec, w, h, model)?;
    for &(x, y, raw) in &raster.pixels {
        frame.set(x, y, crate::depth_model::RawDepth::new(raw)?);
    }
    Ok((frame, raster.truth))
}

/// A full synthetic frame description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    /// `[width, height]`.
    pub frame_size: [usize; 2],
    pub background_depth_cm: f64,
    #[serde(default)]
    pub noise_seed: u64,
    #[serde(default)]
    pub dropout_rate: f64,
    pub hands: Vec<HandSpec>,
}

/// Renders up to two hands, nearest depth winning, then replaces a
/// `dropout_rate` fraction of hand pixels with the sentinel using a
/// generator seeded by `noise_seed`.
pub fn render_scene(
    scene: &SceneSpec,
    model: &DepthModel,
) -> Result<(DepthFrame, Vec<GroundTruth>)> {
    if scene.hands.len() > 2 {
        return Err(Error::Geometry(format!(
            "{} hands requested, at most 2",
            scene.hands.len()
        )));
    }
    if !(0.0..=1.0).contains(&scene.dropout_rate) {
        return Err(Error::Geometry(format!(
            "dropout rate {} outside [0, 1]",
            scene.dropout_rate
        )));
    }
    let [w, h] = scene.frame_size;
    let mut frame = background_frame(w, h, scene.background_depth_cm, model)?;
    let background = frame.get(0, 0);
    let mut union = BinaryMask::new(w, h);
    let mut truths = Vec::with_capacity(scene.hands.len());
    for spec in &scene.hands {
        check_background(spec, scene.background_depth_cm)?;
        let raster = rasterize(spec, w, h, model)?;
        if !raster.truth.support.and(&union).is_empty() {
            return Err(Error::Geometry("hand supports overlap".into()));
        }
        for &(x, y, raw) in &raster.pixels {
            if raw < frame.get(x, y) || frame.get(x, y) == background {
                frame.set(x, y, crate::depth_model::RawDepth::new(raw)?);
            }
        }
        union = union.or(&raster.truth.support);
        truths.push(raster.truth);
    }
    if scene.dropout_rate > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(scene.noise_seed);
        let hit: Vec<(usize, usize)> = union
            .foreground()
            .filter(|_| rng.gen_bool(scene.dropout_rate))
            .collect();
        for (x, y) in hit {
            frame.set(x, y, crate::depth_model::RawDepth::SENTINEL);
        }
    }
    debug_assert!(frame.samples().iter().all(|&s| s <= SENTINEL));
    Ok((frame, truths))
}

/// Camera and anatomy constants used to size synthetic hands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandScale {
    /// Focal length in pixels.
    pub focal_px: f64,
    pub palm_radius_cm: f64,
    /// Largest depth span a hand may cover, centimetres.
    pub max_span_cm: f64,
}

impl Default for HandScale {
    fn default() -> Self {
        // 320x240 depth stream of a structured-light sensor
        HandScale {
            focal_px: 285.0,
            palm_radius_cm: 4.5,
            max_span_cm: 12.0,
        }
    }
}

impl HandScale {
    /// Builds a hand at `depth_cm` with natural proportions and random
    /// finger spread. The tip slope is the largest value in [1, 2] that
    /// keeps the longest finger within `max_span_cm` of the palm depth.
    pub fn hand<R: Rng>(
        &self,
        rng: &mut R,
        center: [f64; 2],
        depth_cm: f64,
        finger_count: usize,
        orientation: f64,
        model: &DepthModel,
    ) -> Result<HandSpec> {
        let palm_radius = self.focal_px * self.palm_radius_cm / depth_cm;
        let spacing = rng.gen_range(40.0..55.0);
        let fingers: Vec<FingerSpec> = (0..finger_count)
            .map(|i| FingerSpec {
                angle: (i as f64 - (finger_count as f64 - 1.0) / 2.0) * spacing,
                length: palm_radius * rng.gen_range(1.2..1.8),
                width: palm_radius * rng.gen_range(0.32..0.45),
            })
            .collect();
        let longest = fingers.iter().map(|f| f.length).fold(0.0, f64::max);
        let palm_raw = model.cm_to_raw(DepthCm(depth_cm))?.value();
        let cm_per_slope_unit = longest * model.cm_per_raw(f64::from(palm_raw));
        let tip_slope = (self.max_span_cm / cm_per_slope_unit).clamp(1.0, DEFAULT_TIP_SLOPE);
        Ok(HandSpec {
            palm_center: center,
            palm_radius,
            fingers,
            orientation,
            base_depth_cm: depth_cm,
            tip_slope,
        })
    }

    /// Distance from the palm centre to the farthest point of a hand at `depth_cm`.
    pub fn reach_px(&self, depth_cm: f64) -> f64 {
        let r = self.focal_px * self.palm_radius_cm / depth_cm;
        r * (1.0 + 1.8) + 1.0
    }
}

/// Parameters of a random single-hand corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusParams {
    pub scenes: usize,
    pub frame_size: (usize, usize),
    pub depth_range_cm: (f64, f64),
    pub finger_range: (usize, usize),
    pub dropout_rate: f64,
    pub background_depth_cm: f64,
    pub scale: HandScale,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            scenes: 200,
            frame_size: (320, 240),
            depth_range_cm: (60.0, 150.0),
            finger_range: (1, 5),
            dropout_rate: 0.02,
            background_depth_cm: 250.0,
            scale: HandScale::default(),
        }
    }
}

/// Random open-hand scenes: one hand each, uniform orientation, uniform
/// depth and finger count, palm centre on an integer pixel.
pub fn generate_corpus(
    params: &CorpusParams,
    seed: u64,
    model: &DepthModel,
) -> Result<Vec<SceneSpec>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = params.frame_size;
    (0..params.scenes)
        .map(|i| {
            let depth = rng.gen_range(params.depth_range_cm.0..=params.depth_range_cm.1);
            let fingers = rng.gen_range(params.finger_range.0..=params.finger_range.1);
            let orientation = rng.gen_range(0.0..360.0);
            let reach = params.scale.reach_px(depth).ceil() as usize;
            if 2 * reach + 1 > w.min(h) {
                return Err(Error::Geometry(format!(
                    "hand at {depth:.1} cm does not fit a {w}x{h} frame"
                )));
            }
            let cx = rng.gen_range(reach..w - reach) as f64;
            let cy = rng.gen_range(reach..h - reach) as f64;
            let hand = params
                .scale
                .hand(&mut rng, [cx, cy], depth, fingers, orientation, model)?;
            Ok(SceneSpec {
                frame_size: [w, h],
                background_depth_cm: params.background_depth_cm,
                noise_seed: seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
                dropout_rate: params.dropout_rate,
                hands: vec![hand],
            })
        })
        .collect()
}
