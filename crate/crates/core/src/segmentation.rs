//! Hand segmentation by depth band and connected-component selection.
//!
//! A hand seed stands in for an external hand-point detector: the nearest
//! objects in the scene are assumed to be hands, so seeds are taken at the
//! nearest-depth pixel of each large component near the front of the scene.

use std::collections::VecDeque;

use crate::depth_model::{DepthModel, RawDepth};
use crate::error::{Error, Result};
use crate::frame_io::DepthFrame;
use crate::mask::BinaryMask;

/// An 8-connected foreground component.
#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pub label: u32,
    /// Member pixels in raster order.
    pub pixels: Vec<(usize, usize)>,
    /// Inclusive `(min_x, min_y, max_x, max_y)`.
    pub bbox: (usize, usize, usize, usize),
    pub centroid: (f64, f64),
}

impl Blob {
    /// Builds a blob from pixels; they are sorted into raster order.
    ///
    /// Panics on an empty pixel list.
    pub fn from_pixels(label: u32, mut pixels: Vec<(usize, usize)>) -> Self {
        assert!(!pixels.is_empty(), "blob must contain at least one pixel");
        pixels.sort_unstable_by_key(|&(x, y)| (y, x));
        let mut bbox = (usize::MAX, usize::MAX, 0, 0);
        let (mut sx, mut sy) = (0f64, 0f64);
        for &(x, y) in &pixels {
            bbox.0 = bbox.0.min(x);
            bbox.1 = bbox.1.min(y);
            bbox.2 = bbox.2.max(x);
            bbox.3 = bbox.3.max(y);
            sx += x as f64;
            sy += y as f64;
        }
        let n = pixels.len() as f64;
        Blob {
            label,
            pixels,
            bbox,
            centroid: (sx / n, sy / n),
        }
    }

    #[inline]
    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.pixels
            .binary_search_by_key(&(y, x), |&(px, py)| (py, px))
            .is_ok()
    }

    pub fn to_mask(&self, width: usize, height: usize) -> BinaryMask {
        let mut m = BinaryMask::new(width, height);
        for &(x, y) in &self.pixels {
            m.set(x, y, true);
        }
        m
    }

    /// Same blob shifted by `(dx, dy)`; every shifted pixel must stay non-negative.
    pub fn translated(&self, dx: i64, dy: i64) -> Blob {
        let pixels = self
            .pixels
            .iter()
            .map(|&(x, y)| ((x as i64 + dx) as usize, (y as i64 + dy) as usize))
            .collect();
        Blob::from_pixels(self.label, pixels)
    }
}

/// A pixel assumed to lie on a hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HandSeed {
    pub x: usize,
    pub y: usize,
    pub depth_raw: RawDepth,
}

impl HandSeed {
    /// Seed at `(x, y)` with the frame's depth there; the depth must be convertible.
    pub fn at(frame: &DepthFrame, model: &DepthModel, x: usize, y: usize) -> Result<Self> {
        if x >= frame.width() || y >= frame.height() {
            return Err(Error::Domain(format!("seed ({x}, {y}) outside frame")));
        }
        let raw = frame.get(x, y);
        if !model.is_valid(raw) {
            return Err(Error::Domain(format!("seed depth {raw} is not valid")));
        }
        Ok(HandSeed {
            x,
            y,
            depth_raw: RawDepth::new(raw)?,
        })
    }
}

/// Foreground iff the pixel is valid and within `band_cm` of the seed depth.
pub fn depth_threshold(
    frame: &DepthFrame,
    model: &DepthModel,
    seed: &HandSeed,
    band_cm: f64,
) -> Result<BinaryMask> {
    if !(band_cm > 0.0) {
        return Err(Error::Config(format!(
            "band_cm must be positive, got {band_cm}"
        )));
    }
    let seed_cm = model.raw_to_cm(seed.depth_raw)?.value();
    let bits = frame
        .samples()
        .iter()
        .map(|&raw| {
            model.is_valid(raw)
                && model
                    .depth_of(raw)
                    .is_some_and(|d| (d - seed_cm).abs() <= band_cm)
        })
        .collect();
    BinaryMask::from_bits(frame.width(), frame.height(), bits)
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut a: u32) -> u32 {
        while self.parent[a as usize] != a {
            let grand = self.parent[self.parent[a as usize] as usize];
            self.parent[a as usize] = grand;
            a = grand;
        }
        a
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so provisional order follows raster order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

const NO_LABEL: u32 = u32::MAX;

/// Per-pixel component labels (`0` background, `1..` in raster order of
/// each component's first pixel) and the component count.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, u32) {
    let (w, h) = (mask.width(), mask.height());
    let mut provisional = vec![NO_LABEL; w * h];
    let mut sets = DisjointSet { parent: Vec::new() };

    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            // already-visited 8-neighbours: W, NW, N, NE
            let mut current = NO_LABEL;
            let neighbours = [
                (x.checked_sub(1), Some(y)),
                (x.checked_sub(1), y.checked_sub(1)),
                (Some(x), y.checked_sub(1)),
                ((x + 1 < w).then_some(x + 1), y.checked_sub(1)),
            ];
            for (nx, ny) in neighbours {
                let (Some(nx), Some(ny)) = (nx, ny) else {
                    continue;
                };
                let l = provisional[ny * w + nx];
                if l == NO_LABEL {
                    continue;
                }
                if current == NO_LABEL {
                    current = l;
                } else if current != l {
                    sets.union(current, l);
                }
            }
            if current == NO_LABEL {
                current = sets.make();
            }
            provisional[y * w + x] = current;
        }
    }

    let mut final_label = vec![0u32; sets.parent.len()];
    let mut next = 0u32;
    let mut labels = vec![0u32; w * h];
    for (i, &p) in provisional.iter().enumerate() {
        if p == NO_LABEL {
            continue;
        }
        let root = sets.find(p) as usize;
        if final_label[root] == 0 {
            next += 1;
            final_label[root] = next;
        }
        labels[i] = final_label[root];
    }
    (labels, next)
}

/// Maximal 8-connected components, labelled in raster order of their first pixel.
pub fn connected_components(mask: &BinaryMask) -> Vec<Blob> {
    let (labels, count) = label_components(mask);
    let w = mask.width();
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); count as usize];
    for (i, &l) in labels.iter().enumerate() {
        if l > 0 {
            groups[l as usize - 1].push((i % w, i / w));
        }
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, px)| Blob::from_pixels(i as u32 + 1, px))
        .collect()
}

/// The blob containing the seed pixel.
pub fn select_hand_blob(blobs: &[Blob], seed: &HandSeed) -> Result<Blob> {
    blobs
        .iter()
        .find(|b| {
            let (x0, y0, x1, y1) = b.bbox;
            (x0..=x1).contains(&seed.x) && (y0..=y1).contains(&seed.y) && b.contains(seed.x, seed.y)
        })
        .cloned()
        .ok_or_else(|| Error::NotFound(format!("seed ({}, {}) lies on background", seed.x, seed.y)))
}

/// Marks background regions not 4-connected to the border as foreground.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    let visit =
        |x: usize, y: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<(usize, usize)>| {
            let i = y * w + x;
            if !mask.get(x, y) && !outside[i] {
                outside[i] = true;
                queue.push_back((x, y));
            }
        };
    for x in 0..w {
        visit(x, 0, &mut outside, &mut queue);
        visit(x, h - 1, &mut outside, &mut queue);
    }
    for y in 0..h {
        visit(0, y, &mut outside, &mut queue);
        visit(w - 1, y, &mut outside, &mut queue);
    }
    while let Some((x, y)) = queue.pop_front() {
        if x > 0 {
            visit(x - 1, y, &mut outside, &mut queue);
        }
        if x + 1 < w {
            visit(x + 1, y, &mut outside, &mut queue);
        }
        if y > 0 {
            visit(x, y - 1, &mut outside, &mut queue);
        }
        if y + 1 < h {
            visit(x, y + 1, &mut outside, &mut queue);
        }
    }
    BinaryMask::from_bits(w, h, outside.into_iter().map(|o| !o).collect())
        .expect("dimensions preserved")
}

/// Parameters of the nearest-object seed heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedParams {
    pub max_hands: usize,
    pub min_area: usize,
    /// Depth slab behind the nearest valid sample, in centimetres.
    pub slab_cm: f64,
}

impl Default for SeedParams {
    fn default() -> Self {
        SeedParams {
            max_hands: 2,
            min_area: 100,
            slab_cm: 20.0,
        }
    }
}

/// Finds up to `max_hands` seeds among the nearest objects of the frame.
///
/// Components of the slab mask are ranked by area (descending) and each
/// contributes its nearest-depth pixel, ties resolved in raster order.
pub fn find_hand_seeds(
    frame: &DepthFrame,
    model: &DepthModel,
    params: &SeedParams,
) -> Result<Vec<HandSeed>> {
    if !(1..=2).contains(&params.max_hands) {
        return Err(Error::Config(format!(
            "max_hands must be 1 or 2, got {}",
            params.max_hands
        )));
    }
    let nearest = frame
        .samples()
        .iter()
        .copied()
        .filter(|&r| model.is_valid(r))
        .min()
        .ok_or_else(|| Error::NotFound("frame has no valid depth".into()))?;
    let limit_cm = model.depth_of(nearest).expect("valid raw") + params.slab_cm;
    let slab = BinaryMask::from_bits(
        frame.width(),
        frame.height(),
        frame
            .samples()
            .iter()
            .map(|&r| model.is_valid(r) && model.depth_of(r).is_some_and(|d| d <= limit_cm))
            .collect(),
    )?;
    let mut blobs: Vec<Blob> = connected_components(&slab)
        .into_iter()
        .filter(|b| b.area() >= params.min_area)
        .collect();
    if blobs.is_empty() {
        return Err(Error::NotFound(format!(
            "no component of at least {} pixels",
            params.min_area
        )));
    }
    // stable: equal areas keep raster order of labels
    blobs.sort_by(|a, b| b.area().cmp(&a.area()));
    blobs
        .iter()
        .take(params.max_hands)
        .map(|b| {
            let &(x, y) = b
                .pixels
                .iter()
                .min_by_key(|&&(x, y)| (frame.get(x, y), y, x))
                .expect("non-empty blob");
            Ok(HandSeed {
                x,
                y,
                depth_raw: RawDepth::new(frame.get(x, y))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth_model::SENTINEL;
    use proptest::prelude::*;

    /// Breadth-first flood fill over 8-neighbours, seeded in raster order.
    fn flood_fill_oracle(mask: &BinaryMask) -> Vec<Vec<(usize, usize)>> {
        let (w, h) = (mask.width(), mask.height());
        let mut seen = vec![false; w * h];
        let mut out = Vec::new();
        for sy in 0..h {
            for sx in 0..w {
                if !mask.get(sx, sy) || seen[sy * w + sx] {
                    continue;
                }
                let mut comp = Vec::new();
                let mut q = VecDeque::from([(sx, sy)]);
                seen[sy * w + sx] = true;
                while let Some((x, y)) = q.pop_front() {
                    comp.push((x, y));
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                            if mask.get_or_background(nx, ny)
                                && !seen[ny as usize * w + nx as usize]
                            {
                                seen[ny as usize * w + nx as usize] = true;
                                q.push_back((nx as usize, ny as usize));
                            }
                        }
                    }
                }
                comp.sort_by_key(|&(x, y)| (y, x));
                out.push(comp);
            }
        }
        out
    }

    fn matches_oracle(mask: &BinaryMask) -> bool {
        let blobs = connected_components(mask);
        let oracle = flood_fill_oracle(mask);
        blobs.len() == oracle.len()
            && blobs
                .iter()
                .zip(&oracle)
                .enumerate()
                .all(|(i, (b, o))| b.label == i as u32 + 1 && &b.pixels == o)
    }

    #[test]
    fn empty_and_diagonal() {
        assert!(connected_components(&BinaryMask::new(4, 4)).is_empty());
        let m = BinaryMask::from_rows(&["#.", ".#"]);
        let blobs = connected_components(&m);
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].area(), 2);
        assert_eq!(blobs[0].bbox, (0, 0, 1, 1));
        assert_eq!(blobs[0].centroid, (0.5, 0.5));
    }

    #[test]
    fn labels_follow_first_pixel_order() {
        // the U-shape merges two provisional labels late
        let m = BinaryMask::from_rows(&["#.#.#", "#.#..", "###.#"]);
        let blobs = connected_components(&m);
        assert_eq!(blobs.len(), 3);
        assert_eq!(blobs[0].pixels[0], (0, 0));
        assert_eq!(blobs[1].pixels[0], (4, 0));
        assert_eq!(blobs[2].pixels[0], (4, 2));
        assert!(matches_oracle(&m));
    }

    #[test]
    fn exhaustive_4x4_against_flood_fill() {
        for bits in 0u32..(1 << 16) {
            let m = BinaryMask::from_fn(4, 4, |x, y| bits >> (y * 4 + x) & 1 == 1);
            assert!(matches_oracle(&m), "mask {bits:#06x}");
        }
    }

    proptest! {
        #[test]
        fn random_16x16_against_flood_fill(bits in prop::collection::vec(any::<bool>(), 256)) {
            let m = BinaryMask::from_bits(16, 16, bits).unwrap();
            prop_assert!(matches_oracle(&m));
        }

        #[test]
        fn blobs_partition_foreground(bits in prop::collection::vec(prop::bool::weighted(0.4), 20 * 13)) {
            let m = BinaryMask::from_bits(20, 13, bits).unwrap();
            let blobs = connected_components(&m);
            let mut union = BinaryMask::new(20, 13);
            let mut total = 0;
            for b in &blobs {
                for &(x, y) in &b.pixels {
                    prop_assert!(!union.get(x, y));
                    union.set(x, y, true);
                }
                total += b.area();
            }
            prop_assert_eq!(union, m.clone());
            prop_assert_eq!(total, m.count());
        }
    }

    fn model() -> DepthModel {
        DepthModel::default()
    }

    #[test]
    fn threshold_uniform_and_sentinel() {
        let m = model();
        let f = DepthFrame::new(4, 3, vec![700; 12]).unwrap();
        let seed = HandSeed::at(&f, &m, 1, 1).unwrap();
        assert_eq!(depth_threshold(&f, &m, &seed, 15.0).unwrap().count(), 12);

        let mut samples = vec![SENTINEL; 12];
        samples[5] = 700;
        let f = DepthFrame::new(4, 3, samples).unwrap();
        let seed = HandSeed::at(&f, &m, 1, 1).unwrap();
        let mask = depth_threshold(&f, &m, &seed, 15.0).unwrap();
        assert_eq!(mask.foreground().collect::<Vec<_>>(), vec![(1, 1)]);
        assert!(HandSeed::at(&f, &m, 0, 0).is_err());
        assert!(depth_threshold(&f, &m, &seed, 0.0).is_err());
    }

    #[test]
    fn threshold_band_edges() {
        let m = model();
        let seed_raw = 700u16;
        let seed_cm = m.depth_of(seed_raw).unwrap();
        let samples: Vec<u16> = (600..800).collect();
        let f = DepthFrame::new(200, 1, samples.clone()).unwrap();
        let seed = HandSeed::at(&f, &m, 100, 0).unwrap();
        let mask = depth_threshold(&f, &m, &seed, 10.0).unwrap();
        for (i, &r) in samples.iter().enumerate() {
            let inside = (m.depth_of(r).unwrap() - seed_cm).abs() <= 10.0;
            assert_eq!(mask.get(i, 0), inside);
        }
    }

    #[test]
    fn select_blob() {
        let m = model();
        let mask = BinaryMask::from_rows(&["##..", "...#"]);
        let blobs = connected_components(&mask);
        let f = DepthFrame::new(4, 2, vec![700; 8]).unwrap();
        let on = HandSeed::at(&f, &m, 3, 1).unwrap();
        assert_eq!(select_hand_blob(&blobs, &on).unwrap().label, 2);
        let off = HandSeed::at(&f, &m, 2, 0).unwrap();
        assert!(matches!(
            select_hand_blob(&blobs, &off),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn fill_holes_ignores_border_regions() {
        let m = BinaryMask::from_rows(&[
            "#####.", //
            "#..#..", //
            "#####.", //
            "......",
        ]);
        let filled = fill_holes(&m);
        assert!(filled.get(1, 1) && filled.get(2, 1));
        assert!(!filled.get(4, 1));
        assert_eq!(filled.count(), m.count() + 2);
        // diagonal gap does not leak under 4-connected background
        let d = BinaryMask::from_rows(&[".#.", "#.#", ".#."]);
        assert!(fill_holes(&d).get(1, 1));
    }

    #[test]
    fn seeds_empty_scene() {
        let f = DepthFrame::new(8, 8, vec![SENTINEL; 64]).unwrap();
        let r = find_hand_seeds(&f, &model(), &SeedParams::default());
        assert!(matches!(r, Err(Error::NotFound(_))));
    }

    #[test]
    fn seeds_rank_by_area_and_pick_nearest_pixel() {
        let m = model();
        let (w, h) = (30, 10);
        let mut samples = vec![1000u16; w * h];
        // large object at x 2..12, small at 20..24
        for y in 2..8 {
            for x in 2..12 {
                samples[y * w + x] = 700;
            }
            for x in 20..24 {
                samples[y * w + x] = 702;
            }
        }
        samples[3 * w + 5] = 690;
        samples[4 * w + 21] = 695;
        samples[4 * w + 22] = 695;
        let f = DepthFrame::new(w, h, samples).unwrap();
        let params = SeedParams {
            max_hands: 2,
            min_area: 10,
            slab_cm: 20.0,
        };
        let seeds = find_hand_seeds(&f, &m, &params).unwrap();
        assert_eq!(seeds.len(), 2);
        assert_eq!((seeds[0].x, seeds[0].y), (5, 3));
        assert_eq!((seeds[1].x, seeds[1].y), (21, 4));
        let one = find_hand_seeds(
            &f,
            &m,
            &SeedParams {
                max_hands: 1,
                ..params
            },
        )
        .unwrap();
        assert_eq!(one.len(), 1);
        let big = SeedParams {
            min_area: 1000,
            ..params
        };
        assert!(matches!(
            find_hand_seeds(&f, &m, &big),
            Err(Error::NotFound(_))
        ));
        assert!(find_hand_seeds(
            &f,
            &m,
            &SeedParams {
                max_hands: 3,
                ..params
            }
        )
        .is_err());
    }
}
