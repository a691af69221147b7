//! Exact Euclidean distance transform and palm-centre extraction.
//!
//! The transform is the two-pass separable lower-envelope method of
//! Felzenszwalb & Huttenlocher, carried out in integers: parabola
//! intersections are kept as fractions and compared by cross-multiplication,
//! so the output is the exact squared distance.

use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::segmentation::Blob;

/// Squared distance from each foreground pixel to the nearest background
/// pixel; background pixels hold 0.
///
/// The mask is treated as surrounded by a one-pixel background border, so
/// the map is defined even for masks without any background pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMap {
    width: usize,
    height: usize,
    values: Vec<u32>,
}

impl DistanceMap {
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn values(&self) -> &[u32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.values[y * self.width + x]
    }

    /// Largest value over `pixels`.
    pub fn max_over(&self, pixels: &[(usize, usize)]) -> Option<u32> {
        pixels.iter().map(|&(x, y)| self.get(x, y)).max()
    }
}

/// Palm centre: the distance-transform maximum over one hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PalmCenter {
    pub x: usize,
    pub y: usize,
    /// Square root of the maximal squared distance.
    pub inradius_px: f64,
}

#[derive(Clone, Copy)]
enum Bound {
    NegInf,
    At { num: i64, den: i64 },
}

impl Bound {
    /// `num/den <= self`
    #[inline]
    fn ge_frac(self, num: i64, den: i64) -> bool {
        match self {
            Bound::NegInf => false,
            Bound::At { num: zn, den: zd } => num * zd <= zn * den,
        }
    }

    /// `self < q`
    #[inline]
    fn lt_int(self, q: i64) -> bool {
        match self {
            Bound::NegInf => true,
            Bound::At { num, den } => num < q * den,
        }
    }
}

/// One-dimensional squared distance transform of a sampled function
/// (`d[q] = min_p (q - p)^2 + f[p]`), `None` entries being +infinity.
fn lower_envelope(f: &[Option<i64>], out: &mut [i64], v: &mut Vec<i64>, z: &mut Vec<Bound>) {
    v.clear();
    z.clear();
    for (q, fq) in f.iter().enumerate() {
        let Some(fq) = *fq else { continue };
        let q = q as i64;
        loop {
            let Some(&p) = v.last() else {
                v.push(q);
                z.push(Bound::NegInf);
                break;
            };
            let fp = f[p as usize].expect("envelope holds finite samples");
            let num = (fq + q * q) - (fp + p * p);
            let den = 2 * (q - p);
            if z.last().expect("paired with v").ge_frac(num, den) {
                v.pop();
                z.pop();
                continue;
            }
            v.push(q);
            z.push(Bound::At { num, den });
            break;
        }
    }
    assert!(!v.is_empty(), "row without any finite sample");
    let mut k = 0usize;
    for (q, slot) in out.iter_mut().enumerate() {
        let q = q as i64;
        while k + 1 < v.len() && z[k + 1].lt_int(q) {
            k += 1;
        }
        let p = v[k];
        *slot = (q - p) * (q - p) + f[p as usize].expect("finite");
    }
}

/// Exact squared Euclidean distance transform.
pub fn distance_transform(mask: &BinaryMask) -> DistanceMap {
    let padded = mask.pad(1);
    let (w, h) = (padded.width(), padded.height());

    // columns: vertical distance to background, always finite thanks to padding
    let mut col = vec![0i64; w * h];
    let mut f = vec![None; h.max(w)];
    let mut out = vec![0i64; h.max(w)];
    let (mut v, mut z) = (Vec::new(), Vec::new());
    for x in 0..w {
        for y in 0..h {
            f[y] = if padded.get(x, y) { None } else { Some(0) };
        }
        lower_envelope(&f[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            col[y * w + x] = out[y];
        }
    }
    let mut values = vec![0u32; mask.width() * mask.height()];
    for y in 1..h - 1 {
        for x in 0..w {
            f[x] = Some(col[y * w + x]);
        }
        lower_envelope(&f[..w], &mut out[..w], &mut v, &mut z);
        for x in 1..w - 1 {
            values[(y - 1) * mask.width() + (x - 1)] = out[x] as u32;
        }
    }
    DistanceMap {
        width: mask.width(),
        height: mask.height(),
        values,
    }
}

/// Argmax of the distance map over the hand's pixels, ties broken by the
/// smallest y and then the smallest x.
pub fn find_palm_center(dist: &DistanceMap, hand: &Blob) -> Result<PalmCenter> {
    let mut best: Option<((usize, usize), u32)> = None;
    // pixels are in raster order, so the first maximum wins ties
    for &(x, y) in &hand.pixels {
        let d = dist.get(x, y);
        if best.map_or(true, |(_, b)| d > b) {
            best = Some(((x, y), d));
        }
    }
    let ((x, y), max) = best.ok_or_else(|| Error::DegenerateHand("hand has no pixels".into()))?;
    if max <= 1 {
        return Err(Error::DegenerateHand(format!(
            "maximum squared distance {max}: hand thinner than two pixels"
        )));
    }
    Ok(PalmCenter {
        x,
        y,
        inradius_px: f64::from(max).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::connected_components;
    use proptest::prelude::*;

    /// Minimum over every background pixel of the padded grid.
    fn brute_force(mask: &BinaryMask) -> Vec<u32> {
        let p = mask.pad(1);
        let background: Vec<(i64, i64)> = (0..p.height())
            .flat_map(|y| (0..p.width()).map(move |x| (x, y)))
            .filter(|&(x, y)| !p.get(x, y))
            .map(|(x, y)| (x as i64 - 1, y as i64 - 1))
            .collect();
        (0..mask.height())
            .flat_map(|y| (0..mask.width()).map(move |x| (x as i64, y as i64)))
            .map(|(x, y)| {
                background
                    .iter()
                    .map(|&(bx, by)| ((x - bx) * (x - bx) + (y - by) * (y - by)) as u32)
                    .min()
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn trivial_masks() {
        let empty = BinaryMask::new(5, 4);
        assert!(distance_transform(&empty).values().iter().all(|&v| v == 0));
        let mut one = BinaryMask::new(5, 4);
        one.set(2, 1, true);
        let d = distance_transform(&one);
        assert_eq!(d.get(2, 1), 1);
        assert_eq!(d.values().iter().sum::<u32>(), 1);
        let full = BinaryMask::from_fn(3, 3, |_, _| true);
        assert_eq!(
            distance_transform(&full).values(),
            &[1, 1, 1, 1, 4, 1, 1, 1, 1]
        );
    }

    #[test]
    fn exhaustive_4x4() {
        for bits in 0u32..(1 << 16) {
            let m = BinaryMask::from_fn(4, 4, |x, y| bits >> (y * 4 + x) & 1 == 1);
            assert_eq!(
                distance_transform(&m).values(),
                brute_force(&m).as_slice(),
                "{bits:#x}"
            );
        }
    }

    #[test]
    fn disk_center() {
        let m = BinaryMask::from_fn(32, 32, |x, y| {
            let (dx, dy) = (x as i64 - 16, y as i64 - 16);
            dx * dx + dy * dy <= 100
        });
        let blob = &connected_components(&m)[0];
        let c = find_palm_center(&distance_transform(&m), blob).unwrap();
        assert_eq!((c.x, c.y), (16, 16));
        assert!((c.inradius_px - 10.0).abs() <= 0.8);
    }

    #[test]
    fn bar_center_on_middle_row() {
        let m = BinaryMask::from_fn(40, 3, |_, _| true);
        let blob = &connected_components(&m)[0];
        let c = find_palm_center(&distance_transform(&m), blob).unwrap();
        assert_eq!((c.x, c.y), (1, 1));
        assert_eq!(c.inradius_px, 2.0);
    }

    #[test]
    fn thin_hand_is_degenerate() {
        let m = BinaryMask::from_rows(&["####", "...."]);
        let blob = &connected_components(&m)[0];
        assert!(matches!(
            find_palm_center(&distance_transform(&m), blob),
            Err(Error::DegenerateHand(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn random_32x32_matches_brute_force(bits in prop::collection::vec(prop::bool::weighted(0.8), 32 * 32)) {
            let m = BinaryMask::from_bits(32, 32, bits).unwrap();
            let (got, want) = (distance_transform(&m), brute_force(&m));
            prop_assert_eq!(got.values(), want.as_slice());
        }

        #[test]
        fn lipschitz(bits in prop::collection::vec(prop::bool::weighted(0.85), 20 * 20)) {
            let m = BinaryMask::from_bits(20, 20, bits).unwrap();
            let d = distance_transform(&m);
            for y in 0..20 {
                for x in 0..20 {
                    let here = f64::from(d.get(x, y)).sqrt();
                    prop_assert_eq!(d.get(x, y) == 0, !m.get(x, y));
                    if x + 1 < 20 {
                        prop_assert!((here - f64::from(d.get(x + 1, y)).sqrt()).abs() <= 1.0 + 1e-12);
                    }
                    if y + 1 < 20 {
                        prop_assert!((here - f64::from(d.get(x, y + 1)).sqrt()).abs() <= 1.0 + 1e-12);
                    }
                }
            }
        }

        #[test]
        fn translation_equivariance(
            r in 3i64..7, cx in 8i64..14, cy in 8i64..14, tx in 0i64..6, ty in 0i64..6,
        ) {
            let disk = |ox: i64, oy: i64| BinaryMask::from_fn(32, 32, move |x, y| {
                let (dx, dy) = (x as i64 - ox, y as i64 - oy);
                dx * dx + dy * dy <= r * r || (dy == 0 && dx > 0 && dx <= r + 4)
            });
            let a = disk(cx, cy);
            let b = disk(cx + tx, cy + ty);
            let ca = find_palm_center(&distance_transform(&a), &connected_components(&a)[0]).unwrap();
            let cb = find_palm_center(&distance_transform(&b), &connected_components(&b)[0]).unwrap();
            prop_assert_eq!((ca.x as i64 + tx, ca.y as i64 + ty), (cb.x as i64, cb.y as i64));
            prop_assert_eq!(ca.inradius_px, cb.inradius_px);
        }

        #[test]
        fn rotation_maps_center_onto_tied_maximum(
            bits in prop::collection::vec(prop::bool::weighted(0.9), 18 * 14),
        ) {
            let m = BinaryMask::from_bits(18, 14, bits).unwrap();
            let Some(blob) = connected_components(&m).into_iter().max_by_key(|b| b.area()) else {
                return Ok(());
            };
            let d = distance_transform(&m);
            let Ok(c) = find_palm_center(&d, &blob) else { return Ok(()) };
            let r = m.rotated_cw();
            let dr = distance_transform(&r);
            let (nx, ny) = (m.height() - 1 - c.y, c.x);
            prop_assert_eq!(dr.get(nx, ny), d.get(c.x, c.y));
            let rotated_blob = connected_components(&r).into_iter().find(|b| b.contains(nx, ny)).unwrap();
            prop_assert_eq!(dr.max_over(&rotated_blob.pixels), Some(d.get(c.x, c.y)));
        }

        #[test]
        fn far_background_toggles_do_not_move_center(
            flips in prop::collection::vec((0usize..40, 30usize..40), 0..20),
        ) {
            let base = BinaryMask::from_fn(40, 40, |x, y| {
                let (dx, dy) = (x as i64 - 12, y as i64 - 12);
                dx * dx + dy * dy <= 64
            });
            let mut toggled = base.clone();
            for (x, y) in flips {
                let v = toggled.get(x, y);
                toggled.set(x, y, !v);
            }
            let hand = &connected_components(&base)[0];
            let a = find_palm_center(&distance_transform(&base), hand).unwrap();
            let b = find_palm_center(&distance_transform(&toggled), hand).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
