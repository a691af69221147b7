//! Hand identity across frames.
//!
//! A lone hand is always `Single` and drawn white. With two hands the one
//! further right in the (non-mirrored) image becomes `Right`/white and the
//! other `Left`/pink when they first appear; afterwards identities follow
//! palm-centre continuity, so hands may cross without swapping colours.

use serde::{Deserialize, Serialize};

use crate::fingertips::FingertipSet;
use crate::palm_center::PalmCenter;

pub const DEFAULT_MAX_MISSES: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HandId {
    Single,
    Right,
    Left,
}

impl HandId {
    pub fn as_str(self) -> &'static str {
        match self {
            HandId::Single => "Single",
            HandId::Right => "Right",
            HandId::Left => "Left",
        }
    }

    pub fn color(self) -> Rgb {
        match self {
            HandId::Single | HandId::Right => Rgb::WHITE,
            HandId::Left => Rgb::PINK,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub const WHITE: Rgb = Rgb([255, 255, 255]);
    pub const PINK: Rgb = Rgb([255, 105, 180]);
}

/// Everything the per-frame detector knows about one hand.
#[derive(Debug, Clone, PartialEq)]
pub struct HandObservation {
    pub palm: PalmCenter,
    pub fingertips: FingertipSet,
    pub blob_area: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandReport {
    pub id: HandId,
    pub overlay_color: Rgb,
    pub palm: PalmCenter,
    pub fingertips: FingertipSet,
    pub blob_area: usize,
}

impl HandReport {
    fn new(id: HandId, obs: HandObservation) -> Self {
        HandReport {
            id,
            overlay_color: id.color(),
            palm: obs.palm,
            fingertips: obs.fingertips,
            blob_area: obs.blob_area,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    /// `Right`/`Left` once the hand has been part of a pair, otherwise `None`.
    pub identity: Option<HandId>,
    pub center: (f64, f64),
    pub last_seen: u64,
    pub misses: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    tracks: Vec<Track>,
    max_misses: u32,
}

impl Default for TrackState {
    fn default() -> Self {
        TrackState::new(DEFAULT_MAX_MISSES)
    }
}

fn center_of(p: &PalmCenter) -> (f64, f64) {
    (p.x as f64, p.y as f64)
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

impl TrackState {
    pub fn new(max_misses: u32) -> Self {
        TrackState {
            tracks: Vec::new(),
            max_misses: max_misses.max(1),
        }
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    fn identified(&self, id: HandId) -> Option<&Track> {
        self.tracks.iter().find(|t| t.identity == Some(id))
    }

    /// Assigns identities and colours to this frame's hands.
    ///
    /// Reports come back ordered Right before Left. Only the first two
    /// observations are used.
    pub fn label_hands(&self, mut hands: Vec<HandObservation>) -> Vec<HandReport> {
        hands.truncate(2);
        if hands.len() < 2 {
            return hands
                .into_iter()
                .map(|h| HandReport::new(HandId::Single, h))
                .collect();
        }
        let b = hands.pop().expect("two hands");
        let a = hands.pop().expect("two hands");
        let (ca, cb) = (center_of(&a.palm), center_of(&b.palm));

        let by_x = || ca.0 >= cb.0;
        let a_is_right = match (
            self.identified(HandId::Right),
            self.identified(HandId::Left),
        ) {
            (Some(r), Some(l)) => {
                let keep = dist(ca, r.center) + dist(cb, l.center);
                let swap = dist(cb, r.center) + dist(ca, l.center);
                if keep == swap {
                    by_x()
                } else {
                    keep < swap
                }
            }
            (Some(r), None) => {
                let (da, db) = (dist(ca, r.center), dist(cb, r.center));
                if da == db {
                    by_x()
                } else {
                    da < db
                }
            }
            (None, Some(l)) => {
                let (da, db) = (dist(ca, l.center), dist(cb, l.center));
                if da == db {
                    by_x()
                } else {
                    db < da
                }
            }
            (None, None) => by_x(),
        };
        let (right, left) = if a_is_right { (a, b) } else { (b, a) };
        vec![
            HandReport::new(HandId::Right, right),
            HandReport::new(HandId::Left, left),
        ]
    }

    /// Folds one frame's reports into the track state.
    ///
    /// Matched tracks take the new palm centre and reset their miss count;
    /// the rest accumulate a miss and are dropped at `max_misses`.
    pub fn update(&mut self, reports: &[HandReport], frame_index: u64) {
        let mut matched = vec![false; self.tracks.len()];
        for report in reports.iter().take(2) {
            let c = center_of(&report.palm);
            let nearest_free =
                |tracks: &[Track], matched: &[bool], filter: &dyn Fn(&Track) -> bool| {
                    tracks
                        .iter()
                        .enumerate()
                        .filter(|(i, t)| !matched[*i] && filter(t))
                        .min_by(|(_, x), (_, y)| dist(x.center, c).total_cmp(&dist(y.center, c)))
                        .map(|(i, _)| i)
                };
            let slot = match report.id {
                HandId::Single => nearest_free(&self.tracks, &matched, &|_| true),
                id => nearest_free(&self.tracks, &matched, &|t| t.identity == Some(id))
                    .or_else(|| nearest_free(&self.tracks, &matched, &|t| t.identity.is_none())),
            };
            let identity = (report.id != HandId::Single).then_some(report.id);
            match slot {
                Some(i) => {
                    let t = &mut self.tracks[i];
                    t.center = c;
                    t.last_seen = frame_index;
                    t.misses = 0;
                    if identity.is_some() {
                        t.identity = identity;
                    }
                    matched[i] = true;
                }
                None => {
                    self.tracks.push(Track {
                        identity,
                        center: c,
                        last_seen: frame_index,
                        misses: 0,
                    });
                    matched.push(true);
                }
            }
        }
        for (t, m) in self.tracks.iter_mut().zip(&matched) {
            if !m {
                t.misses += 1;
            }
        }
        let max = self.max_misses;
        self.tracks.retain(|t| t.misses < max);
        if self.tracks.len() > 2 {
            self.tracks.sort_by_key(|t| t.misses);
            self.tracks.truncate(2);
        }
    }
}
