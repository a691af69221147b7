//! Raw disparity to metric depth conversion.
//!
//! The sensor reports an 11-bit disparity `raw` per pixel. Metric depth in
//! centimetres follows the tangent model
//!
//! ```text
//! depth = K * tan(H * raw + L) - O
//! ```
//!
//! The tangent has a pole inside the 11-bit range, so a [`DepthModel`] carries
//! an explicit upper bound on the raw values it is willing to convert.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest representable 11-bit sample.
pub const RAW_MAX: u16 = 2047;

/// Raw value reserved for "no measurement".
pub const SENTINEL: u16 = RAW_MAX;

/// Default usable raw range upper bound.
pub const DEFAULT_RAW_VALID_MAX: u16 = 1100;

/// A single 11-bit disparity sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RawDepth(u16);

impl RawDepth {
    pub const SENTINEL: RawDepth = RawDepth(SENTINEL);

    pub fn new(value: u16) -> Result<Self> {
        if value > RAW_MAX {
            return Err(Error::Domain(format!(
                "raw value {value} exceeds 11-bit range"
            )));
        }
        Ok(RawDepth(value))
    }

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn is_sentinel(self) -> bool {
        self.0 == SENTINEL
    }
}

/// Depth in centimetres.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct DepthCm(pub f64);

impl DepthCm {
    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Coefficients of the tangent calibration model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationParams {
    /// Radians per raw unit.
    pub h: f64,
    /// Centimetres.
    pub k: f64,
    /// Radians.
    pub l: f64,
    /// Centimetres.
    pub o: f64,
}

impl Default for CalibrationParams {
    fn default() -> Self {
        CalibrationParams {
            h: 3.5e-4,
            k: 12.36,
            l: 1.18,
            o: 3.7,
        }
    }
}

impl CalibrationParams {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.h, self.k, self.l, self.o]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Domain(
                "calibration parameters must be finite".into(),
            ));
        }
        if self.h <= 0.0 || self.k <= 0.0 {
            return Err(Error::Domain("calibration requires H > 0 and K > 0".into()));
        }
        Ok(())
    }

    /// Evaluates the calibration formula without any domain checks.
    #[inline]
    pub fn eval(&self, raw: f64) -> f64 {
        self.k * (self.h * raw + self.l).tan() - self.o
    }

    /// Continuous inverse of [`CalibrationParams::eval`].
    #[inline]
    pub fn eval_inverse(&self, depth_cm: f64) -> f64 {
        (((depth_cm + self.o) / self.k).atan() - self.l) / self.h
    }
}

/// Largest raw value `r` with `H*r + L < pi/2`, clamped to 2046.
///
/// Returns a domain error when no raw value lies below the pole.
pub fn valid_domain(params: &CalibrationParams) -> Result<u16> {
    params.validate()?;
    let below_pole = |r: f64| params.h * r + params.l < FRAC_PI_2;
    if !below_pole(0.0) {
        return Err(Error::Domain(
            "calibration pole at or below raw 0: empty domain".into(),
        ));
    }
    let cap = f64::from(SENTINEL - 1);
    let estimate = ((FRAC_PI_2 - params.l) / params.h).floor();
    if estimate >= cap && below_pole(cap) {
        return Ok(SENTINEL - 1);
    }
    let mut r = estimate.clamp(0.0, cap);
    while r > 0.0 && !below_pole(r) {
        r -= 1.0;
    }
    while r < cap && below_pole(r + 1.0) {
        r += 1.0;
    }
    Ok(r as u16)
}

/// Calibration parameters together with the accepted raw range.
///
/// Conversions go through a lookup table built once from the formula, so
/// per-pixel use is cheap and bit-identical to direct evaluation.
#[derive(Debug, Clone)]
pub struct DepthModel {
    params: CalibrationParams,
    raw_valid_max: u16,
    table: Vec<f64>,
}

impl Default for DepthModel {
    fn default() -> Self {
        DepthModel::new(CalibrationParams::default(), DEFAULT_RAW_VALID_MAX)
            .expect("default calibration is valid")
    }
}

impl DepthModel {
    pub fn new(params: CalibrationParams, raw_valid_max: u16) -> Result<Self> {
        let domain = valid_domain(&params)?;
        if raw_valid_max > domain {
            return Err(Error::Domain(format!(
                "raw_valid_max {raw_valid_max} exceeds calibration domain {domain}"
            )));
        }
        let table = (0..=raw_valid_max)
            .map(|r| params.eval(f64::from(r)))
            .collect();
        Ok(DepthModel {
            params,
            raw_valid_max,
            table,
        })
    }

    pub fn params(&self) -> &CalibrationParams {
        &self.params
    }

    pub fn raw_valid_max(&self) -> u16 {
        self.raw_valid_max
    }

    /// True when `raw` converts to a metric depth.
    #[inline]
    pub fn is_valid(&self, raw: u16) -> bool {
        raw <= self.raw_valid_max && raw != SENTINEL
    }

    /// Metric depth of a raw sample, `None` outside the valid domain.
    #[inline]
    pub fn depth_of(&self, raw: u16) -> Option<f64> {
        self.table.get(usize::from(raw)).copied()
    }

    pub fn raw_to_cm(&self, raw: RawDepth) -> Result<DepthCm> {
        if raw.is_sentinel() {
            return Err(Error::Domain(
                "raw value is the no-measurement sentinel".into(),
            ));
        }
        self.depth_of(raw.value()).map(DepthCm).ok_or_else(|| {
            Error::Domain(format!(
                "raw value {} beyond valid maximum {}",
                raw.value(),
                self.raw_valid_max
            ))
        })
    }

    pub fn cm_to_raw(&self, depth: DepthCm) -> Result<RawDepth> {
        let r = self.params.eval_inverse(depth.value()).round();
        if !r.is_finite() || r < 0.0 || r > f64::from(self.raw_valid_max) {
            return Err(Error::Domain(format!(
                "depth {:.2} cm maps outside raw range [0, {}]",
                depth.value(),
                self.raw_valid_max
            )));
        }
        RawDepth::new(r as u16)
    }

    /// Centimetres per raw step at `raw`, `K*H*sec^2(H*raw + L)`.
    pub fn cm_per_raw(&self, raw: f64) -> f64 {
        let c = (self.params.h * raw + self.params.l).cos();
        self.params.k * self.params.h / (c * c)
    }
}
