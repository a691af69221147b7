//! Hand analysis on 11-bit depth frames: calibration, depth-band
//! segmentation, morphological palm/finger separation, minimum-depth
//! fingertips, distance-transform palm centres and two-hand labelling.

pub mod bench;
pub mod depth_model;
pub mod error;
pub mod fingertips;
pub mod frame_io;
pub mod mask;
pub mod morphology;
pub mod palm_center;
pub mod pipeline;
pub mod segmentation;
pub mod synth;
pub mod tracker;

pub use depth_model::{CalibrationParams, DepthCm, DepthModel, RawDepth};
pub use error::{Error, Result};
pub use frame_io::{DepthFrame, DetectionReport};
pub use mask::BinaryMask;
