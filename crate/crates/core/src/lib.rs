//! Gaze-vector estimation from DVS event streams.
//!
//! The pipeline runs in five stages, one module each:
//!
//! * [`simulator`] synthesizes event streams, sparse grayscale guide frames
//!   and ground-truth pupil centroids for a moving dark disk.
//! * [`encoder`] rate-codes the events of each temporal bin into a
//!   six-channel colour image fused over the nearest guide frame, and pairs
//!   consecutive frames into training samples.
//! * [`dataset`] persists every artifact (CSV events, P5 PGM frames, the
//!   `EVG6` encoded-frame format, JSON manifests) and splits samples.
//! * [`model`] is a from-scratch two-branch convolutional regressor trained
//!   with Adam on the centroid L1 and gaze-angle losses.
//! * [`eval`] scores predicted gaze vectors with the endpoint-circle and
//!   segment-crossing pixel-radius strategies.

pub mod cli;
pub mod dataset;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod events;
pub mod model;
pub mod render;
pub mod simulator;

pub use error::{Error, Result};
pub use events::{
    normalize_timestamps, slice_by_time, validate_stream, CentroidSample, CentroidTrack, Event,
    EventStream, GazeVector, GrayscaleFrame, Micros, Point2, Rect, SensorGeometry,
};
