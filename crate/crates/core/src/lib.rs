//! Critical-zone estimation around rail tracks from a segmentation mask,
//! calibrated only by the known rail gauge, and intrusion classification of
//! detected objects against those zones.
//!
//! The pipeline:
//!
//! 1. [`scene_io`] loads the class table, label mask and detections.
//! 2. [`mask_post`] cleans predicted masks and provides the evaluation metrics.
//! 3. [`rail_gauge`] measures the track width per row and turns it into a
//!    pixels-per-millimetre profile.
//! 4. [`zones`] converts fixed metric offsets into per-row zone boundaries.
//! 5. [`violation`] samples each bounding box against the zone raster.
//!
//! [`synth`] renders flat-ground pinhole scenes with analytic ground truth and
//! [`cli`] ties everything together behind the `railzone` binary.

mod components;
pub mod cli;
pub mod error;
pub mod json;
pub mod mask_post;
pub mod rail_gauge;
pub mod render;
pub mod scene_io;
pub mod synth;
pub mod violation;
pub mod zones;

pub use error::{Error, Result};
