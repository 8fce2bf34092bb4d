//! Input formats: class table, label masks and detection sets.
//!
//! Masks are 8-bit single-channel PNGs whose pixel values are class ids.
//! Detections are JSON-lines, one `{"class", "bbox": [x, y, w, h], "score"}`
//! object per line.

mod class_table;
mod detections;
mod mask;
pub(crate) mod png_io;

pub use class_table::{Category, ClassEntry, ClassId, ClassTable, HazardClass, VOID};
pub use detections::{
    load_detection_records, load_detections, parse_detection_records, BBox, Detection,
    DetectionSet,
};
pub(crate) use detections::detection_line;
pub use mask::{filter_classes, load_mask, save_mask, LabelMask, LoadedMask};
