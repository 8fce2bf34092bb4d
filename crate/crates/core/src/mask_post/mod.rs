//! Mask post-processing and the evaluation metrics built on it.
//!
//! Predicted masks are cleaned with a per-class morphological closing. Small
//! connected patches (bounding box within `L x L`) are then excluded from the
//! segmentation metrics rather than deleted from the mask.

mod det_metrics;
mod morphology;
mod patches;
mod seg_metrics;

pub use det_metrics::{det_map50, det_map50_images, DetScore, AP_IOU_THRESHOLD};
pub use morphology::{close_binary, close_mask, DEFAULT_CLOSING_KERNEL};
pub use patches::{scrub_small_patches, suppress_small_patches, IgnoreMask, PatchFilterConfig};
pub use seg_metrics::{patch_filtered_seg_iou, seg_iou, ClassCounts, SegCounts, SegScore};
