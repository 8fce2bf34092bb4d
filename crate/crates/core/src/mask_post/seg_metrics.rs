use std::collections::BTreeMap;

use serde::Serialize;

use super::patches::{suppress_small_patches, IgnoreMask, PatchFilterConfig};
use crate::error::{Error, Result};
use crate::json::{fixed, Fixed6};
use crate::scene_io::{ClassId, ClassTable, LabelMask, VOID};

/// Pixel counts for one class over the non-ignored pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub intersection: u64,
    pub predicted: u64,
    pub ground_truth: u64,
}

impl ClassCounts {
    pub fn union(&self) -> u64 {
        self.predicted + self.ground_truth - self.intersection
    }

    pub fn iou(&self) -> Option<f64> {
        let u = self.union();
        (u > 0).then(|| self.intersection as f64 / u as f64)
    }

    /// Pixel precision; a class that is present but never predicted scores 0.
    pub fn precision(&self) -> Option<f64> {
        self.iou()?;
        Some(if self.predicted == 0 {
            0.0
        } else {
            self.intersection as f64 / self.predicted as f64
        })
    }
}

/// Confusion counts accumulated over one or more image pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SegCounts {
    classes: BTreeMap<ClassId, ClassCounts>,
}

impl SegCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, pred: &LabelMask, gt: &LabelMask, ignore: &IgnoreMask) -> Result<()> {
        if pred.dims() != gt.dims() {
            return Err(Error::DimensionMismatch {
                expected: gt.dims(),
                found: pred.dims(),
            });
        }
        if ignore.dims() != gt.dims() {
            return Err(Error::DimensionMismatch {
                expected: gt.dims(),
                found: ignore.dims(),
            });
        }
        let mut inter = [0u64; 256];
        let mut npred = [0u64; 256];
        let mut ngt = [0u64; 256];
        let mut present = [false; 256];
        for ((&p, &g), &ign) in pred.data().iter().zip(gt.data()).zip(ignore.data()) {
            present[p as usize] = true;
            present[g as usize] = true;
            if ign {
                continue;
            }
            npred[p as usize] += 1;
            ngt[g as usize] += 1;
            if p == g {
                inter[p as usize] += 1;
            }
        }
        for c in 0..=255u8 {
            let i = c as usize;
            if c == VOID || !present[i] {
                continue;
            }
            let e = self.classes.entry(c).or_default();
            e.intersection += inter[i];
            e.predicted += npred[i];
            e.ground_truth += ngt[i];
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &SegCounts) {
        for (&c, o) in &other.classes {
            let e = self.classes.entry(c).or_default();
            e.intersection += o.intersection;
            e.predicted += o.predicted;
            e.ground_truth += o.ground_truth;
        }
    }

    pub fn class_counts(&self) -> &BTreeMap<ClassId, ClassCounts> {
        &self.classes
    }

    pub fn score(&self) -> SegScore {
        let per_class_iou: BTreeMap<_, _> =
            self.classes.iter().map(|(&c, k)| (c, k.iou())).collect();
        let per_class_precision: BTreeMap<_, _> =
            self.classes.iter().map(|(&c, k)| (c, k.precision())).collect();
        SegScore {
            mean_iou: mean_defined(per_class_iou.values()),
            mean_precision: mean_defined(per_class_precision.values()),
            per_class_iou,
            per_class_precision,
        }
    }
}

fn mean_defined<'a>(vals: impl Iterator<Item = &'a Option<f64>>) -> Option<f64> {
    let (sum, n) = vals
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Per-class segmentation scores. Classes whose union is empty after
/// ignoring are `None` and left out of the means. `mean_precision` is the
/// mean per-class pixel precision.
#[derive(Clone, Debug, PartialEq)]
pub struct SegScore {
    pub per_class_iou: BTreeMap<ClassId, Option<f64>>,
    pub mean_iou: Option<f64>,
    pub per_class_precision: BTreeMap<ClassId, Option<f64>>,
    pub mean_precision: Option<f64>,
}

#[derive(Serialize)]
struct ClassReport<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<&'a str>,
    iou: Option<Fixed6>,
    precision: Option<Fixed6>,
}

#[derive(Serialize)]
struct SegReport<'a> {
    per_class: BTreeMap<String, ClassReport<'a>>,
    mean_iou: Option<Fixed6>,
    mean_precision: Option<Fixed6>,
}

impl SegScore {
    pub fn to_json(&self, table: Option<&ClassTable>) -> String {
        let per_class = self
            .per_class_iou
            .iter()
            .map(|(&c, &iou)| {
                (
                    c.to_string(),
                    ClassReport {
                        name: table.and_then(|t| t.name(c)),
                        iou: fixed(iou),
                        precision: fixed(self.per_class_precision[&c]),
                    },
                )
            })
            .collect();
        let report = SegReport {
            per_class,
            mean_iou: fixed(self.mean_iou),
            mean_precision: fixed(self.mean_precision),
        };
        serde_json::to_string_pretty(&report).expect("report serializes")
    }
}

/// Per-class IoU and pixel precision of `pred` against `gt`, skipping pixels
/// set in `ignore`.
pub fn seg_iou(pred: &LabelMask, gt: &LabelMask, ignore: &IgnoreMask) -> Result<SegScore> {
    let mut counts = SegCounts::new();
    counts.add(pred, gt, ignore)?;
    Ok(counts.score())
}

/// [`seg_iou`] with the small-patch filter applied to both masks and the two
/// ignore masks combined.
pub fn patch_filtered_seg_iou(
    pred: &LabelMask,
    gt: &LabelMask,
    cfg: PatchFilterConfig,
) -> Result<SegScore> {
    if pred.dims() != gt.dims() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            found: pred.dims(),
        });
    }
    let ignore = suppress_small_patches(pred, cfg).union(&suppress_small_patches(gt, cfg));
    seg_iou(pred, gt, &ignore)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook per-class IoU from explicit pixel sets.
    fn brute_iou(pred: &LabelMask, gt: &LabelMask, ignore: &IgnoreMask, c: ClassId) -> Option<f64> {
        let (w, h) = pred.dims();
        let (mut i, mut u) = (0, 0);
        for y in 0..h {
            for x in 0..w {
                if ignore.get(x, y) {
                    continue;
                }
                let p = pred.get(x, y) == c;
                let g = gt.get(x, y) == c;
                i += (p && g) as u32;
                u += (p || g) as u32;
            }
        }
        (u > 0).then(|| i as f64 / u as f64)
    }

    #[test]
    fn identical_masks_score_one() {
        let m = LabelMask::from_rows(&[[1u8, 2, 2], [3, 3, VOID]]).unwrap();
        let s = seg_iou(&m, &m, &IgnoreMask::none(3, 2)).unwrap();
        assert!(s.per_class_iou.values().all(|v| *v == Some(1.0)));
        assert_eq!(s.mean_iou, Some(1.0));
        assert_eq!(s.mean_precision, Some(1.0));
        assert!(!s.per_class_iou.contains_key(&VOID));
    }

    #[test]
    fn disjoint_class_scores_zero() {
        let p = LabelMask::from_rows(&[[1u8, 2]]).unwrap();
        let g = LabelMask::from_rows(&[[2u8, 1]]).unwrap();
        let s = seg_iou(&p, &g, &IgnoreMask::none(2, 1)).unwrap();
        assert_eq!(s.per_class_iou[&1], Some(0.0));
        assert_eq!(s.per_class_precision[&1], Some(0.0));
    }

    #[test]
    fn fully_ignored_class_is_undefined() {
        let p = LabelMask::from_rows(&[[1u8, 2]]).unwrap();
        let ig = IgnoreMask::from_data(2, 1, vec![false, true]);
        let s = seg_iou(&p, &p, &ig).unwrap();
        assert_eq!(s.per_class_iou[&2], None);
        assert_eq!(s.mean_iou, Some(1.0));
    }

    #[test]
    fn dimension_mismatch() {
        let a = LabelMask::filled(2, 2, 1);
        let b = LabelMask::filled(3, 2, 1);
        assert!(matches!(
            seg_iou(&a, &b, &IgnoreMask::none(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn spurious_patch_is_excluded() {
        // 8x8 pair: gt is half class 1 / half class 2; pred adds a 3x3 blob of
        // class 3 inside the class-1 half.
        let mut gt = LabelMask::filled(8, 8, 1);
        for y in 0..8 {
            for x in 4..8 {
                gt.set(x, y, 2);
            }
        }
        let mut pred = gt.clone();
        for y in 1..4 {
            for x in 0..3 {
                pred.set(x, y, 3);
            }
        }
        // Both gt halves are 4x8, inside 12x12, so with L = 12 they would be
        // ignored too; use L = 3 to isolate the blob.
        let filtered = patch_filtered_seg_iou(&pred, &gt, PatchFilterConfig::new(3)).unwrap();
        let deleted = seg_iou(&gt, &gt, &IgnoreMask::none(8, 8)).unwrap();
        // Brute force with the blob pixels removed from both masks.
        let mut ig = vec![false; 64];
        for y in 1..4 {
            for x in 0..3 {
                ig[y * 8 + x] = true;
            }
        }
        let ig = IgnoreMask::from_data(8, 8, ig);
        assert_eq!(filtered.per_class_iou[&1], brute_iou(&pred, &gt, &ig, 1));
        assert_eq!(filtered.per_class_iou[&1], deleted.per_class_iou[&1]);
        assert_eq!(filtered.per_class_iou[&2], Some(1.0));
        assert_eq!(filtered.per_class_iou[&3], None);

        // With L = 12 everything in an 8x8 image is a small patch.
        let all = patch_filtered_seg_iou(&pred, &gt, PatchFilterConfig::new(12)).unwrap();
        assert_eq!(all.mean_iou, None);
    }

    #[test]
    fn accumulation_equals_concatenation() {
        let a = LabelMask::from_rows(&[[1u8, 2], [2, 2]]).unwrap();
        let b = LabelMask::from_rows(&[[1u8, 1], [2, 1]]).unwrap();
        let mut acc = SegCounts::new();
        acc.add(&a, &b, &IgnoreMask::none(2, 2)).unwrap();
        acc.add(&b, &a, &IgnoreMask::none(2, 2)).unwrap();
        let stacked_a = LabelMask::from_rows(&[[1u8, 2], [2, 2], [1, 1], [2, 1]]).unwrap();
        let stacked_b = LabelMask::from_rows(&[[1u8, 1], [2, 1], [1, 2], [2, 2]]).unwrap();
        let direct = seg_iou(&stacked_a, &stacked_b, &IgnoreMask::none(2, 4)).unwrap();
        assert_eq!(acc.score(), direct);
    }

    #[test]
    fn json_uses_fixed_decimals() {
        let p = LabelMask::from_rows(&[[1u8, 2, 2]]).unwrap();
        let g = LabelMask::from_rows(&[[1u8, 1, 2]]).unwrap();
        let s = seg_iou(&p, &g, &IgnoreMask::none(3, 1)).unwrap();
        let j = s.to_json(None);
        assert!(j.contains("\"iou\": 0.500000"), "{j}");
        assert!(j.contains("\"mean_iou\": 0.500000"), "{j}");
    }

    fn mask_pair() -> impl Strategy<Value = (LabelMask, LabelMask, Vec<bool>)> {
        let cells = proptest::collection::vec(prop_oneof![0u8..4, Just(VOID)], 256);
        let ign = proptest::collection::vec(proptest::bool::weighted(0.2), 256);
        (cells.clone(), cells, ign).prop_map(|(a, b, i)| {
            (
                LabelMask::new(16, 16, a).unwrap(),
                LabelMask::new(16, 16, b).unwrap(),
                i,
            )
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force_and_is_symmetric((p, g, ig) in mask_pair()) {
            let ig = IgnoreMask::from_data(16, 16, ig);
            let s = seg_iou(&p, &g, &ig).unwrap();
            let t = seg_iou(&g, &p, &ig).unwrap();
            prop_assert_eq!(&s.per_class_iou, &t.per_class_iou);
            for (&c, &v) in &s.per_class_iou {
                prop_assert_eq!(v, brute_iou(&p, &g, &ig, c));
            }
        }
    }
}
