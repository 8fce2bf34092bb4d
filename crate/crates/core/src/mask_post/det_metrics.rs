use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::json::{fixed, Fixed6};
use crate::scene_io::{Detection, DetectionSet};

/// Box IoU a prediction needs to count as a true positive.
pub const AP_IOU_THRESHOLD: f64 = 0.5;

const RECALL_POINTS: usize = 101;

/// Detection scores per ground-truth class. Classes with predictions but no
/// ground truth are not scored.
#[derive(Clone, Debug, PartialEq)]
pub struct DetScore {
    pub per_class_ap50: BTreeMap<String, f64>,
    /// Mean IoU of matched pairs; 0 for a class with no matches.
    pub per_class_mean_iou: BTreeMap<String, f64>,
    pub mean_ap50: Option<f64>,
    pub mean_iou: Option<f64>,
}

#[derive(Serialize)]
struct ClassReport {
    ap50: Fixed6,
    iou: Fixed6,
}

#[derive(Serialize)]
struct DetReport {
    per_class: BTreeMap<String, ClassReport>,
    map50: Option<Fixed6>,
    mean_iou: Option<Fixed6>,
}

impl DetScore {
    pub fn to_json(&self) -> String {
        let per_class = self
            .per_class_ap50
            .iter()
            .map(|(c, &ap)| {
                (
                    c.clone(),
                    ClassReport {
                        ap50: Fixed6(ap),
                        iou: Fixed6(self.per_class_mean_iou[c]),
                    },
                )
            })
            .collect();
        serde_json::to_string_pretty(&DetReport {
            per_class,
            map50: fixed(self.mean_ap50),
            mean_iou: fixed(self.mean_iou),
        })
        .expect("report serializes")
    }
}

/// Single-image mAP at IoU 0.5.
pub fn det_map50(pred: &DetectionSet, gt: &DetectionSet) -> DetScore {
    evaluate(
        pred.detections.iter().map(|d| (0usize, d)),
        gt.detections.iter().map(|d| (0usize, d)),
    )
}

/// Multi-image mAP at IoU 0.5; predictions only match ground truth carrying
/// the same `image_id`.
pub fn det_map50_images(pred: &[Detection], gt: &[Detection]) -> DetScore {
    let keys: BTreeSet<Option<&str>> = pred
        .iter()
        .chain(gt)
        .map(|d| d.image_id.as_deref())
        .collect();
    let index: BTreeMap<Option<&str>, usize> =
        keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
    evaluate(
        pred.iter().map(|d| (index[&d.image_id.as_deref()], d)),
        gt.iter().map(|d| (index[&d.image_id.as_deref()], d)),
    )
}

fn evaluate<'a>(
    pred: impl Iterator<Item = (usize, &'a Detection)>,
    gt: impl Iterator<Item = (usize, &'a Detection)>,
) -> DetScore {
    let mut gt_by_class: BTreeMap<&str, Vec<(usize, &Detection)>> = BTreeMap::new();
    for (img, d) in gt {
        gt_by_class.entry(&d.class_name).or_default().push((img, d));
    }
    let mut pred_by_class: BTreeMap<&str, Vec<(usize, &Detection)>> = BTreeMap::new();
    for (img, d) in pred {
        pred_by_class.entry(&d.class_name).or_default().push((img, d));
    }

    let mut per_class_ap50 = BTreeMap::new();
    let mut per_class_mean_iou = BTreeMap::new();
    for (class, gts) in &gt_by_class {
        let mut preds = pred_by_class.remove(class).unwrap_or_default();
        // Stable: equal scores keep input order.
        preds.sort_by(|a, b| b.1.score.total_cmp(&a.1.score));
        let (ap, miou) = class_ap(&preds, gts);
        per_class_ap50.insert(class.to_string(), ap);
        per_class_mean_iou.insert(class.to_string(), miou);
    }
    let mean = |m: &BTreeMap<String, f64>| {
        (!m.is_empty()).then(|| m.values().sum::<f64>() / m.len() as f64)
    };
    DetScore {
        mean_ap50: mean(&per_class_ap50),
        mean_iou: mean(&per_class_mean_iou),
        per_class_ap50,
        per_class_mean_iou,
    }
}

/// Greedy matching of score-sorted predictions, then 101-point interpolated AP.
fn class_ap(preds: &[(usize, &Detection)], gts: &[(usize, &Detection)]) -> (f64, f64) {
    let n_gt = gts.len();
    let mut matched = vec![false; n_gt];
    let mut tp_cum = Vec::with_capacity(preds.len());
    let mut ious = Vec::new();
    let mut tp = 0usize;
    for (img, p) in preds {
        let mut best: Option<(usize, f64)> = None;
        for (j, (gimg, g)) in gts.iter().enumerate() {
            if matched[j] || gimg != img {
                continue;
            }
            let iou = p.bbox.iou(&g.bbox);
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((j, iou));
            }
        }
        if let Some((j, iou)) = best.filter(|&(_, iou)| iou >= AP_IOU_THRESHOLD) {
            matched[j] = true;
            ious.push(iou);
            tp += 1;
        }
        tp_cum.push(tp);
    }

    let mut ap = 0.0;
    for level in 0..RECALL_POINTS {
        // recall >= level / 100, compared exactly in integers
        let best = tp_cum
            .iter()
            .enumerate()
            .filter(|&(_, &t)| t * (RECALL_POINTS - 1) >= level * n_gt)
            .map(|(k, &t)| t as f64 / (k + 1) as f64)
            .fold(0.0, f64::max);
        ap += best;
    }
    ap /= RECALL_POINTS as f64;
    let miou = if ious.is_empty() {
        0.0
    } else {
        ious.iter().sum::<f64>() / ious.len() as f64
    };
    (ap, miou)
}
