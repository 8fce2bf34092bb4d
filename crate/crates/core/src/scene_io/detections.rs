use std::path::Path;

use serde::{Deserialize, Serialize};

use super::class_table::{ClassTable, HazardClass};
use crate::error::{Error, Result};

/// Axis-aligned box, top-left origin, in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw <= 0.0 || ih <= 0.0 {
            return 0.0;
        }
        let inter = iw * ih;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Clips the box to `[0, width] x [0, height]`; the flag reports whether
    /// anything changed.
    pub fn clamped(&self, width: usize, height: usize) -> (BBox, bool) {
        let (w, h) = (width as f64, height as f64);
        let x0 = self.x.clamp(0.0, w);
        let y0 = self.y.clamp(0.0, h);
        let x1 = self.right().clamp(0.0, w);
        let y1 = self.bottom().clamp(0.0, h);
        let out = BBox::new(x0, y0, x1 - x0, y1 - y0);
        (out, out != *self)
    }

    /// Mirror image about the vertical axis of an image `width` pixels wide,
    /// with pixel index `x` mapping to `width - 1 - x`.
    pub fn mirrored(&self, width: usize) -> BBox {
        BBox::new(width as f64 - 1.0 - self.right(), self.y, self.w, self.h)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub class_name: String,
    pub bbox: BBox,
    pub score: f64,
    /// Image key for multi-image detection files.
    pub image_id: Option<String>,
    /// Set when the box was clipped to the image on load.
    pub clamped: bool,
    /// Set when the class is neither movable nor stationary in the class table.
    pub unclassified: bool,
}

impl Detection {
    pub fn new(class_name: impl Into<String>, bbox: BBox, score: f64) -> Self {
        Self {
            class_name: class_name.into(),
            bbox,
            score,
            image_id: None,
            clamped: false,
            unclassified: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionSet {
    pub detections: Vec<Detection>,
    pub image_width: usize,
    pub image_height: usize,
}

impl DetectionSet {
    /// Clamps every box to the image and flags classes unknown to `table`.
    pub fn new(
        detections: Vec<Detection>,
        image_size: (usize, usize),
        table: &ClassTable,
    ) -> Self {
        let (image_width, image_height) = image_size;
        let detections = detections
            .into_iter()
            .map(|mut d| {
                let (b, changed) = d.bbox.clamped(image_width, image_height);
                d.bbox = b;
                d.clamped |= changed;
                d.unclassified = table.hazard_class(&d.class_name) == HazardClass::Unclassified;
                d
            })
            .collect();
        Self {
            detections,
            image_width,
            image_height,
        }
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ImageKey {
    Text(String),
    Number(serde_json::Number),
}

#[derive(Deserialize)]
struct Record {
    class: String,
    bbox: [f64; 4],
    #[serde(default = "default_score")]
    score: f64,
    #[serde(default)]
    image: Option<ImageKey>,
}

fn default_score() -> f64 {
    1.0
}

/// Parses JSON-lines detection records without clamping. Blank lines are
/// skipped; a missing `score` reads as 1.0 (ground-truth files).
pub fn parse_detection_records(text: &str) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::DetectionLine { line: line_no, msg };
        let rec: Record = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let [x, y, w, h] = rec.bbox;
        if rec.bbox.iter().any(|v| !v.is_finite()) {
            return Err(err("bbox values must be finite".into()));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(err(format!("bbox width and height must be positive, got {w}x{h}")));
        }
        if !(0.0..=1.0).contains(&rec.score) {
            return Err(err(format!("score {} outside [0, 1]", rec.score)));
        }
        out.push(Detection {
            class_name: rec.class,
            bbox: BBox::new(x, y, w, h),
            score: rec.score,
            image_id: rec.image.map(|k| match k {
                ImageKey::Text(s) => s,
                ImageKey::Number(n) => n.to_string(),
            }),
            clamped: false,
            unclassified: false,
        });
    }
    Ok(out)
}

pub fn load_detection_records(path: impl AsRef<Path>) -> Result<Vec<Detection>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detection_records(&text)
}

pub fn load_detections(
    path: impl AsRef<Path>,
    table: &ClassTable,
    image_size: (usize, usize),
) -> Result<DetectionSet> {
    let records = load_detection_records(path)?;
    Ok(DetectionSet::new(records, image_size, table))
}

/// One JSON-lines record, the inverse of [`parse_detection_records`].
pub(crate) fn detection_line(d: &Detection) -> String {
    let mut v = serde_json::json!({
        "class": d.class_name,
        "bbox": [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h],
        "score": d.score,
    });
    if let Some(id) = &d.image_id {
        v["image"] = serde_json::Value::String(id.clone());
    }
    v.to_string()
}
