//! Intrusion classification: each bounding box is sampled at 12 perimeter
//! points (4 corners, 2 interior points per side at the thirds) and takes the
//! most critical zone any of them falls in.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scene_io::{ClassTable, Detection, DetectionSet, HazardClass};
use crate::zones::{CriticalZoneMap, Zone};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointTag {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
    TopThird,
    TopTwoThirds,
    BottomThird,
    BottomTwoThirds,
    LeftThird,
    LeftTwoThirds,
    RightThird,
    RightTwoThirds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SamplePoint {
    pub x: i64,
    pub y: i64,
    pub tag: PointTag,
}

/// The 12 perimeter points of a box, rounded to the nearest pixel.
pub fn sample_points(det: &Detection) -> [SamplePoint; 12] {
    let b = &det.bbox;
    let (x0, y0, x1, y1) = (b.x, b.y, b.right(), b.bottom());
    let xt = |k: f64| b.x + b.w * k / 3.0;
    let yt = |k: f64| b.y + b.h * k / 3.0;
    let p = |x: f64, y: f64, tag| SamplePoint {
        x: x.round() as i64,
        y: y.round() as i64,
        tag,
    };
    use PointTag::*;
    [
        p(x0, y0, TopLeft),
        p(x1, y0, TopRight),
        p(x0, y1, BottomLeft),
        p(x1, y1, BottomRight),
        p(xt(1.0), y0, TopThird),
        p(xt(2.0), y0, TopTwoThirds),
        p(xt(1.0), y1, BottomThird),
        p(xt(2.0), y1, BottomTwoThirds),
        p(x0, yt(1.0), LeftThird),
        p(x0, yt(2.0), LeftTwoThirds),
        p(x1, yt(1.0), RightThird),
        p(x1, yt(2.0), RightTwoThirds),
    ]
}

/// Display colour of a verdict, from no risk to highest.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    #[default]
    Green = 0,
    Yellow = 1,
    Orange = 2,
    Red = 3,
}

impl Criticality {
    pub const ALL: [Criticality; 4] = [
        Criticality::Green,
        Criticality::Yellow,
        Criticality::Orange,
        Criticality::Red,
    ];

    pub fn from_zone(z: Zone) -> Self {
        match z {
            Zone::None => Criticality::Green,
            Zone::Yellow => Criticality::Yellow,
            Zone::Orange => Criticality::Orange,
            Zone::Red => Criticality::Red,
        }
    }

    /// Lowered by `levels`, saturating at green.
    pub fn demoted(self, levels: u8) -> Self {
        Self::ALL[(self as usize).saturating_sub(levels as usize)]
    }

    pub fn name(self) -> &'static str {
        match self {
            Criticality::Green => "green",
            Criticality::Yellow => "yellow",
            Criticality::Orange => "orange",
            Criticality::Red => "red",
        }
    }

    pub fn rgb(self) -> [u8; 3] {
        match self {
            Criticality::Green => [0, 200, 0],
            Criticality::Yellow => [255, 230, 0],
            Criticality::Orange => [255, 140, 0],
            Criticality::Red => [230, 0, 0],
        }
    }
}

impl fmt::Display for Criticality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Stationary and unclassified objects are demoted by this many levels;
/// movable objects map 1:1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ViolationPolicy {
    pub stationary_demotion: u8,
}

impl Default for ViolationPolicy {
    fn default() -> Self {
        Self {
            stationary_demotion: 1,
        }
    }
}

impl ViolationPolicy {
    pub fn criticality(&self, hazard: HazardClass, raw: Zone) -> Criticality {
        let c = Criticality::from_zone(raw);
        match hazard {
            HazardClass::Movable => c,
            HazardClass::Stationary | HazardClass::Unclassified => {
                c.demoted(self.stationary_demotion)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub detection_index: usize,
    pub class_name: String,
    pub hazard_class: HazardClass,
    pub raw_zone: Zone,
    pub criticality: Criticality,
    /// Points inside some zone, with that zone, in sampling order.
    pub violating_points: Vec<(SamplePoint, Zone)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViolationReport {
    pub verdicts: Vec<Verdict>,
    pub max_criticality: Criticality,
    /// Indexed by `Criticality as usize`.
    pub counts: [usize; 4],
}

struct PointJson<'a>(&'a (SamplePoint, Zone));

impl Serialize for PointJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (p, z) = self.0;
        (p.x, p.y, z).serialize(s)
    }
}

#[derive(Serialize)]
struct VerdictJson<'a> {
    index: usize,
    class: &'a str,
    hazard: HazardClass,
    raw_zone: Zone,
    criticality: Criticality,
    points: Vec<PointJson<'a>>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    verdicts: Vec<VerdictJson<'a>>,
    max: Criticality,
    counts: std::collections::BTreeMap<&'static str, usize>,
}

impl ViolationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.view()).expect("report serializes")
    }

    pub(crate) fn view(&self) -> impl Serialize + '_ {
        ReportJson {
            verdicts: self
                .verdicts
                .iter()
                .map(|v| VerdictJson {
                    index: v.detection_index,
                    class: &v.class_name,
                    hazard: v.hazard_class,
                    raw_zone: v.raw_zone,
                    criticality: v.criticality,
                    points: v.violating_points.iter().map(PointJson).collect(),
                })
                .collect(),
            max: self.max_criticality,
            counts: Criticality::ALL
                .iter()
                .map(|c| (c.name(), self.counts[*c as usize]))
                .collect(),
        }
    }
}

/// One verdict per detection, in detection order. Sample points beyond the
/// raster (a box edge on the image border) are looked up at the nearest
/// in-image pixel.
pub fn classify(
    det_set: &DetectionSet,
    zmap: &CriticalZoneMap,
    table: &ClassTable,
    policy: &ViolationPolicy,
) -> Result<ViolationReport> {
    let (w, h) = zmap.raster.dims();
    if (det_set.image_width, det_set.image_height) != (w, h) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            found: (det_set.image_width, det_set.image_height),
        });
    }
    let mut verdicts = Vec::with_capacity(det_set.len());
    let mut counts = [0usize; 4];
    for (i, det) in det_set.detections.iter().enumerate() {
        let mut raw_zone = Zone::None;
        let mut violating_points = Vec::new();
        for mut p in sample_points(det) {
            p.x = p.x.clamp(0, w as i64 - 1);
            p.y = p.y.clamp(0, h as i64 - 1);
            let z = zmap.raster.get(p.x as usize, p.y as usize);
            if z != Zone::None {
                violating_points.push((p, z));
            }
            raw_zone = raw_zone.max(z);
        }
        let hazard_class = table.hazard_class(&det.class_name);
        let criticality = policy.criticality(hazard_class, raw_zone);
        counts[criticality as usize] += 1;
        verdicts.push(Verdict {
            detection_index: i,
            class_name: det.class_name.clone(),
            hazard_class,
            raw_zone,
            criticality,
            violating_points,
        });
    }
    let max_criticality = verdicts
        .iter()
        .map(|v| v.criticality)
        .max()
        .unwrap_or_default();
    Ok(ViolationReport {
        verdicts,
        max_criticality,
        counts,
    })
}
