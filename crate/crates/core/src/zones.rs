//! Critical zones: bands at fixed metric distances either side of each track,
//! converted to pixels row by row through the gauge profile.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rail_gauge::{extract_track_runs, GaugeProfile};
use crate::scene_io::{ClassTable, LabelMask};

/// Ordered `None < Yellow < Orange < Red`.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    #[default]
    None = 0,
    Yellow = 1,
    Orange = 2,
    Red = 3,
}

impl Zone {
    pub const LEVELS: [Zone; 3] = [Zone::Red, Zone::Orange, Zone::Yellow];

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Zone> {
        match v {
            0 => Some(Zone::None),
            1 => Some(Zone::Yellow),
            2 => Some(Zone::Orange),
            3 => Some(Zone::Red),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Zone::None => "none",
            Zone::Yellow => "yellow",
            Zone::Orange => "orange",
            Zone::Red => "red",
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Zone distances from the track edge, red (innermost) to yellow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZoneSpec {
    distances_mm: [f64; 3],
    pub include_track_in_red: bool,
}

impl ZoneSpec {
    pub const DEFAULT_DISTANCES_MM: [f64; 3] = [600.0, 1000.0, 2000.0];

    pub fn new(distances_mm: [f64; 3], include_track_in_red: bool) -> Result<Self> {
        let [r, o, y] = distances_mm;
        if !(r.is_finite() && y.is_finite() && r > 0.0 && r < o && o < y) {
            return Err(Error::InvalidParameter(format!(
                "zone distances must be positive and strictly increasing, got {distances_mm:?}"
            )));
        }
        Ok(Self {
            distances_mm,
            include_track_in_red,
        })
    }

    pub fn distances_mm(&self) -> [f64; 3] {
        self.distances_mm
    }

    pub fn distance_mm(&self, level: Zone) -> Option<f64> {
        match level {
            Zone::Red => Some(self.distances_mm[0]),
            Zone::Orange => Some(self.distances_mm[1]),
            Zone::Yellow => Some(self.distances_mm[2]),
            Zone::None => None,
        }
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.distances_mm.map(|d| d * k), self.include_track_in_red)
    }
}

impl Default for ZoneSpec {
    fn default() -> Self {
        Self {
            distances_mm: Self::DEFAULT_DISTANCES_MM,
            include_track_in_red: true,
        }
    }
}

/// One row of a zone boundary. `left..=right` is inside the zone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZoneRow {
    pub row: usize,
    pub left: usize,
    pub right: usize,
    /// Metric distance converted to pixels at this row, before rounding and
    /// clamping.
    pub offset_px: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZoneBoundary {
    pub track_id: u32,
    pub level: Zone,
    /// Strictly increasing rows.
    pub rows: Vec<ZoneRow>,
}

/// Per-pixel zone levels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZoneRaster {
    width: usize,
    height: usize,
    data: Vec<Zone>,
}

impl ZoneRaster {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![Zone::None; width * height],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<Zone>) -> Self {
        assert_eq!(data.len(), width * height, "zone raster size");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[Zone] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Zone {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn raise(&mut self, x: usize, y: usize, z: Zone) {
        let c = &mut self.data[y * self.width + x];
        if z > *c {
            *c = z;
        }
    }

    pub fn row(&self, y: usize) -> &[Zone] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Leftmost and rightmost columns in `row` with level at least `level`.
    pub fn extent(&self, row: usize, level: Zone) -> Option<(usize, usize)> {
        let r = self.row(row);
        let first = r.iter().position(|&z| z >= level)?;
        let last = r.iter().rposition(|&z| z >= level)?;
        Some((first, last))
    }

    pub fn mirrored(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            data.extend(self.row(y).iter().rev());
        }
        Self { data, ..*self }
    }

    /// 0 none, 1 yellow, 2 orange, 3 red.
    pub fn to_gray(&self) -> Vec<u8> {
        self.data.iter().map(|z| z.as_u8()).collect()
    }

    pub fn from_gray(width: usize, height: usize, gray: &[u8]) -> Result<Self> {
        let data = gray
            .iter()
            .map(|&v| {
                Zone::from_u8(v)
                    .ok_or_else(|| Error::InvalidParameter(format!("zone value {v} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                found: (data.len(), 1),
            });
        }
        Ok(Self::from_data(width, height, data))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalZoneMap {
    pub boundaries: Vec<ZoneBoundary>,
    pub raster: ZoneRaster,
}

#[derive(Serialize)]
struct BoundaryJson {
    track: u32,
    level: Zone,
    left: Vec<[usize; 2]>,
    right: Vec<[usize; 2]>,
}

impl CriticalZoneMap {
    /// Boundaries as polylines of `[row, column]` points.
    pub fn boundaries_json(&self) -> String {
        serde_json::to_string_pretty(&self.boundaries_view()).expect("boundaries serialize")
    }

    pub(crate) fn boundaries_view(&self) -> impl Serialize + '_ {
        self
            .boundaries
            .iter()
            .map(|b| BoundaryJson {
                track: b.track_id,
                level: b.level,
                left: b.rows.iter().map(|r| [r.row, r.left]).collect(),
                right: b.rows.iter().map(|r| [r.row, r.right]).collect(),
            })
            .collect::<Vec<BoundaryJson>>()
    }
}

/// Slack for pixel offsets that land on an exact half-pixel in real
/// arithmetic but a hair below it in floating point.
const OFFSET_EPS: f64 = 1e-9;

/// Whole-pixel offset for a boundary `offset_px` beyond the outer edge of a
/// run pixel. The run's edge pixel spans half a pixel past its centre, so the
/// farthest included column is the one whose centre is within
/// `offset_px + 0.5` of the edge pixel's centre.
fn whole_pixel_offset(offset_px: f64) -> usize {
    (offset_px + 0.5 + OFFSET_EPS).floor().max(0.0) as usize
}

/// Places every zone boundary at `x_left - D` and `x_right + D` on each row a
/// track crosses, where `D` is the zone distance converted with the row's
/// `p_d`, clamps to the image, and rasterizes the bands (higher levels win).
/// Track components without any gauge sample get no zones of their own.
pub fn estimate_zones(
    mask: &LabelMask,
    table: &ClassTable,
    profile: &GaugeProfile,
    spec: &ZoneSpec,
) -> Result<CriticalZoneMap> {
    if profile.is_empty() {
        return Err(Error::NoGaugeReference);
    }
    let (w, h) = mask.dims();
    let runs = extract_track_runs(mask, table);
    let mut raster = ZoneRaster::new(w, h);
    let mut boundaries = Vec::new();

    for track_runs in runs.runs.chunk_by(|a, b| a.track_id == b.track_id) {
        let track_id = track_runs[0].track_id;
        if !profile.has_track(track_id) {
            continue;
        }
        for level in [Zone::Yellow, Zone::Orange, Zone::Red] {
            let d = spec.distance_mm(level).expect("zone level has a distance");
            let mut rows = Vec::with_capacity(track_runs.len());
            for run in track_runs {
                let offset_px = profile.metric_to_pixels(run.row, track_id, d)?;
                let k = whole_pixel_offset(offset_px);
                let left = run.x_left.saturating_sub(k);
                let right = (run.x_right + k).min(w - 1);
                for x in left..=right {
                    raster.raise(x, run.row, level);
                }
                rows.push(ZoneRow {
                    row: run.row,
                    left,
                    right,
                    offset_px,
                });
            }
            boundaries.push(ZoneBoundary {
                track_id,
                level,
                rows,
            });
        }
    }

    if spec.include_track_in_red {
        for (i, &c) in mask.data().iter().enumerate() {
            if table.is_track(c) {
                raster.raise(i % w, i / w, Zone::Red);
            }
        }
    }
    Ok(CriticalZoneMap { boundaries, raster })
}

pub fn zone_at(zmap: &CriticalZoneMap, x: i64, y: i64) -> Result<Zone> {
    let (w, h) = zmap.raster.dims();
    if x < 0 || y < 0 || x as usize >= w || y as usize >= h {
        return Err(Error::OutOfBounds {
            x,
            y,
            width: w,
            height: h,
        });
    }
    Ok(zmap.raster.get(x as usize, y as usize))
}
