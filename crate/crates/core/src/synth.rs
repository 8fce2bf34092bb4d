//! Synthetic flat-ground rail scenes with analytic ground truth.
//!
//! Ground coordinates are millimetres: `X` lateral (right positive), `Z`
//! forward from the point below the camera. The camera sits `height_mm` above
//! the ground, pitched down by `pitch_rad`, with no roll and the principal
//! point at the image centre. Pixel `(u, v)` denotes the pixel centre.
//!
//! Everything here is computed in ground coordinates and then projected (or
//! sampled per pixel centre by inverse projection); none of it goes through
//! the gauge or zone estimators.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::Fixed6;
use crate::rail_gauge::STANDARD_GAUGE_MM;
use crate::scene_io::{BBox, ClassId, ClassTable, Detection, LabelMask, VOID};
use crate::zones::{Zone, ZoneRaster, ZoneSpec};

fn spec_err(path: &str, msg: impl Into<String>) -> Error {
    Error::Spec {
        path: path.into(),
        msg: msg.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub focal_px: f64,
    pub height_mm: f64,
    /// Downward tilt of the optical axis.
    pub pitch_rad: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.focal_px.is_finite() && self.focal_px > 0.0) {
            return Err(spec_err("camera.focal_px", "must be positive"));
        }
        if !(self.height_mm.is_finite() && self.height_mm > 0.0) {
            return Err(spec_err("camera.height_mm", "must be positive"));
        }
        if !(self.pitch_rad.is_finite()
            && self.pitch_rad >= 0.0
            && self.pitch_rad < std::f64::consts::FRAC_PI_2)
        {
            return Err(spec_err("camera.pitch_rad", "must be in [0, pi/2)"));
        }
        if self.width == 0 {
            return Err(spec_err("camera.width", "must be positive"));
        }
        if self.height == 0 {
            return Err(spec_err("camera.height", "must be positive"));
        }
        if self.horizon_row() >= (self.height - 1) as f64 {
            return Err(spec_err("camera.pitch_rad", "horizon is below the image"));
        }
        Ok(())
    }

    pub fn cx(&self) -> f64 {
        (self.width as f64 - 1.0) / 2.0
    }

    pub fn cy(&self) -> f64 {
        (self.height as f64 - 1.0) / 2.0
    }

    /// Image row of the horizon (may be negative, i.e. above the image).
    pub fn horizon_row(&self) -> f64 {
        self.cy() - self.focal_px * self.pitch_rad.tan()
    }

    /// Depth along the optical axis of a ground point.
    pub fn depth(&self, z_mm: f64) -> f64 {
        let (s, c) = self.pitch_rad.sin_cos();
        self.height_mm * s + z_mm * c
    }

    /// Image position of a ground point, `None` behind the camera.
    pub fn project(&self, x_mm: f64, z_mm: f64) -> Option<(f64, f64)> {
        let (s, c) = self.pitch_rad.sin_cos();
        let zc = self.height_mm * s + z_mm * c;
        if zc <= 0.0 {
            return None;
        }
        let yc = self.height_mm * c - z_mm * s;
        Some((
            self.cx() + self.focal_px * x_mm / zc,
            self.cy() + self.focal_px * yc / zc,
        ))
    }

    /// Forward distance `Z` and optical depth seen by image row `v`, `None`
    /// at or above the horizon.
    pub fn row_ground(&self, v: f64) -> Option<(f64, f64)> {
        let (s, c) = self.pitch_rad.sin_cos();
        let b = (v - self.cy()) / self.focal_px;
        let denom = b * c + s;
        if denom <= 0.0 {
            return None;
        }
        let t = self.height_mm / denom;
        Some((t * (c - b * s), t))
    }

    /// Ground point seen by pixel `(u, v)`.
    pub fn unproject(&self, u: f64, v: f64) -> Option<(f64, f64)> {
        let (z, t) = self.row_ground(v)?;
        Some(((u - self.cx()) / self.focal_px * t, z))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Centerline {
    /// `X = offset + Z tan(heading)`.
    Straight { offset_mm: f64, heading_rad: f64 },
    /// Circle through `(offset, 0)` tangent to the forward axis; positive
    /// radius curves right. Only the branch nearest the camera is used.
    Arc { offset_mm: f64, radius_mm: f64 },
}

fn default_gauge() -> f64 {
    STANDARD_GAUGE_MM
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    #[serde(default = "default_gauge")]
    pub gauge_mm: f64,
    pub centerline: Centerline,
    /// Forward range `[z_min, z_max]` of rendered track.
    pub extent_mm: [f64; 2],
}

impl TrackSpec {
    pub fn straight(offset_mm: f64, heading_rad: f64, extent_mm: [f64; 2]) -> Self {
        Self {
            gauge_mm: STANDARD_GAUGE_MM,
            centerline: Centerline::Straight {
                offset_mm,
                heading_rad,
            },
            extent_mm,
        }
    }

    pub fn arc(offset_mm: f64, radius_mm: f64, extent_mm: [f64; 2]) -> Self {
        Self {
            gauge_mm: STANDARD_GAUGE_MM,
            centerline: Centerline::Arc {
                offset_mm,
                radius_mm,
            },
            extent_mm,
        }
    }

    /// `max_zone_mm` is the widest zone distance that must stay on the near
    /// branch of an arc.
    pub fn validate(&self, max_zone_mm: f64) -> Result<()> {
        let g = self.gauge_mm;
        if !(g.is_finite() && g > 0.0) {
            return Err(spec_err("track.gauge_mm", "must be positive"));
        }
        let [z0, z1] = self.extent_mm;
        if !(z0.is_finite() && z1.is_finite() && z0 < z1) {
            return Err(spec_err("track.extent_mm", "must be an increasing pair"));
        }
        match self.centerline {
            Centerline::Straight {
                offset_mm,
                heading_rad,
            } => {
                if !offset_mm.is_finite() {
                    return Err(spec_err("track.centerline.offset_mm", "must be finite"));
                }
                if !(heading_rad.is_finite() && heading_rad.abs() < std::f64::consts::FRAC_PI_2) {
                    return Err(spec_err(
                        "track.centerline.heading_rad",
                        "must be in (-pi/2, pi/2)",
                    ));
                }
            }
            Centerline::Arc {
                offset_mm,
                radius_mm,
            } => {
                if !offset_mm.is_finite() {
                    return Err(spec_err("track.centerline.offset_mm", "must be finite"));
                }
                if !(radius_mm.is_finite() && radius_mm.abs() > g) {
                    return Err(spec_err(
                        "track.centerline.radius_mm",
                        "magnitude must exceed the gauge",
                    ));
                }
                let inner = radius_mm.abs() - g / 2.0 - max_zone_mm;
                if z1.abs() >= inner || z0.abs() >= inner {
                    return Err(spec_err(
                        "track.extent_mm",
                        format!("must stay within {inner} mm of the arc start"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn in_extent(&self, z: f64) -> bool {
        z >= self.extent_mm[0] && z <= self.extent_mm[1]
    }

    /// Perpendicular distance from ground point `(x, z)` to the nearest rail
    /// edge; negative between the rails. Ignores the forward extent.
    pub fn edge_distance(&self, x: f64, z: f64) -> f64 {
        let half = self.gauge_mm / 2.0;
        match self.centerline {
            Centerline::Straight {
                offset_mm,
                heading_rad,
            } => (x - offset_mm - z * heading_rad.tan()).abs() * heading_rad.cos() - half,
            Centerline::Arc {
                offset_mm,
                radius_mm,
            } => {
                let xc = offset_mm + radius_mm;
                if (x - xc) * radius_mm.signum() >= 0.0 {
                    return f64::INFINITY;
                }
                ((x - xc).hypot(z) - radius_mm.abs()).abs() - half
            }
        }
    }

    /// Lateral interval `[x_left, x_right]` between the rails at forward
    /// distance `z`.
    pub fn lateral_span(&self, z: f64) -> Option<(f64, f64)> {
        let half = self.gauge_mm / 2.0;
        match self.centerline {
            Centerline::Straight {
                offset_mm,
                heading_rad,
            } => {
                let c = offset_mm + z * heading_rad.tan();
                let hw = half / heading_rad.cos();
                Some((c - hw, c + hw))
            }
            Centerline::Arc {
                offset_mm,
                radius_mm,
            } => {
                let xc = offset_mm + radius_mm;
                let r = radius_mm.abs();
                let (r0, r1) = (r - half, r + half);
                if z.abs() >= r0 {
                    return None;
                }
                let sg = radius_mm.signum();
                let a = xc - sg * (r0 * r0 - z * z).sqrt();
                let b = xc - sg * (r1 * r1 - z * z).sqrt();
                Some((a.min(b), a.max(b)))
            }
        }
    }
}

/// Real-valued image columns `[u_left, u_right]` of the track region on
/// `row`, before rasterization.
pub fn track_span(cam: &CameraSpec, track: &TrackSpec, row: f64) -> Result<(f64, f64)> {
    let (z, t) = cam
        .row_ground(row)
        .ok_or(Error::AboveHorizon(row.floor() as i64))?;
    if !track.in_extent(z) {
        return Err(Error::RowOffTrack(row.floor() as i64));
    }
    let (x0, x1) = track
        .lateral_span(z)
        .ok_or(Error::RowOffTrack(row.floor() as i64))?;
    let k = cam.focal_px / t;
    Ok((cam.cx() + x0 * k, cam.cx() + x1 * k))
}

/// Exact horizontal width in pixels of the track region on `row`.
pub fn projected_gauge_width(cam: &CameraSpec, track: &TrackSpec, row: f64) -> Result<f64> {
    let (a, b) = track_span(cam, track, row)?;
    Ok(b - a)
}

/// True pixels-per-millimetre scale of horizontal ground distances on `row`.
pub fn true_scale(cam: &CameraSpec, row: f64) -> Result<f64> {
    let (_, t) = cam
        .row_ground(row)
        .ok_or(Error::AboveHorizon(row.floor() as i64))?;
    Ok(cam.focal_px / t)
}

fn default_height_ratio() -> f64 {
    2.0
}

fn default_score() -> f64 {
    1.0
}

/// A ground-plane rectangle centred at `(x_mm, z_mm)`. Its image box spans
/// the projected footprint horizontally, sits on the nearest footprint edge
/// and is `height_ratio` times as tall as it is wide.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub class: String,
    pub x_mm: f64,
    pub z_mm: f64,
    pub width_mm: f64,
    pub depth_mm: f64,
    #[serde(default = "default_height_ratio")]
    pub height_ratio: f64,
    #[serde(default = "default_score")]
    pub score: f64,
    /// Mask class painted under the footprint; none leaves the mask alone.
    #[serde(default)]
    pub mask_class: Option<String>,
}

fn default_background() -> String {
    "terrain".into()
}

fn default_sky() -> String {
    "sky".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub camera: CameraSpec,
    pub track: TrackSpec,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default = "default_distances")]
    pub zone_distances_mm: [f64; 3],
    #[serde(default = "default_background")]
    pub background_class: String,
    #[serde(default = "default_sky")]
    pub sky_class: String,
}

fn default_distances() -> [f64; 3] {
    ZoneSpec::DEFAULT_DISTANCES_MM
}

impl SceneSpec {
    pub fn new(camera: CameraSpec, track: TrackSpec) -> Self {
        Self {
            camera,
            track,
            objects: Vec::new(),
            zone_distances_mm: default_distances(),
            background_class: default_background(),
            sky_class: default_sky(),
        }
    }

    /// Parses a JSON scene spec; errors name the offending field path.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: SceneSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            spec_err(&path, e.into_inner().to_string())
        })?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene spec serializes")
    }

    pub fn validate(&self) -> Result<ZoneSpec> {
        self.camera.validate()?;
        let zones = ZoneSpec::new(self.zone_distances_mm, true)
            .map_err(|e| spec_err("zone_distances_mm", e.to_string()))?;
        self.track.validate(self.zone_distances_mm[2])?;
        for (i, o) in self.objects.iter().enumerate() {
            let field = |f: &str| format!("objects[{i}].{f}");
            if !(o.x_mm.is_finite() && o.z_mm.is_finite()) {
                return Err(spec_err(&field("x_mm"), "position must be finite"));
            }
            if !(o.width_mm.is_finite() && o.width_mm > 0.0) {
                return Err(spec_err(&field("width_mm"), "must be positive"));
            }
            if !(o.depth_mm.is_finite() && o.depth_mm > 0.0) {
                return Err(spec_err(&field("depth_mm"), "must be positive"));
            }
            if !(o.height_ratio.is_finite() && o.height_ratio > 0.0) {
                return Err(spec_err(&field("height_ratio"), "must be positive"));
            }
            if !(0.0..=1.0).contains(&o.score) {
                return Err(spec_err(&field("score"), "must be in [0, 1]"));
            }
            if self.camera.depth(o.z_mm - o.depth_mm / 2.0) <= 0.0 {
                return Err(spec_err(&field("z_mm"), "footprint reaches behind the camera"));
            }
        }
        Ok(zones)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectTruth {
    pub detection: Detection,
    /// Perpendicular distance from the footprint centre to the nearest rail
    /// edge; negative between the rails.
    pub edge_distance_mm: f64,
}

/// Per-row analytic quantities, `None` fields where the row does not cross
/// the track.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowTruth {
    pub row: usize,
    /// Track region columns before rasterization.
    pub span: Option<(f64, f64)>,
    /// Pixels per millimetre of horizontal ground distance.
    pub scale: Option<f64>,
}

impl RowTruth {
    pub fn gauge_px(&self) -> Option<f64> {
        self.span.map(|(a, b)| b - a)
    }

    /// Whether the whole track region lies inside an image `width` wide.
    pub fn fully_visible(&self, width: usize) -> bool {
        self.span
            .is_some_and(|(a, b)| a >= 0.0 && b <= width as f64 - 1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneTruth {
    pub mask: LabelMask,
    pub zone_truth: ZoneRaster,
    pub objects: Vec<ObjectTruth>,
    pub rows: Vec<RowTruth>,
}

fn class_id(table: &ClassTable, name: &str, field: &str) -> Result<ClassId> {
    table
        .id_of(name)
        .ok_or_else(|| spec_err(field, format!("unknown class {name:?}")))
}

fn object_detection(cam: &CameraSpec, o: &ObjectSpec) -> Detection {
    let (hw, hd) = (o.width_mm / 2.0, o.depth_mm / 2.0);
    let mut umin = f64::INFINITY;
    let mut umax = f64::NEG_INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for (dx, dz) in [(-hw, -hd), (hw, -hd), (-hw, hd), (hw, hd)] {
        let (u, v) = cam
            .project(o.x_mm + dx, o.z_mm + dz)
            .expect("validated footprint is in front of the camera");
        umin = umin.min(u);
        umax = umax.max(u);
        vmax = vmax.max(v);
    }
    let w = umax - umin;
    let h = w * o.height_ratio;
    Detection::new(o.class.clone(), BBox::new(umin, vmax - h, w, h), o.score)
}

/// Rasterizes a scene by sampling every pixel centre on the ground plane.
/// Rows above the horizon get the sky class; rows whose forward distance is
/// outside the track extent carry no track and no zones.
pub fn render_scene(spec: &SceneSpec, table: &ClassTable) -> Result<SceneTruth> {
    let zones = spec.validate()?;
    let cam = &spec.camera;
    let track = &spec.track;
    let track_id = table
        .entries()
        .iter()
        .find(|e| e.category == crate::scene_io::Category::RailTrack)
        .map(|e| e.id)
        .ok_or(Error::NoTrackClass)?;
    let background = class_id(table, &spec.background_class, "background_class")?;
    let sky = class_id(table, &spec.sky_class, "sky_class")?;
    let object_ids = spec
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| match &o.mask_class {
            Some(name) => class_id(table, name, &format!("objects[{i}].mask_class")).map(Some),
            None => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;

    let (w, h) = (cam.width, cam.height);
    let mut mask = vec![VOID; w * h];
    let mut zone_truth = ZoneRaster::new(w, h);
    let mut rows = Vec::with_capacity(h);
    let dist = zones.distances_mm();

    for v in 0..h {
        let row = &mut mask[v * w..(v + 1) * w];
        let Some((z, _)) = cam.row_ground(v as f64) else {
            row.fill(sky);
            rows.push(RowTruth {
                row: v,
                span: None,
                scale: None,
            });
            continue;
        };
        row.fill(background);
        let span = track_span(cam, track, v as f64).ok();
        rows.push(RowTruth {
            row: v,
            span,
            scale: true_scale(cam, v as f64).ok(),
        });
        for (u, px) in row.iter_mut().enumerate() {
            let (x, z) = cam.unproject(u as f64, v as f64).expect("row is below the horizon");
            for (o, id) in spec.objects.iter().zip(&object_ids) {
                if let Some(id) = id {
                    if (x - o.x_mm).abs() <= o.width_mm / 2.0 && (z - o.z_mm).abs() <= o.depth_mm / 2.0 {
                        *px = *id;
                    }
                }
            }
        }
        if span.is_none() {
            continue;
        }
        for u in 0..w {
            let (x, _) = cam.unproject(u as f64, v as f64).expect("row is below the horizon");
            let s = track.edge_distance(x, z);
            let level = if s <= 0.0 {
                if object_ids.iter().all(Option::is_none) || mask[v * w + u] == background {
                    mask[v * w + u] = track_id;
                }
                Zone::Red
            } else if s <= dist[0] {
                Zone::Red
            } else if s <= dist[1] {
                Zone::Orange
            } else if s <= dist[2] {
                Zone::Yellow
            } else {
                Zone::None
            };
            zone_truth.raise(u, v, level);
        }
    }

    let objects = spec
        .objects
        .iter()
        .map(|o| ObjectTruth {
            detection: object_detection(cam, o),
            edge_distance_mm: track.edge_distance(o.x_mm, o.z_mm),
        })
        .collect();
    Ok(SceneTruth {
        mask: LabelMask::new(w, h, mask)?,
        zone_truth,
        objects,
        rows,
    })
}

#[derive(Serialize)]
struct ManifestRow {
    row: usize,
    gauge_px: Fixed6,
    p_d: Fixed6,
}

#[derive(Serialize)]
struct ManifestObject<'a> {
    class: &'a str,
    bbox: [Fixed6; 4],
    edge_distance_mm: Fixed6,
}

#[derive(Serialize)]
struct Manifest<'a> {
    spec: &'a SceneSpec,
    horizon_row: Fixed6,
    radius_mm: Option<Fixed6>,
    rows: Vec<ManifestRow>,
    objects: Vec<ManifestObject<'a>>,
}

impl SceneTruth {
    /// Truth manifest: the spec, per-row gauge widths and object distances.
    pub fn manifest_json(&self, spec: &SceneSpec) -> String {
        let rows = self
            .rows
            .iter()
            .filter_map(|r| {
                let g = r.gauge_px()?;
                Some(ManifestRow {
                    row: r.row,
                    gauge_px: Fixed6(g),
                    p_d: Fixed6(g / spec.track.gauge_mm),
                })
            })
            .collect();
        let objects = self
            .objects
            .iter()
            .map(|o| {
                let b = &o.detection.bbox;
                ManifestObject {
                    class: &o.detection.class_name,
                    bbox: [Fixed6(b.x), Fixed6(b.y), Fixed6(b.w), Fixed6(b.h)],
                    edge_distance_mm: Fixed6(o.edge_distance_mm),
                }
            })
            .collect();
        let radius_mm = match spec.track.centerline {
            Centerline::Arc { radius_mm, .. } => Some(Fixed6(radius_mm)),
            Centerline::Straight { .. } => None,
        };
        let m = Manifest {
            spec,
            horizon_row: Fixed6(spec.camera.horizon_row()),
            radius_mm,
            rows,
            objects,
        };
        serde_json::to_string_pretty(&m).expect("manifest serializes")
    }
}
