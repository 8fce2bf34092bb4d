//! Track cross-sections per image row and the pixel/millimetre conversion
//! derived from the known gauge.
//!
//! Each row a track crosses gives one width measurement `d_px` of the region
//! between the rails. Since that region is `d_real_in` millimetres wide
//! (1435 mm standard gauge), the row's conversion factor is
//! `p_d = d_px / d_real_in` pixels per millimetre, and a real distance
//! `d_out` at that row spans `p_d * d_out` pixels.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::components;
use crate::error::{Error, Result};
use crate::scene_io::{ClassTable, LabelMask};

/// Standard gauge, inner rail faces, in millimetres.
pub const STANDARD_GAUGE_MM: f64 = 1435.0;

/// Runs narrower than this are too far away (or too noisy) to calibrate on.
pub const DEFAULT_MIN_GAUGE_WIDTH: usize = 8;

/// The widest horizontal span of one track component in one row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TrackRun {
    pub row: usize,
    pub x_left: usize,
    pub x_right: usize,
    pub track_id: u32,
}

impl TrackRun {
    pub fn width(&self) -> usize {
        self.x_right - self.x_left + 1
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrackRuns {
    /// Sorted by `(track_id, row)`.
    pub runs: Vec<TrackRun>,
    /// Number of track components found.
    pub components: usize,
    /// Rows where a component was split into several runs (e.g. occlusion);
    /// only the widest run was kept.
    pub split_count: usize,
}

/// Labels 4-connected components over all track-category pixels and keeps
/// the widest run of each component in each row it touches. Equal-width
/// runs resolve to the leftmost.
pub fn extract_track_runs(mask: &LabelMask, table: &ClassTable) -> TrackRuns {
    let (w, h) = mask.dims();
    let data = mask.data();
    let (labels, boxes) = components::label(w, h, |i| table.is_track(data[i]).then_some(()));

    let mut runs = Vec::new();
    let mut split_count = 0;
    let mut row_best: HashMap<u32, (TrackRun, usize)> = HashMap::new();
    for y in 0..h {
        row_best.clear();
        let row = &labels[y * w..(y + 1) * w];
        let mut x = 0;
        while x < w {
            let lab = row[x];
            if lab == components::UNLABELED {
                x += 1;
                continue;
            }
            let start = x;
            while x < w && row[x] == lab {
                x += 1;
            }
            let run = TrackRun {
                row: y,
                x_left: start,
                x_right: x - 1,
                track_id: lab,
            };
            row_best
                .entry(lab)
                .and_modify(|(best, n)| {
                    *n += 1;
                    if run.width() > best.width() {
                        *best = run;
                    }
                })
                .or_insert((run, 1));
        }
        for (run, n) in row_best.values() {
            runs.push(*run);
            if *n > 1 {
                split_count += 1;
            }
        }
    }
    runs.sort_by_key(|r| (r.track_id, r.row));
    TrackRuns {
        runs,
        components: boxes.len(),
        split_count,
    }
}

/// One row's calibration: measured width and the pixels-per-millimetre factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaugeSample {
    pub row: usize,
    #[serde(rename = "track")]
    pub track_id: u32,
    #[serde(rename = "d_px")]
    pub d_px_in: usize,
    pub p_d: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeProfile {
    samples: Vec<GaugeSample>,
    track_components: usize,
    d_real_in_mm: f64,
    by_track: BTreeMap<u32, Vec<(usize, f64)>>,
}

impl GaugeProfile {
    /// Builds a profile from explicit samples, e.g. a known calibration.
    pub fn from_samples(samples: Vec<GaugeSample>, d_real_in_mm: f64) -> Result<Self> {
        check_gauge(d_real_in_mm)?;
        let mut samples = samples;
        samples.sort_by_key(|s| (s.row, s.track_id));
        let mut by_track: BTreeMap<u32, Vec<(usize, f64)>> = BTreeMap::new();
        for s in &samples {
            if !(s.p_d.is_finite() && s.p_d > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "p_d must be positive, got {} at row {}",
                    s.p_d, s.row
                )));
            }
            by_track.entry(s.track_id).or_default().push((s.row, s.p_d));
        }
        for (t, rows) in &mut by_track {
            rows.sort_by_key(|r| r.0);
            if rows.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::InvalidParameter(format!(
                    "track {t} has two samples in one row"
                )));
            }
        }
        Ok(Self {
            track_components: by_track.len(),
            samples,
            d_real_in_mm,
            by_track,
        })
    }

    /// Samples ordered by row, then track.
    pub fn samples(&self) -> &[GaugeSample] {
        &self.samples
    }

    pub fn track_components(&self) -> usize {
        self.track_components
    }

    pub fn d_real_in_mm(&self) -> f64 {
        self.d_real_in_mm
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn has_track(&self, track_id: u32) -> bool {
        self.by_track.contains_key(&track_id)
    }

    /// Conversion factor at `row`: the sample there, else linear
    /// interpolation between the nearest sampled rows of the same track,
    /// else the nearest end sample.
    pub fn p_d_at(&self, row: usize, track_id: u32) -> Result<f64> {
        let rows = self
            .by_track
            .get(&track_id)
            .ok_or(Error::NoSamples(track_id))?;
        Ok(match rows.binary_search_by_key(&row, |r| r.0) {
            Ok(i) => rows[i].1,
            Err(0) => rows[0].1,
            Err(i) if i == rows.len() => rows[i - 1].1,
            Err(i) => {
                let (r0, p0) = rows[i - 1];
                let (r1, p1) = rows[i];
                let t = (row - r0) as f64 / (r1 - r0) as f64;
                p0 + (p1 - p0) * t
            }
        })
    }

    /// Pixel length of a real distance `d_real_out_mm` at `row`.
    pub fn metric_to_pixels(&self, row: usize, track_id: u32, d_real_out_mm: f64) -> Result<f64> {
        Ok(self.p_d_at(row, track_id)? * d_real_out_mm)
    }

    /// `[{"row", "track", "d_px", "p_d"}, ...]`
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.samples).expect("profile serializes")
    }
}

fn check_gauge(d_real_in_mm: f64) -> Result<()> {
    if !(d_real_in_mm.is_finite() && d_real_in_mm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gauge must be positive, got {d_real_in_mm} mm"
        )));
    }
    Ok(())
}

/// Turns every run at least `min_width` pixels wide into a gauge sample.
pub fn build_gauge_profile(
    runs: &[TrackRun],
    d_real_in_mm: f64,
    min_width: usize,
) -> Result<GaugeProfile> {
    check_gauge(d_real_in_mm)?;
    if min_width == 0 {
        return Err(Error::InvalidParameter("min_width must be at least 1".into()));
    }
    let samples = runs
        .iter()
        .filter(|r| r.width() >= min_width)
        .map(|r| GaugeSample {
            row: r.row,
            track_id: r.track_id,
            d_px_in: r.width(),
            p_d: r.width() as f64 / d_real_in_mm,
        })
        .collect();
    let mut profile = GaugeProfile::from_samples(samples, d_real_in_mm)?;
    profile.track_components = runs.iter().map(|r| r.track_id).collect::<BTreeSet<_>>().len();
    Ok(profile)
}

/// Free-function form of [`GaugeProfile::metric_to_pixels`].
pub fn metric_to_pixels(
    profile: &GaugeProfile,
    row: usize,
    track_id: u32,
    d_real_out_mm: f64,
) -> Result<f64> {
    profile.metric_to_pixels(row, track_id, d_real_out_mm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene_io::VOID;
    use proptest::prelude::*;

    const TRACK: u8 = 12;

    fn sample(row: usize, p_d: f64) -> GaugeSample {
        GaugeSample {
            row,
            track_id: 0,
            d_px_in: 0,
            p_d,
        }
    }

    #[test]
    fn vertical_band() {
        let mut m = LabelMask::filled(10, 10, VOID);
        for y in 0..10 {
            for x in 3..=6 {
                m.set(x, y, TRACK);
            }
        }
        let runs = extract_track_runs(&m, &ClassTable::default_table());
        assert_eq!(runs.runs.len(), 10);
        assert!(runs.runs.iter().all(|r| r.width() == 4 && r.x_left == 3));
        assert_eq!(runs.components, 1);
        assert_eq!(runs.split_count, 0);
    }

    #[test]
    fn two_tracks_get_two_ids() {
        let mut m = LabelMask::filled(20, 5, VOID);
        for y in 0..5 {
            for x in 2..5 {
                m.set(x, y, TRACK);
            }
            // tram track counts as track too
            for x in 12..16 {
                m.set(x, y, 3);
            }
        }
        let runs = extract_track_runs(&m, &ClassTable::default_table());
        let ids: BTreeSet<u32> = runs.runs.iter().map(|r| r.track_id).collect();
        assert_eq!(ids.len(), 2);
        assert_eq!(runs.runs.len(), 10);
    }

    #[test]
    fn occluded_row_keeps_widest_run() {
        let mut m = LabelMask::filled(10, 10, VOID);
        for y in 0..10 {
            for x in 3..=6 {
                m.set(x, y, TRACK);
            }
        }
        // Row 5: columns 3,4 | occluder at 5 | column 6
        m.set(5, 5, VOID);
        let runs = extract_track_runs(&m, &ClassTable::default_table());
        let r5 = runs.runs.iter().find(|r| r.row == 5).unwrap();
        assert_eq!((r5.x_left, r5.x_right), (3, 4));
        assert_eq!(runs.split_count, 1);
        assert_eq!(runs.components, 1);
    }

    #[test]
    fn no_track_no_runs() {
        let m = LabelMask::filled(4, 4, 2);
        assert!(extract_track_runs(&m, &ClassTable::default_table()).runs.is_empty());
    }

    #[test]
    fn gauge_arithmetic() {
        let run = |w: usize| TrackRun {
            row: 0,
            x_left: 0,
            x_right: w - 1,
            track_id: 0,
        };
        let p = build_gauge_profile(&[run(287)], 1435.0, 8).unwrap();
        assert_eq!(p.samples()[0].p_d, 287.0 / 1435.0);
        assert!((p.samples()[0].p_d - 0.2).abs() < 1e-15);

        let p = build_gauge_profile(&[run(144)], 1435.0, 8).unwrap();
        assert!((p.samples()[0].p_d - 0.100348).abs() < 1e-6);

        let p = build_gauge_profile(&[run(5)], 1435.0, 8).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.track_components(), 1);

        assert!(build_gauge_profile(&[run(5)], 0.0, 8).is_err());
        assert!(build_gauge_profile(&[run(5)], -3.0, 8).is_err());
        assert!(build_gauge_profile(&[run(5)], 1435.0, 0).is_err());
    }

    #[test]
    fn metric_to_pixels_examples() {
        let p = GaugeProfile::from_samples(vec![sample(400, 0.2)], 1435.0).unwrap();
        assert!((p.metric_to_pixels(400, 0, 600.0).unwrap() - 120.0).abs() < 1e-12);

        let p = GaugeProfile::from_samples(vec![sample(100, 0.1), sample(300, 0.3)], 1435.0)
            .unwrap();
        assert!((p.metric_to_pixels(200, 0, 1000.0).unwrap() - 200.0).abs() < 1e-9);
        // clamped above the top sample and below the bottom one
        assert_eq!(p.p_d_at(10, 0).unwrap(), 0.1);
        assert_eq!(p.p_d_at(900, 0).unwrap(), 0.3);
        assert!(matches!(p.p_d_at(10, 7), Err(Error::NoSamples(7))));
    }

    #[test]
    fn duplicate_rows_rejected() {
        let r = GaugeProfile::from_samples(vec![sample(1, 0.1), sample(1, 0.2)], 1435.0);
        assert!(r.is_err());
    }

    #[test]
    fn json_export() {
        let p = GaugeProfile::from_samples(
            vec![GaugeSample {
                row: 3,
                track_id: 1,
                d_px_in: 287,
                p_d: 0.2,
            }],
            1435.0,
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&p.to_json()).unwrap();
        assert_eq!(v, serde_json::json!([{"row": 3, "track": 1, "d_px": 287, "p_d": 0.2}]));
    }

    proptest! {
        #[test]
        fn linear_in_distance(p_top in 0.01f64..1.0, p_bot in 0.01f64..1.0, row in 0usize..500, d in 1.0f64..5000.0, k in 0.1f64..10.0) {
            let p = GaugeProfile::from_samples(vec![sample(100, p_top), sample(400, p_bot)], 1435.0).unwrap();
            let a = p.metric_to_pixels(row, 0, k * d).unwrap();
            let b = k * p.metric_to_pixels(row, 0, d).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * b.abs());
        }

        #[test]
        fn interpolation_stays_between_neighbours(p_top in 0.01f64..1.0, p_bot in 0.01f64..1.0, row in 0usize..500) {
            let p = GaugeProfile::from_samples(vec![sample(100, p_top), sample(400, p_bot)], 1435.0).unwrap();
            let v = p.p_d_at(row, 0).unwrap();
            prop_assert!(v >= p_top.min(p_bot) - 1e-15 && v <= p_top.max(p_bot) + 1e-15);
        }
    }
}
