//! Command implementations behind the `railzone` binary, plus the
//! [`run_pipeline`] entry point shared with tests.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask_post::{
    close_mask, det_map50_images, suppress_small_patches, PatchFilterConfig, SegCounts,
    DEFAULT_CLOSING_KERNEL,
};
use crate::rail_gauge::{
    build_gauge_profile, extract_track_runs, GaugeProfile, DEFAULT_MIN_GAUGE_WIDTH,
    STANDARD_GAUGE_MM,
};
use crate::render::render_overlay;
use crate::scene_io::png_io::{encode_gray8, write_atomic};
use crate::scene_io::{
    filter_classes, load_detection_records, load_mask, save_mask, ClassTable, Detection,
    DetectionSet, LabelMask,
};
use crate::synth::{render_scene, SceneSpec};
use crate::violation::{classify, Criticality, ViolationPolicy, ViolationReport};
use crate::zones::{estimate_zones, CriticalZoneMap, ZoneSpec};

pub const REPORT_FILE: &str = "report.json";
pub const ZONES_FILE: &str = "zones.png";
pub const OVERLAY_FILE: &str = "overlay.png";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SEG_SCORE_FILE: &str = "seg_score.json";
pub const DET_SCORE_FILE: &str = "det_score.json";

/// Exit status when the most critical verdict is red.
pub const EXIT_RED: i32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in table when unset.
    pub class_table: Option<PathBuf>,
    pub zone_distances_mm: [f64; 3],
    pub patch_size: usize,
    pub closing_kernel: usize,
    pub min_gauge_width: usize,
    pub demotion_levels: u8,
    pub output_dir: PathBuf,
    pub gauge_mm: f64,
    pub include_track_in_red: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            class_table: None,
            zone_distances_mm: ZoneSpec::DEFAULT_DISTANCES_MM,
            patch_size: PatchFilterConfig::DEFAULT_PATCH_SIZE,
            closing_kernel: DEFAULT_CLOSING_KERNEL,
            min_gauge_width: DEFAULT_MIN_GAUGE_WIDTH,
            demotion_levels: 1,
            output_dir: PathBuf::from("."),
            gauge_mm: STANDARD_GAUGE_MM,
            include_track_in_red: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Spec {
            path: format!("{}: {}", path.display(), e.path()),
            msg: e.into_inner().to_string(),
        })?;
        Ok(cfg)
    }

    /// Checks ranges and that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        self.zone_spec()?;
        if self.closing_kernel == 0 || self.closing_kernel.is_multiple_of(2) {
            return Err(Error::InvalidKernel(self.closing_kernel as i64));
        }
        if self.min_gauge_width == 0 {
            return Err(Error::InvalidParameter("min_gauge_width must be at least 1".into()));
        }
        if self.demotion_levels > 3 {
            return Err(Error::InvalidParameter("demotion_levels must be at most 3".into()));
        }
        if !(self.gauge_mm.is_finite() && self.gauge_mm > 0.0) {
            return Err(Error::InvalidParameter("gauge_mm must be positive".into()));
        }
        if let Some(p) = &self.class_table {
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "class table not found"),
                ));
            }
        }
        Ok(())
    }

    pub fn zone_spec(&self) -> Result<ZoneSpec> {
        ZoneSpec::new(self.zone_distances_mm, self.include_track_in_red)
    }

    pub fn policy(&self) -> ViolationPolicy {
        ViolationPolicy {
            stationary_demotion: self.demotion_levels,
        }
    }

    pub fn class_table(&self) -> Result<ClassTable> {
        match &self.class_table {
            Some(p) => ClassTable::load(p),
            None => Ok(ClassTable::default_table()),
        }
    }
}

/// Everything computed for one scene.
#[derive(Clone, Debug)]
pub struct Assessment {
    /// The mask after class filtering and closing.
    pub mask: LabelMask,
    pub profile: GaugeProfile,
    pub zones: CriticalZoneMap,
    pub detections: DetectionSet,
    pub report: ViolationReport,
}

/// Filter classes, close, measure the gauge, build zones, classify.
pub fn run_pipeline(
    mask: &LabelMask,
    detections: Vec<Detection>,
    table: &ClassTable,
    cfg: &RunConfig,
) -> Result<Assessment> {
    table.require_track_class()?;
    let zone_spec = cfg.zone_spec()?;
    let cleaned = close_mask(&filter_classes(mask, table), cfg.closing_kernel)?;
    let runs = extract_track_runs(&cleaned, table);
    let profile = build_gauge_profile(&runs.runs, cfg.gauge_mm, cfg.min_gauge_width)?;
    let zones = estimate_zones(&cleaned, table, &profile, &zone_spec)?;
    let detections = DetectionSet::new(detections, cleaned.dims(), table);
    let report = classify(&detections, &zones, table, &cfg.policy())?;
    Ok(Assessment {
        mask: cleaned,
        profile,
        zones,
        detections,
        report,
    })
}

#[derive(Serialize)]
struct AssessReport<'a, V: Serialize, B: Serialize> {
    width: usize,
    height: usize,
    remapped_pixels: usize,
    gauge_samples: &'a [crate::rail_gauge::GaugeSample],
    boundaries: B,
    violations: V,
}

fn write_json(path: &Path, text: &str) -> Result<()> {
    let mut bytes = text.as_bytes().to_vec();
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Returns the exit code: [`EXIT_RED`] when the worst verdict is red, else 0.
pub fn cmd_assess(
    mask_path: &Path,
    detections_path: &Path,
    cfg: &RunConfig,
    quiet: bool,
) -> Result<i32> {
    cfg.validate()?;
    let table = cfg.class_table()?;
    let loaded = load_mask(mask_path, &table)?;
    let dets = load_detection_records(detections_path)?;
    let a = run_pipeline(&loaded.mask, dets, &table, cfg)?;

    let out = &cfg.output_dir;
    ensure_dir(out)?;
    let report = AssessReport {
        width: a.mask.width(),
        height: a.mask.height(),
        remapped_pixels: loaded.remap_count,
        gauge_samples: a.profile.samples(),
        boundaries: a.zones.boundaries_view(),
        violations: a.report.view(),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_json(&out.join(REPORT_FILE), &text)?;
    let (w, h) = a.zones.raster.dims();
    write_atomic(&out.join(ZONES_FILE), &encode_gray8(w, h, &a.zones.raster.to_gray())?)?;
    let overlay = render_overlay(&loaded.mask, &a.zones.raster, &a.detections, &a.report);
    write_atomic(&out.join(OVERLAY_FILE), &overlay.encode_png()?)?;

    if !quiet {
        let r = &a.report;
        println!(
            "{} detections: {} red, {} orange, {} yellow, {} green; max {}",
            r.verdicts.len(),
            r.counts[Criticality::Red as usize],
            r.counts[Criticality::Orange as usize],
            r.counts[Criticality::Yellow as usize],
            r.counts[Criticality::Green as usize],
            r.max_criticality
        );
    }
    Ok(if a.report.max_criticality == Criticality::Red {
        EXIT_RED
    } else {
        0
    })
}

fn png_names(dir: &Path) -> Result<BTreeSet<String>> {
    let mut names = BTreeSet::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.to_ascii_lowercase().ends_with(".png") && entry.path().is_file() {
            names.insert(name);
        }
    }
    Ok(names)
}

/// Segmentation score over all matching files, from a single confusion
/// accumulation. Small patches of either mask are ignored per pair.
pub fn cmd_eval_seg(pred_dir: &Path, gt_dir: &Path, cfg: &RunConfig, quiet: bool) -> Result<i32> {
    cfg.validate()?;
    let table = cfg.class_table()?;
    let pred = png_names(pred_dir)?;
    let gt = png_names(gt_dir)?;
    let unmatched: Vec<String> = pred.symmetric_difference(&gt).cloned().collect();
    if !unmatched.is_empty() {
        return Err(Error::UnmatchedFiles(unmatched));
    }
    let patches = PatchFilterConfig::new(cfg.patch_size);
    let mut counts = SegCounts::new();
    for name in &pred {
        let p = filter_classes(&load_mask(pred_dir.join(name), &table)?.mask, &table);
        let g = filter_classes(&load_mask(gt_dir.join(name), &table)?.mask, &table);
        let ignore = suppress_small_patches(&p, patches).union(&suppress_small_patches(&g, patches));
        counts.add(&p, &g, &ignore)?;
    }
    let text = counts.score().to_json(Some(&table));
    ensure_dir(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join(SEG_SCORE_FILE), &text)?;
    if !quiet {
        println!("{text}");
    }
    Ok(0)
}

pub fn cmd_eval_det(pred_path: &Path, gt_path: &Path, cfg: &RunConfig, quiet: bool) -> Result<i32> {
    let pred = load_detection_records(pred_path)?;
    let gt = load_detection_records(gt_path)?;
    let text = det_map50_images(&pred, &gt).to_json();
    ensure_dir(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join(DET_SCORE_FILE), &text)?;
    if !quiet {
        println!("{text}");
    }
    Ok(0)
}

/// Writes `mask.png`, `detections.jsonl`, `zone_truth.png` and the truth
/// manifest for a scene spec.
pub fn cmd_synth(spec_path: &Path, cfg: &RunConfig, quiet: bool) -> Result<i32> {
    let table = cfg.class_table()?;
    let spec = SceneSpec::load(spec_path).map_err(|e| match e {
        Error::Spec { path, msg } => Error::Spec {
            path: format!("{}: {path}", spec_path.display()),
            msg,
        },
        e => e,
    })?;
    let truth = render_scene(&spec, &table)?;
    let out = &cfg.output_dir;
    ensure_dir(out)?;
    save_mask(&truth.mask, out.join("mask.png"))?;
    let lines: String = truth
        .objects
        .iter()
        .map(|o| crate::scene_io::detection_line(&o.detection) + "\n")
        .collect();
    write_atomic(&out.join("detections.jsonl"), lines.as_bytes())?;
    let (w, h) = truth.zone_truth.dims();
    write_atomic(&out.join("zone_truth.png"), &encode_gray8(w, h, &truth.zone_truth.to_gray())?)?;
    write_json(&out.join(MANIFEST_FILE), &truth.manifest_json(&spec))?;
    if !quiet {
        println!(
            "{}x{} scene, {} objects, written to {}",
            w,
            h,
            truth.objects.len(),
            out.display()
        );
    }
    Ok(0)
}
