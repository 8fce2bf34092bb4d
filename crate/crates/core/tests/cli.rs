use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use railzone::scene_io::{save_mask, LabelMask};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_railzone"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&std::ffi::OsStr]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn os<S: AsRef<std::ffi::OsStr> + ?Sized>(s: &S) -> &std::ffi::OsStr {
    s.as_ref()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn png_dims(path: &Path) -> (u32, u32) {
    let decoder = png::Decoder::new(std::io::BufReader::new(std::fs::File::open(path).unwrap()));
    let info = decoder.read_info().unwrap();
    let i = info.info();
    (i.width, i.height)
}

#[test]
fn assess_fixture_raises_red_alarm() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        os("assess"),
        fixture("mask.png").as_os_str(),
        fixture("detections.jsonl").as_os_str(),
        os("--out"),
        out.path().as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("max red"));

    let report = read_json(&out.path().join("report.json"));
    let v = &report["violations"];
    assert_eq!(v["max"], "red");
    let person = v["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["class"] == "person")
        .unwrap();
    assert_eq!(person["criticality"], "red");
    assert_eq!(report["width"], 640);
    assert!(!report["gauge_samples"].as_array().unwrap().is_empty());

    assert_eq!(png_dims(&out.path().join("overlay.png")), (640, 480));
    assert_eq!(png_dims(&out.path().join("zones.png")), (640, 480));
}

#[test]
fn assess_without_detections_is_quiet_and_green() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        os("assess"),
        fixture("mask.png").as_os_str(),
        empty.as_os_str(),
        os("--out"),
        out.as_os_str(),
        os("--quiet"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["violations"]["verdicts"].as_array().unwrap().len(), 0);
    assert_eq!(report["violations"]["max"], "green");
}

#[test]
fn assess_without_track_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("grass.png");
    save_mask(&LabelMask::filled(32, 24, 9), &mask).unwrap();
    let o = run(&[
        os("assess"),
        mask.as_os_str(),
        fixture("detections.jsonl").as_os_str(),
        os("--out"),
        dir.path().join("out").as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no gauge reference found"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // Zero demotion: the backpack on the track turns red as well.
    std::fs::write(
        &cfg,
        format!(
            r#"{{"demotion_levels": 0, "output_dir": {:?}}}"#,
            dir.path().join("from_config")
        ),
    )
    .unwrap();
    let o = run(&[
        os("--config"),
        cfg.as_os_str(),
        os("assess"),
        fixture("mask.png").as_os_str(),
        fixture("detections.jsonl").as_os_str(),
        os("--quiet"),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let report = read_json(&dir.path().join("from_config/report.json"));
    let backpack = report["violations"]["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["class"] == "backpack")
        .unwrap()
        .clone();
    assert_eq!(backpack["criticality"], "red");

    let flag_out = dir.path().join("from_flag");
    let o = run(&[
        os("assess"),
        fixture("mask.png").as_os_str(),
        fixture("detections.jsonl").as_os_str(),
        os("--config"),
        cfg.as_os_str(),
        os("--demotion-levels"),
        os("2"),
        os("--out"),
        flag_out.as_os_str(),
        os("--quiet"),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let report = read_json(&flag_out.join("report.json"));
    let backpack = report["violations"]["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["class"] == "backpack")
        .unwrap()
        .clone();
    assert_eq!(backpack["criticality"], "yellow");
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"closing_kernel": 4}"#).unwrap();
    let o = run(&[
        os("--config"),
        cfg.as_os_str(),
        os("assess"),
        fixture("mask.png").as_os_str(),
        fixture("detections.jsonl").as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("closing kernel"));

    std::fs::write(&cfg, r#"{"patch_sise": 4}"#).unwrap();
    let o = run(&[os("--config"), cfg.as_os_str(), os("eval-det"), os("a"), os("b")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("patch_sise"));
}

fn write_masks(dir: &Path, masks: &[(&str, LabelMask)]) {
    std::fs::create_dir_all(dir).unwrap();
    for (name, m) in masks {
        save_mask(m, dir.join(name)).unwrap();
    }
}

fn striped(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> LabelMask {
    let data = (0..w * h).map(|i| f(i % w, i / w)).collect();
    LabelMask::new(w, h, data).unwrap()
}

#[test]
fn eval_seg_identity_and_disjoint() {
    let dir = tempfile::tempdir().unwrap();
    let a = striped(40, 30, |x, _| if x < 20 { 12 } else { 15 });
    let b = striped(40, 30, |x, _| if x < 20 { 15 } else { 12 });
    write_masks(&dir.path().join("p"), &[("a.png", a.clone())]);
    write_masks(&dir.path().join("g"), &[("a.png", a)]);
    write_masks(&dir.path().join("q"), &[("a.png", b)]);
    let out = dir.path().join("out");

    let o = run(&[
        os("eval-seg"),
        dir.path().join("p").as_os_str(),
        dir.path().join("g").as_os_str(),
        os("--out"),
        out.as_os_str(),
        os("--quiet"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = read_json(&out.join("seg_score.json"));
    assert_eq!(s["mean_iou"].as_f64(), Some(1.0));

    let o = run(&[
        os("eval-seg"),
        dir.path().join("q").as_os_str(),
        dir.path().join("g").as_os_str(),
        os("--out"),
        out.as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["per_class"]["12"]["iou"].as_f64(), Some(0.0));
    assert_eq!(s["per_class"]["15"]["iou"].as_f64(), Some(0.0));
}

#[test]
fn eval_seg_aggregates_confusion_over_images() {
    // Three pairs; compare against per-pixel sums over all of them.
    let dir = tempfile::tempdir().unwrap();
    let gen = |seed: usize| striped(24, 20, move |x, y| [2u8, 3, 5][(x / 8 + y / 10 + seed) % 3]);
    let shift = |seed: usize| striped(24, 20, move |x, y| [2u8, 3, 5][((x + 3) / 8 + y / 10 + seed) % 3]);
    let preds: Vec<_> = (0..3).map(shift).collect();
    let gts: Vec<_> = (0..3).map(gen).collect();
    let names = ["a.png", "b.png", "c.png"];
    write_masks(
        &dir.path().join("p"),
        &names.iter().zip(&preds).map(|(n, m)| (*n, m.clone())).collect::<Vec<_>>(),
    );
    write_masks(
        &dir.path().join("g"),
        &names.iter().zip(&gts).map(|(n, m)| (*n, m.clone())).collect::<Vec<_>>(),
    );
    let o = run(&[
        os("eval-seg"),
        dir.path().join("p").as_os_str(),
        dir.path().join("g").as_os_str(),
        os("--patch-size"),
        os("0"),
        os("--out"),
        dir.path().join("out").as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s: Value = serde_json::from_slice(&o.stdout).unwrap();
    for c in [2u8, 3, 5] {
        let (mut i, mut u) = (0u64, 0u64);
        for (p, g) in preds.iter().zip(&gts) {
            for (&a, &b) in p.data().iter().zip(g.data()) {
                i += u64::from(a == c && b == c);
                u += u64::from(a == c || b == c);
            }
        }
        let got = s["per_class"][c.to_string()]["iou"].as_f64().unwrap();
        assert!((got - i as f64 / u as f64).abs() < 5e-7, "class {c}");
    }
}

#[test]
fn eval_seg_unmatched_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = LabelMask::filled(8, 8, 12);
    write_masks(&dir.path().join("p"), &[("a.png", m.clone()), ("extra.png", m.clone())]);
    write_masks(&dir.path().join("g"), &[("a.png", m)]);
    let o = run(&[
        os("eval-seg"),
        dir.path().join("p").as_os_str(),
        dir.path().join("g").as_os_str(),
        os("--out"),
        dir.path().join("out").as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("extra.png"));
}

#[test]
fn eval_det_half_recall() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.jsonl");
    let pred = dir.path().join("pred.jsonl");
    std::fs::write(
        &gt,
        "{\"image\":\"a\",\"class\":\"person\",\"bbox\":[0,0,10,10]}\n\
         {\"image\":\"b\",\"class\":\"person\",\"bbox\":[0,0,10,10]}\n",
    )
    .unwrap();
    std::fs::write(
        &pred,
        "{\"image\":\"a\",\"class\":\"person\",\"bbox\":[0,0,10,10],\"score\":0.9}\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&[os("eval-det"), pred.as_os_str(), gt.as_os_str(), os("--out"), out.as_os_str()]);
    assert_eq!(o.status.code(), Some(0));
    let s = read_json(&out.join("det_score.json"));
    // Precision 1 up to recall 0.5: levels 0..=50 of 101.
    let want = 51.0 / 101.0;
    assert!((s["map50"].as_f64().unwrap() - want).abs() < 5e-7);
    assert_eq!(s["per_class"]["person"]["iou"].as_f64(), Some(1.0));
}

#[test]
fn eval_det_reports_bad_line() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.jsonl");
    std::fs::write(&gt, "{\"class\":\"person\",\"bbox\":[0,0,10,10]}\n{oops}\n").unwrap();
    let o = run(&[os("eval-det"), gt.as_os_str(), gt.as_os_str(), os("--out"), dir.path().as_os_str()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

const CURVED_SPEC: &str = r#"{
  "camera": {"focal_px": 900, "height_mm": 2800, "pitch_rad": 0.15, "width": 320, "height": 240},
  "track": {"centerline": {"type": "arc", "offset_mm": 0, "radius_mm": 50000}, "extent_mm": [0, 30000]}
}"#;

#[test]
fn synth_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scene");
    let o = run(&[os("synth"), fixture("scene.json").as_os_str(), os("--out"), out.as_os_str()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["mask.png", "detections.jsonl", "zone_truth.png", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let table = railzone::scene_io::ClassTable::default_table();
    let mask = railzone::scene_io::load_mask(out.join("mask.png"), &table).unwrap().mask;
    assert!(mask.count(12) > 1000);
    // The bundled fixture is exactly what the spec renders to.
    assert_eq!(
        std::fs::read(out.join("mask.png")).unwrap(),
        std::fs::read(fixture("mask.png")).unwrap()
    );
    assert_eq!(
        std::fs::read(out.join("detections.jsonl")).unwrap(),
        std::fs::read(fixture("detections.jsonl")).unwrap()
    );
}

#[test]
fn synth_manifest_records_radius() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("curve.json");
    std::fs::write(&spec, CURVED_SPEC).unwrap();
    let out = dir.path().join("out");
    let o = run(&[os("synth"), spec.as_os_str(), os("--out"), out.as_os_str(), os("--quiet")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["radius_mm"].as_f64(), Some(50000.0));
    assert_eq!(m["spec"]["track"]["centerline"]["type"], "arc");
}

#[test]
fn synth_rejects_vertical_pitch_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    std::fs::write(&spec, CURVED_SPEC.replace("0.15", "1.5708")).unwrap();
    let o = run(&[os("synth"), spec.as_os_str(), os("--out"), dir.path().join("out").as_os_str()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("camera.pitch_rad"));

    std::fs::write(&spec, CURVED_SPEC.replace("\"height\": 240", "\"height\": -1")).unwrap();
    let o = run(&[os("synth"), spec.as_os_str(), os("--out"), dir.path().join("out").as_os_str()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("camera.height"));
}
