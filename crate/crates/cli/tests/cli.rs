use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use segmat::abstraction::OrientedBox;
use segmat::fixtures::{totem_shape, TubeShape};
use segmat::geometry::Vec3;
use segmat::io;

fn segmat(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_segmat"));
    c.args(args).env_remove("SEGMAT_CONFIG");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

struct Files {
    dir: TempDir,
    shape: TubeShape,
}

impl Files {
    fn totem() -> Self {
        let dir = TempDir::new().unwrap();
        let shape = totem_shape();
        io::save_surface(&shape.surface, dir.path().join("totem.off")).unwrap();
        io::save_medial_mesh(&shape.mat, dir.path().join("totem.ma")).unwrap();
        io::save_labels(&shape.truth, dir.path().join("truth.labels")).unwrap();
        Self { dir, shape }
    }

    fn p(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }
}

#[test]
fn segment_writes_labels_ply_and_report() {
    let f = Files::totem();
    let out = f.p("out");
    let r = json(&segmat(&["segment", "--mesh", &f.p("totem.off"), "--mat", &f.p("totem.ma"), "-o", &out, "--emit-structured-mat"], &[]));
    let labels = io::load_labels(f.dir.path().join("out/totem.labels"), Some(f.shape.surface.faces.len())).unwrap();
    assert_eq!(r["counts"]["regions"], 3);
    assert!(labels.iter().all(|&l| l < 3));
    assert!(Path::new(&format!("{out}/totem.ply")).exists());
    assert!(io::load_medial_mesh(format!("{out}/totem.smat.ma")).is_ok());
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(format!("{out}/totem.report.json")).unwrap()).unwrap();
    assert_eq!(saved["counts"], r["counts"]);
    // Every parameter is reported, with its source.
    let params = r["parameters"].as_object().unwrap();
    assert_eq!(params.len(), 18);
    assert!(params.values().all(|s| s["source"] == "default"));
    assert_eq!(r["skipped"], Value::Array(vec![]));
    assert!(r["graph_cut"]["energy"].as_f64().unwrap() <= r["graph_cut"]["initial_energy"].as_f64().unwrap());
}

#[test]
fn missing_mat_exits_with_2() {
    let f = Files::totem();
    let o = segmat(&["segment", "--mesh", &f.p("totem.off"), "--mat", &f.p("absent.ma"), "-o", &f.p("out")], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn malformed_mat_exits_with_2() {
    let f = Files::totem();
    std::fs::write(f.dir.path().join("bad.ma"), "v 0 0 0 1\nf 0 1 2\n").unwrap();
    let o = segmat(&["segment", "--mesh", &f.p("totem.off"), "--mat", &f.p("bad.ma"), "-o", &f.p("out")], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ablation_flags_are_reported_as_skipped() {
    let f = Files::totem();
    let args = ["segment", "--mesh", &f.p("totem.off"), "--mat", &f.p("totem.ma"), "-o", &f.p("out")];
    let r = json(&segmat(&[&args[..], &["--no-swallowing", "--no-merging", "--no-graphcut"]].concat(), &[]));
    assert_eq!(r["skipped"], serde_json::json!(["swallowing", "merging", "graph_cut"]));
    assert_eq!(r["stages"]["graph_cut"], "skipped");
    assert!(r["graph_cut"].is_null());
    assert_eq!(r["parameters"]["merging"]["source"], "cli");
    let r = json(&segmat(&[&args[..], &["--merge-off"]].concat(), &[]));
    assert_eq!(r["skipped"], serde_json::json!(["merging"]));
}

#[test]
fn identical_runs_give_identical_files() {
    let f = Files::totem();
    let run = |out: &str| {
        json(&segmat(&["segment", "--mesh", &f.p("totem.off"), "--mat", &f.p("totem.ma"), "-o", out, "--emit-structured-mat"], &[]));
    };
    run(&f.p("a"));
    run(&f.p("b"));
    for name in ["totem.labels", "totem.ply", "totem.smat.ma"] {
        let read = |d: &str| std::fs::read(f.dir.path().join(d).join(name)).unwrap();
        assert_eq!(read("a"), read("b"), "{name}");
    }
}

#[test]
fn configuration_precedence() {
    let f = Files::totem();
    let cfg = f.dir.path().join("segmat.cfg");
    std::fs::write(&cfg, "# tuned\nalpha = 0.07\nomega=0.2\n").unwrap();
    let args = ["segment", "--mesh", &f.p("totem.off"), "--mat", &f.p("totem.ma"), "-o", &f.p("out"), "--omega", "0.25"];
    let r = json(&segmat(&args, &[("SEGMAT_CONFIG", &cfg)]));
    let p = &r["parameters"];
    assert_eq!(p["alpha"], serde_json::json!({ "value": 0.07, "source": "file" }));
    assert_eq!(p["omega"], serde_json::json!({ "value": 0.25, "source": "cli" }));
    assert_eq!(p["lambda"]["source"], "default");

    std::fs::write(&cfg, "alpha = lots\n").unwrap();
    assert_eq!(segmat(&args, &[("SEGMAT_CONFIG", &cfg)]).status.code(), Some(2));
    let bad = segmat(&[&args[..], &["--set", "merge_tau=3"]].concat(), &[]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn eval_reports_raw_and_scaled_values() {
    let f = Files::totem();
    let r = json(&segmat(&["eval", "--pred", &f.p("truth.labels"), "--gt", &f.p("truth.labels"), "--mesh", &f.p("totem.off")], &[]));
    for m in ["rand_index", "cut_discrepancy", "hamming", "gce", "lce"] {
        assert_eq!(r["metrics"][m], serde_json::json!({ "raw": 0.0, "scaled": 0.0 }), "{m}");
    }
    // A directory of ground truths is averaged.
    let gts = f.dir.path().join("gts");
    std::fs::create_dir(&gts).unwrap();
    let n = f.shape.surface.faces.len();
    io::save_labels(&f.shape.truth, gts.join("a.labels")).unwrap();
    io::save_labels(&vec![0; n], gts.join("b.labels")).unwrap();
    let r = json(&segmat(&["eval", "--pred", &f.p("truth.labels"), "--gt", &gts.display().to_string(), "--mesh", &f.p("totem.off")], &[]));
    let ri_b = r["per_ground_truth"][1]["rand_index"].as_f64().unwrap();
    assert!(ri_b > 0.0);
    assert!((r["metrics"]["rand_index"]["raw"].as_f64().unwrap() - ri_b / 2.0).abs() < 1e-15);
    assert!(r["per_ground_truth"][1]["cut_discrepancy"].is_null());

    let csv = segmat(&["eval", "--pred", &f.p("truth.labels"), "--gt", &f.p("truth.labels"), "--mesh", &f.p("totem.off"), "--report", "csv"], &[]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("metric,raw,scaled\nrand_index,0,0\n"), "{text}");
}

#[test]
fn eval_length_mismatch_exits_with_2() {
    let f = Files::totem();
    std::fs::write(f.dir.path().join("short.labels"), "0\n1\n").unwrap();
    let o = segmat(&["eval", "--pred", &f.p("short.labels"), "--gt", &f.p("truth.labels"), "--mesh", &f.p("totem.off")], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn abstract_on_a_segmented_box() {
    let dir = TempDir::new().unwrap();
    let b = OrientedBox { center: Vec3::new(0.5, -1.0, 2.0), axes: [Vec3::x(), Vec3::y(), Vec3::z()], half_extents: [1.5, 1.0, 0.5] };
    let mesh = b.to_mesh();
    let (m, l, o) = (dir.path().join("box.off"), dir.path().join("box.labels"), dir.path().join("boxes.obj"));
    io::save_surface(&mesh, &m).unwrap();
    io::save_labels(&vec![0; mesh.faces.len()], &l).unwrap();
    let s = |p: &PathBuf| p.display().to_string();
    let r = json(&segmat(&["abstract", "--mesh", &s(&m), "--labels", &s(&l), "--boxes-out", &s(&o), "--samples", "4000"], &[]));
    assert!(r["iou"].as_f64().unwrap() >= 0.98, "{r}");
    assert_eq!(r["boxes"].as_array().unwrap().len(), 1);
    assert!((r["boxes"][0]["volume"].as_f64().unwrap() - 6.0).abs() < 1e-9);
    assert_eq!(io::load_surface(&o).unwrap().faces.len(), 12);
}

#[test]
fn simplify_writes_a_structured_mat() {
    let f = Files::totem();
    let r = json(&segmat(&["simplify", "--mat", &f.p("totem.ma"), "-o", &f.p("s.ma")], &[]));
    let after = io::load_medial_mesh(f.dir.path().join("s.ma")).unwrap();
    assert_eq!(r["after"]["spheres"], after.spheres.len());
    assert!(r["after"]["faces"].as_u64() < r["before"]["faces"].as_u64());
}

#[test]
fn cloud_labels_skeleton_and_raw_points() {
    let dir = TempDir::new().unwrap();
    let mut skel = Vec::new();
    let mut raw = Vec::new();
    for i in 0..60 {
        let x = i as f64 * 0.25;
        skel.push(Vec3::new(x, 0.0, 0.0));
        for k in 0..12 {
            let t = k as f64 * std::f64::consts::TAU / 12.0;
            raw.push(Vec3::new(x, t.cos(), t.sin()));
        }
    }
    let (sp, cp) = (dir.path().join("skel.xyz"), dir.path().join("raw.xyz"));
    std::fs::write(&sp, io::write_xyz(&skel)).unwrap();
    std::fs::write(&cp, io::write_xyz(&raw)).unwrap();
    let (lo, co) = (dir.path().join("skel.labels"), dir.path().join("raw.labels"));
    let s = |p: &PathBuf| p.display().to_string();
    let r = json(&segmat(&["cloud", "--skeleton", &s(&sp), "--cloud", &s(&cp), "-o", &s(&lo), "--cloud-labels", &s(&co), "--knn", "6"], &[]));
    assert_eq!(r["counts"]["regions"], 1);
    assert_eq!(r["parameters"]["knn"], serde_json::json!({ "value": 6, "source": "cli" }));
    assert_eq!(io::load_labels(&lo, Some(60)).unwrap(), vec![0; 60]);
    assert_eq!(io::load_labels(&co, Some(720)).unwrap().len(), 720);
}

#[test]
fn batch_mode_runs_shapes_concurrently() {
    let f = Files::totem();
    std::fs::copy(f.dir.path().join("totem.off"), f.dir.path().join("second.off")).unwrap();
    std::fs::write(f.dir.path().join("list.txt"), "totem.off totem.ma\nsecond.off totem.ma\n").unwrap();
    let r = json(&segmat(&["segment", "--batch", &f.p("list.txt"), "--jobs", "2", "-o", &f.p("out")], &[]));
    assert_eq!(r["shapes"].as_array().unwrap().len(), 2);
    let read = |n: &str| std::fs::read(f.dir.path().join("out").join(n)).unwrap();
    assert_eq!(read("totem.labels"), read("second.labels"));

    std::fs::write(f.dir.path().join("list.txt"), "totem.off totem.ma\nother.off missing.ma\n").unwrap();
    let o = segmat(&["segment", "--batch", &f.p("list.txt"), "--jobs", "2", "-o", &f.p("out2")], &[]);
    assert_eq!(o.status.code(), Some(2));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["shapes"][0]["exit"], 0);
    assert_eq!(r["shapes"][1]["exit"], 2);
}
