use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::{json, Value};

use segmat::abstraction::{abstraction_error_with, part_boxes};
use segmat::io;
use segmat::mesh::{MedialMesh, SurfaceMesh};
use segmat::metrics::{evaluate, MetricReport};
use segmat::pipeline::{segment_shape, PipelineError, ShapeSegmentation};
use segmat::simplify::simplify_with_trace;
use segmat::skeleton::{segment_skeleton, transfer_to_cloud, SkeletonCloud};
use segmat::transfer::TransferError;

use crate::config::Config;
use crate::{AbstractArgs, CliError, CloudArgs, EvalArgs, ReportFormat, SegmentArgs, SimplifyArgs};

fn input<T>(path: &Path, r: Result<T, io::MeshIoError>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Input { path: path.to_path_buf(), source })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

fn output(path: &Path, r: Result<(), io::MeshIoError>) -> Result<(), CliError> {
    r.map_err(|e| match e {
        io::MeshIoError::Io(source) => CliError::Output { path: path.to_path_buf(), source },
        other => CliError::Invalid(format!("{}: {other}", path.display())),
    })
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("report serializes"));
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn pipeline_error(e: PipelineError) -> CliError {
    match e {
        PipelineError::Transfer(TransferError::NoSegments | TransferError::EmptySegment(_)) => {
            CliError::Invariant(e.to_string())
        }
        other => CliError::Invalid(other.to_string()),
    }
}

/// One shape to segment.
#[derive(Debug, Clone)]
struct Job {
    mesh: PathBuf,
    mat: PathBuf,
    structured: Option<PathBuf>,
    stem: String,
}

fn stem_of(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("shape").to_string()
}

fn check_exists(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("{}: no such file", path.display())))
    }
}

fn check_segmentation(mesh: &SurfaceMesh, r: &ShapeSegmentation) -> Result<(), CliError> {
    let regions = r.mat.region_count();
    if r.face_labels.len() != mesh.faces.len() {
        return Err(CliError::Invariant(format!("{} labels for {} faces", r.face_labels.len(), mesh.faces.len())));
    }
    if r.mat.node_labels.len() != r.mat.graph.len() {
        return Err(CliError::Invariant("node labels do not cover the graph".into()));
    }
    if let Some(l) = r.face_labels.iter().chain(&r.mat.node_labels).find(|&&l| l >= regions) {
        return Err(CliError::Invariant(format!("label {l} out of range for {regions} regions")));
    }
    if let Some(t) = &r.transfer {
        if t.energy > t.initial_energy {
            return Err(CliError::Invariant("graph cut raised the energy".into()));
        }
    }
    Ok(())
}

fn run_job(job: &Job, config: &Config, out: &Path, emit_structured: bool) -> Result<Value, CliError> {
    let params = config.params()?;
    check_exists(&job.mesh)?;
    check_exists(&job.mat)?;
    if let Some(s) = &job.structured {
        check_exists(s)?;
    }
    let mesh = input(&job.mesh, io::load_surface(&job.mesh))?;
    let base = input(&job.mat, io::load_medial_mesh(&job.mat))?;
    let structured: Option<MedialMesh> =
        job.structured.as_ref().map(|p| input(p, io::load_medial_mesh(p))).transpose()?;

    let r = segment_shape(&mesh, &base, structured.as_ref(), &params).map_err(pipeline_error)?;
    check_segmentation(&mesh, &r)?;

    let labels_path = out.join(format!("{}.labels", job.stem));
    let ply_path = out.join(format!("{}.ply", job.stem));
    output(&labels_path, io::save_labels(&r.face_labels, &labels_path))?;
    output(&ply_path, io::save_colored_mesh(&mesh, &r.face_labels, &ply_path))?;
    let smat_path = emit_structured.then(|| out.join(format!("{}.smat.ma", job.stem)));
    if let Some(p) = &smat_path {
        output(p, io::save_medial_mesh(&r.mat.structured, p))?;
    }

    let ran = |on: bool| if on { "ran" } else { "skipped" };
    let skipped: Vec<&str> = [("swallowing", params.growing.swallowing), ("merging", params.merging), ("graph_cut", params.graph_cut)]
        .into_iter()
        .filter(|s| !s.1)
        .map(|s| s.0)
        .collect();
    let mut used: Vec<usize> = r.face_labels.clone();
    used.sort_unstable();
    used.dedup();
    let report = json!({
        "command": "segment",
        "version": env!("CARGO_PKG_VERSION"),
        "inputs": {
            "mesh": path_str(&job.mesh),
            "mat": path_str(&job.mat),
            "structured_mat": job.structured.as_deref().map(path_str),
        },
        "parameters": config,
        "stages": {
            "simplify": if r.mat.simplified { "ran" } else { "supplied" },
            "swallowing": ran(params.growing.swallowing),
            "merging": ran(params.merging),
            "graph_cut": ran(params.graph_cut),
        },
        "skipped": skipped,
        "counts": {
            "faces": mesh.faces.len(),
            "medial_spheres": base.spheres.len(),
            "graph_nodes": r.mat.graph.len(),
            "structured_spheres": r.mat.structured.spheres.len(),
            "structured_edges": r.mat.structured.edges.len(),
            "structured_faces": r.mat.structured.faces.len(),
            "joints": r.mat.joints.len(),
            "components": r.mat.components.len(),
            "grown_regions": r.mat.grown.regions.len(),
            "swallowed": r.mat.grown.swallowed,
            "negligible_merged": r.mat.grown.negligible_merged,
            "regions": r.mat.region_count(),
            "face_labels_used": used.len(),
        },
        "graph_cut": r.transfer.as_ref().map(|t| json!({
            "initial_energy": t.initial_energy,
            "energy": t.energy,
            "iterations": t.iterations,
        })),
        "timings": r.timings,
        "outputs": {
            "labels": path_str(&labels_path),
            "ply": path_str(&ply_path),
            "structured_mat": smat_path.as_deref().map(path_str),
        },
    });
    let report_path = out.join(format!("{}.report.json", job.stem));
    write_text(&report_path, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    Ok(report)
}

fn read_batch(path: &Path) -> Result<Vec<Job>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read batch list {}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut jobs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<PathBuf> = line.split_whitespace().map(|p| dir.join(p)).collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(CliError::Invalid(format!("batch line {}: expected `mesh mat [structured_mat]`", n + 1)));
        }
        jobs.push(Job { stem: stem_of(&parts[0]), mesh: parts[0].clone(), mat: parts[1].clone(), structured: parts.get(2).cloned() });
    }
    let mut stems: Vec<&str> = jobs.iter().map(|j| j.stem.as_str()).collect();
    stems.sort_unstable();
    if let Some(w) = stems.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::Invalid(format!("batch has two shapes named {:?}", w[0])));
    }
    Ok(jobs)
}

pub fn segment(a: &SegmentArgs) -> Result<u8, CliError> {
    let config = a.params.resolve()?;
    std::fs::create_dir_all(&a.out).map_err(|source| CliError::Output { path: a.out.clone(), source })?;
    let Some(batch) = &a.batch else {
        let mesh = a.mesh.clone().expect("clap requires --mesh");
        let job = Job {
            stem: a.name.clone().unwrap_or_else(|| stem_of(&mesh)),
            mesh,
            mat: a.mat.clone().expect("clap requires --mat"),
            structured: a.structured_mat.clone(),
        };
        print_json(&run_job(&job, &config, &a.out, a.emit_structured_mat)?);
        return Ok(0);
    };

    let jobs = read_batch(batch)?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Value, CliError>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..a.jobs.clamp(1, jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let r = std::panic::catch_unwind(|| run_job(job, &config, &a.out, a.emit_structured_mat))
                    .unwrap_or_else(|_| Err(CliError::Invariant(format!("{}: pipeline panicked", job.stem))));
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let mut code = 0;
    let mut summary = Vec::new();
    for (job, r) in jobs.iter().zip(results.into_inner().unwrap()) {
        let entry = match r.expect("every job ran") {
            Ok(report) => json!({ "shape": job.stem, "exit": 0, "regions": report["counts"]["regions"] }),
            Err(e) => {
                eprintln!("segmat: {}: {e}", job.stem);
                code = code.max(e.exit_code());
                json!({ "shape": job.stem, "exit": e.exit_code(), "error": e.to_string() })
            }
        };
        summary.push(entry);
    }
    print_json(&json!({ "command": "segment", "batch": path_str(batch), "shapes": summary }));
    Ok(code)
}

pub fn simplify(a: &SimplifyArgs) -> Result<u8, CliError> {
    let config = a.params.resolve()?;
    let params = config.params()?;
    check_exists(&a.mat)?;
    let mm = input(&a.mat, io::load_medial_mesh(&a.mat))?;
    let r = simplify_with_trace(&mm, &params.simplify).map_err(|e| CliError::Invalid(e.to_string()))?;
    output(&a.out, io::save_medial_mesh(&r.mesh, &a.out))?;
    let count = |m: &MedialMesh| json!({ "spheres": m.spheres.len(), "edges": m.edges.len(), "faces": m.faces.len() });
    print_json(&json!({
        "command": "simplify",
        "version": env!("CARGO_PKG_VERSION"),
        "input": path_str(&a.mat),
        "output": path_str(&a.out),
        "parameters": config,
        "before": count(&mm),
        "after": count(&r.mesh),
        "collapses": r.trace.len(),
        "pruned": r.pruned,
        "error_bound": r.bound,
    }));
    Ok(0)
}

/// Raw value with its ×1000 companion.
fn scaled(x: f64) -> Value {
    json!({ "raw": x, "scaled": x * 1000.0 })
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs {
        sum += x;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn ground_truth_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !path.is_dir() {
        check_exists(path)?;
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Invalid(format!("{}: no ground-truth files", path.display())));
    }
    Ok(files)
}

pub fn eval(a: &EvalArgs) -> Result<u8, CliError> {
    check_exists(&a.mesh)?;
    check_exists(&a.pred)?;
    let mesh = input(&a.mesh, io::load_surface(&a.mesh))?;
    let n = mesh.faces.len();
    let pred = input(&a.pred, io::load_labels(&a.pred, Some(n)))?;
    let gts = ground_truth_files(&a.gt)?;
    let mut reports: Vec<MetricReport> = Vec::new();
    for gt in &gts {
        let labels = input(gt, io::load_labels(gt, Some(n)))?;
        reports.push(evaluate(&mesh, &pred, &labels).map_err(|e| CliError::Invalid(e.to_string()))?);
    }
    let avg = |f: fn(&MetricReport) -> f64| mean(reports.iter().map(f)).expect("at least one ground truth");
    let rows: [(&str, Option<f64>); 7] = [
        ("rand_index", Some(avg(|r| r.rand_index))),
        ("cut_discrepancy", mean(reports.iter().filter_map(|r| r.cut_discrepancy))),
        ("hamming", Some(avg(|r| r.hamming.distance))),
        ("hamming_missing_rate", Some(avg(|r| r.hamming.missing_rate))),
        ("hamming_false_alarm_rate", Some(avg(|r| r.hamming.false_alarm_rate))),
        ("gce", Some(avg(|r| r.consistency.gce))),
        ("lce", Some(avg(|r| r.consistency.lce))),
    ];
    match a.report {
        ReportFormat::Csv => {
            println!("metric,raw,scaled");
            for (name, v) in rows {
                match v {
                    Some(x) => println!("{name},{x},{}", x * 1000.0),
                    None => println!("{name},,"),
                }
            }
        }
        ReportFormat::Json => {
            let metrics: serde_json::Map<String, Value> =
                rows.iter().map(|(name, v)| (name.to_string(), v.map_or(Value::Null, scaled))).collect();
            print_json(&json!({
                "command": "eval",
                "mesh": path_str(&a.mesh),
                "pred": path_str(&a.pred),
                "ground_truths": gts.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
                "metrics": metrics,
                "per_ground_truth": reports,
            }));
        }
    }
    Ok(0)
}

pub fn abstract_boxes(a: &AbstractArgs) -> Result<u8, CliError> {
    check_exists(&a.mesh)?;
    check_exists(&a.labels)?;
    if a.resolution == 0 || a.samples == 0 {
        return Err(CliError::Invalid("resolution and samples must be positive".into()));
    }
    let mesh = input(&a.mesh, io::load_surface(&a.mesh))?;
    let labels = input(&a.labels, io::load_labels(&a.labels, Some(mesh.faces.len())))?;
    let boxes = part_boxes(&mesh, &labels);
    let score = abstraction_error_with(&mesh, &boxes, a.resolution, a.samples, a.seed);
    if let Some(path) = &a.boxes_out {
        let (mut vertices, mut faces) = (Vec::new(), Vec::new());
        for b in &boxes {
            let m = b.to_mesh();
            let base = vertices.len();
            vertices.extend(m.vertices);
            faces.extend(m.faces.iter().map(|f| f.map(|v| v + base)));
        }
        output(path, io::save_surface(&SurfaceMesh::new(vertices, faces), path))?;
    }
    let boxes_json: Vec<Value> = boxes
        .iter()
        .map(|b| json!({ "center": b.center, "axes": b.axes, "half_extents": b.half_extents, "volume": b.volume() }))
        .collect();
    print_json(&json!({
        "command": "abstract",
        "mesh": path_str(&a.mesh),
        "labels": path_str(&a.labels),
        "boxes": boxes_json,
        "iou": score.iou,
        "chamfer": score.chamfer,
        "resolution": a.resolution,
        "samples": a.samples,
        "seed": score.seed,
    }));
    Ok(0)
}

pub fn cloud(a: &CloudArgs) -> Result<u8, CliError> {
    let config = a.params.resolve()?;
    let params = config.params()?;
    check_exists(&a.skeleton)?;
    check_exists(&a.cloud)?;
    let points = input(&a.skeleton, io::load_xyz(&a.skeleton))?;
    let raw = input(&a.cloud, io::load_xyz(&a.cloud))?;
    let sc = SkeletonCloud::build(points, &raw, config.usize("knn")).map_err(|e| CliError::Invalid(e.to_string()))?;
    let s = segment_skeleton(&sc, &params.growing, params.merging.then_some(params.merge_tau));
    if s.labels.iter().any(|&l| l >= s.regions) {
        return Err(CliError::Invariant("skeleton label out of range".into()));
    }
    output(&a.out, io::save_labels(&s.labels, &a.out))?;
    if let Some(path) = &a.cloud_labels {
        output(path, io::save_labels(&transfer_to_cloud(&sc, &s.labels, &raw), path))?;
    }
    print_json(&json!({
        "command": "cloud",
        "version": env!("CARGO_PKG_VERSION"),
        "skeleton": path_str(&a.skeleton),
        "cloud": path_str(&a.cloud),
        "parameters": config,
        "counts": {
            "skeleton_points": sc.points.len(),
            "cloud_points": raw.len(),
            "components": sc.component_count(),
            "grown_regions": s.grown_regions,
            "regions": s.regions,
        },
        "outputs": {
            "labels": path_str(&a.out),
            "cloud_labels": a.cloud_labels.as_deref().map(path_str),
        },
    }));
    Ok(0)
}
