//! Text formats: OFF/OBJ surfaces, `.ma` medial meshes, per-face label
//! files, colored ASCII PLY and XYZ point clouds.
//!
//! The `.ma` format holds one element per line with zero-based indices:
//!
//! ```text
//! # optional comment
//! v x y z r
//! e i j
//! f i j k
//! ```
//!
//! A leading line of three integers (`#vertices #edges #faces`, as written by
//! Q-MAT style tools) is accepted and checked when present.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{Sphere, Vec3};
use crate::mesh::{MedialMesh, SurfaceMesh};

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("negative radius at line {line}")]
    NegativeRadius { line: usize },
    #[error("expected {expected} labels, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("unsupported file extension {0:?}")]
    UnsupportedFormat(String),
    #[error("invalid mesh: {0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, MeshIoError>;

fn parse_err(line: usize, msg: impl Into<String>) -> MeshIoError {
    MeshIoError::Parse { line, msg: msg.into() }
}

/// Formats `x` with 9 significant digits, like C's `%.9g`.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        s
    }
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

/// Loads an `.off` or `.obj` surface mesh; polygons are fan-triangulated.
pub fn load_surface(path: impl AsRef<Path>) -> Result<SurfaceMesh> {
    let path = path.as_ref();
    let ext = extension(path);
    let text = fs::read_to_string(path)?;
    match ext.as_str() {
        "off" => parse_off(&text),
        "obj" => parse_obj(&text),
        _ => Err(MeshIoError::UnsupportedFormat(ext)),
    }
}

pub fn save_surface(mesh: &SurfaceMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = match extension(path).as_str() {
        "off" => write_off(mesh),
        "obj" => write_obj(mesh),
        other => return Err(MeshIoError::UnsupportedFormat(other.to_string())),
    };
    fs::write(path, text)?;
    Ok(())
}

fn fan(poly: &[usize]) -> impl Iterator<Item = [usize; 3]> + '_ {
    (1..poly.len().saturating_sub(1)).map(move |k| [poly[0], poly[k], poly[k + 1]])
}

fn finish_surface(mesh: SurfaceMesh) -> Result<SurfaceMesh> {
    mesh.validate().map_err(MeshIoError::Invalid)?;
    Ok(mesh)
}

pub fn parse_off(text: &str) -> Result<SurfaceMesh> {
    // Token stream of (line number, token) with comments removed.
    let mut tokens = text.lines().enumerate().flat_map(|(i, l)| {
        let content = l.split('#').next().unwrap_or("");
        content.split_whitespace().map(move |t| (i + 1, t))
    });
    let (line, head) = tokens.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let first_count = if head == "OFF" {
        None
    } else if let Some(rest) = head.strip_prefix("OFF") {
        Some((line, rest))
    } else {
        return Err(parse_err(line, "missing OFF header"));
    };
    let mut next = |what: &str| -> Result<(usize, &str)> {
        tokens.next().ok_or_else(|| parse_err(0, format!("unexpected end of file reading {what}")))
    };
    let (l, nv) = match first_count {
        Some(t) => t,
        None => next("vertex count")?,
    };
    let nv: usize = nv.parse().map_err(|_| parse_err(l, "bad vertex count"))?;
    let (l, nf) = next("face count")?;
    let nf: usize = nf.parse().map_err(|_| parse_err(l, "bad face count"))?;
    let (l, ne) = next("edge count")?;
    let _: usize = ne.parse().map_err(|_| parse_err(l, "bad edge count"))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut c = [0.0; 3];
        for v in &mut c {
            let (l, t) = next("vertex coordinate")?;
            *v = t.parse().map_err(|_| parse_err(l, format!("bad coordinate {t:?}")))?;
        }
        vertices.push(Vec3::new(c[0], c[1], c[2]));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, t) = next("face arity")?;
        let k: usize = t.parse().map_err(|_| parse_err(l, "bad face arity"))?;
        if k < 3 {
            return Err(parse_err(l, "face with fewer than 3 vertices"));
        }
        let mut poly = Vec::with_capacity(k);
        for _ in 0..k {
            let (l, t) = next("face index")?;
            let idx: usize = t.parse().map_err(|_| parse_err(l, format!("bad index {t:?}")))?;
            if idx >= nv {
                return Err(parse_err(l, format!("vertex index {idx} out of range")));
            }
            poly.push(idx);
        }
        faces.extend(fan(&poly));
    }
    finish_surface(SurfaceMesh::new(vertices, faces))
}

pub fn parse_obj(text: &str) -> Result<SurfaceMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut parts = content.split_whitespace();
        match parts.next() {
            Some("v") => {
                let c: Vec<f64> = parts
                    .take(3)
                    .map(|t| t.parse().map_err(|_| parse_err(line, format!("bad coordinate {t:?}"))))
                    .collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(parse_err(line, "vertex needs 3 coordinates"));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for t in parts {
                    let idx_str = t.split('/').next().unwrap_or("");
                    let idx: i64 =
                        idx_str.parse().map_err(|_| parse_err(line, format!("bad index {t:?}")))?;
                    let n = vertices.len() as i64;
                    let resolved = match idx {
                        0 => return Err(parse_err(line, "OBJ indices are 1-based; found 0")),
                        k if k > 0 => k - 1,
                        k => n + k,
                    };
                    if resolved < 0 || resolved >= n {
                        return Err(parse_err(line, format!("vertex index {idx} out of range")));
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(parse_err(line, "face with fewer than 3 vertices"));
                }
                faces.extend(fan(&poly));
            }
            _ => {}
        }
    }
    finish_surface(SurfaceMesh::new(vertices, faces))
}

pub fn write_off(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} 0", mesh.vertices.len(), mesh.faces.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", fmt_g9(v.x), fmt_g9(v.y), fmt_g9(v.z));
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn write_obj(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", fmt_g9(v.x), fmt_g9(v.y), fmt_g9(v.z));
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn load_medial_mesh(path: impl AsRef<Path>) -> Result<MedialMesh> {
    parse_ma(&fs::read_to_string(path)?)
}

pub fn save_medial_mesh(mm: &MedialMesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_ma(mm))?;
    Ok(())
}

pub fn parse_ma(text: &str) -> Result<MedialMesh> {
    let mut spheres = Vec::new();
    let mut edges = Vec::new();
    let mut faces = Vec::new();
    let mut declared: Option<(usize, [usize; 3])> = None;
    let mut seen_element = false;

    fn nums<T: std::str::FromStr>(parts: &[&str], n: usize, line: usize) -> Result<Vec<T>> {
        if parts.len() != n {
            return Err(parse_err(line, format!("expected {n} values, found {}", parts.len())));
        }
        parts
            .iter()
            .map(|t| t.parse().map_err(|_| parse_err(line, format!("bad value {t:?}"))))
            .collect()
    }

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let parts: Vec<&str> = content.split_whitespace().collect();
        let Some((&tag, rest)) = parts.split_first() else { continue };
        match tag {
            "v" => {
                let c: Vec<f64> = nums(rest, 4, line)?;
                if c[3] < 0.0 {
                    return Err(MeshIoError::NegativeRadius { line });
                }
                spheres.push(Sphere::new(Vec3::new(c[0], c[1], c[2]), c[3]));
            }
            "e" => {
                let c: Vec<usize> = nums(rest, 2, line)?;
                edges.push([c[0], c[1]]);
            }
            "f" => {
                let c: Vec<usize> = nums(rest, 3, line)?;
                faces.push([c[0], c[1], c[2]]);
            }
            _ if !seen_element && declared.is_none() => {
                let c: Vec<usize> = nums(&parts, 3, line)?;
                declared = Some((line, [c[0], c[1], c[2]]));
                continue;
            }
            other => return Err(parse_err(line, format!("unknown record {other:?}"))),
        }
        seen_element = true;
    }
    if let Some((line, [nv, ne, nf])) = declared {
        if nv != spheres.len() || ne != edges.len() || nf != faces.len() {
            return Err(parse_err(
                line,
                format!(
                    "header declares ({nv}, {ne}, {nf}) elements, file holds ({}, {}, {})",
                    spheres.len(),
                    edges.len(),
                    faces.len()
                ),
            ));
        }
    }
    let n = spheres.len();
    let out_of_range = edges.iter().flatten().chain(faces.iter().flatten()).any(|&v| v >= n);
    if out_of_range {
        return Err(MeshIoError::Invalid("element index out of range".into()));
    }
    let mut listed: Vec<[usize; 2]> = edges.iter().map(|&[a, b]| [a.min(b), a.max(b)]).collect();
    listed.sort_unstable();
    if listed.windows(2).any(|w| w[0] == w[1]) {
        return Err(MeshIoError::Invalid("duplicate edge".into()));
    }
    let face_count = faces.len();
    let mm = MedialMesh::new(spheres, edges, faces);
    if mm.faces.len() != face_count {
        return Err(MeshIoError::Invalid("duplicate face".into()));
    }
    mm.validate().map_err(MeshIoError::Invalid)?;
    Ok(mm)
}

pub fn write_ma(mm: &MedialMesh) -> String {
    let mut s = String::new();
    for sp in &mm.spheres {
        let c = sp.center;
        let _ = writeln!(s, "v {} {} {} {}", fmt_g9(c.x), fmt_g9(c.y), fmt_g9(c.z), fmt_g9(sp.radius));
    }
    for e in &mm.edges {
        let _ = writeln!(s, "e {} {}", e[0], e[1]);
    }
    for f in &mm.faces {
        let _ = writeln!(s, "f {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn save_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_labels(labels))?;
    Ok(())
}

pub fn write_labels(labels: &[usize]) -> String {
    let mut s = String::with_capacity(labels.len() * 3);
    for l in labels {
        let _ = writeln!(s, "{l}");
    }
    s
}

/// Loads one label per line. When `expected` is given the count must match.
pub fn load_labels(path: impl AsRef<Path>, expected: Option<usize>) -> Result<Vec<usize>> {
    parse_labels(&fs::read_to_string(path)?, expected)
}

pub fn parse_labels(text: &str, expected: Option<usize>) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        labels.push(t.parse().map_err(|_| parse_err(i + 1, format!("bad label {t:?}")))?);
    }
    if let Some(n) = expected {
        if n != labels.len() {
            return Err(MeshIoError::LengthMismatch { expected: n, found: labels.len() });
        }
    }
    Ok(labels)
}

/// Fixed 32-entry palette used for colored output; label `k` maps to
/// `PALETTE[k % 32]`.
pub const PALETTE: [[u8; 3]; 32] = [
    [230, 25, 75], [60, 180, 75], [255, 225, 25], [0, 130, 200],
    [245, 130, 48], [145, 30, 180], [70, 240, 240], [240, 50, 230],
    [210, 245, 60], [250, 190, 212], [0, 128, 128], [220, 190, 255],
    [170, 110, 40], [255, 250, 200], [128, 0, 0], [170, 255, 195],
    [128, 128, 0], [255, 215, 180], [0, 0, 128], [128, 128, 128],
    [31, 119, 180], [255, 127, 14], [44, 160, 44], [214, 39, 40],
    [148, 103, 189], [140, 86, 75], [227, 119, 194], [188, 189, 34],
    [23, 190, 207], [174, 199, 232], [255, 152, 150], [197, 176, 213],
];

pub fn label_color(label: usize) -> [u8; 3] {
    PALETTE[label % PALETTE.len()]
}

pub fn write_colored_ply(mesh: &SurfaceMesh, labels: &[usize]) -> Result<String> {
    if labels.len() != mesh.faces.len() {
        return Err(MeshIoError::LengthMismatch { expected: mesh.faces.len(), found: labels.len() });
    }
    let mut s = String::new();
    let _ = write!(
        s,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         element face {}\nproperty list uchar int vertex_indices\nproperty uchar red\nproperty uchar green\n\
         property uchar blue\nend_header\n",
        mesh.vertices.len(),
        mesh.faces.len()
    );
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", fmt_g9(v.x), fmt_g9(v.y), fmt_g9(v.z));
    }
    for (f, &l) in mesh.faces.iter().zip(labels) {
        let [r, g, b] = label_color(l);
        let _ = writeln!(s, "3 {} {} {} {r} {g} {b}", f[0], f[1], f[2]);
    }
    Ok(s)
}

pub fn save_colored_mesh(mesh: &SurfaceMesh, labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_colored_ply(mesh, labels)?)?;
    Ok(())
}

/// Loads `x y z` points, one per line. Extra columns are ignored.
pub fn load_xyz(path: impl AsRef<Path>) -> Result<Vec<Vec3>> {
    parse_xyz(&fs::read_to_string(path)?)
}

pub fn parse_xyz(text: &str) -> Result<Vec<Vec3>> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let parts: Vec<&str> = content.split_whitespace().collect();
        if parts.is_empty() {
            continue;
        }
        if parts.len() < 3 {
            return Err(parse_err(i + 1, "expected x y z"));
        }
        let mut c = [0.0; 3];
        for (v, t) in c.iter_mut().zip(&parts) {
            *v = t.parse().map_err(|_| parse_err(i + 1, format!("bad coordinate {t:?}")))?;
        }
        points.push(Vec3::new(c[0], c[1], c[2]));
    }
    Ok(points)
}

pub fn write_xyz(points: &[Vec3]) -> String {
    let mut s = String::new();
    for p in points {
        let _ = writeln!(s, "{} {} {}", fmt_g9(p.x), fmt_g9(p.y), fmt_g9(p.z));
    }
    s
}
