//! Box abstraction of segmented shapes: one minimal oriented bounding box
//! per part, and the volumetric and surface error of the box union.

use nalgebra::{Matrix3, SymmetricEigen, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{any_perpendicular, Vec3};
use crate::mesh::SurfaceMesh;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractionError {
    #[error("no points to bound")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrientedBox {
    pub center: Vec3,
    /// Right-handed orthonormal axes.
    pub axes: [Vec3; 3],
    pub half_extents: [f64; 3],
}

impl OrientedBox {
    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.iter().product::<f64>()
    }

    pub fn local(&self, p: &Vec3) -> Vec3 {
        let d = p - self.center;
        Vec3::new(d.dot(&self.axes[0]), d.dot(&self.axes[1]), d.dot(&self.axes[2]))
    }

    pub fn contains(&self, p: &Vec3, slack: f64) -> bool {
        let l = self.local(p);
        (0..3).all(|k| l[k].abs() <= self.half_extents[k] + slack)
    }

    /// The 8 corners, bit `k` of the index selecting the sign along axis `k`.
    pub fn corners(&self) -> [Vec3; 8] {
        std::array::from_fn(|i| {
            let mut p = self.center;
            for k in 0..3 {
                let s = if i >> k & 1 == 1 { 1.0 } else { -1.0 };
                p += self.axes[k] * (s * self.half_extents[k]);
            }
            p
        })
    }

    /// Closed triangle mesh of the box surface, outward oriented.
    pub fn to_mesh(&self) -> SurfaceMesh {
        let quads = [[0, 4, 6, 2], [1, 3, 7, 5], [0, 1, 5, 4], [2, 6, 7, 3], [0, 2, 3, 1], [4, 5, 7, 6]];
        let faces = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
        SurfaceMesh::new(self.corners().to_vec(), faces)
    }
}

fn cross2(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex hull by the monotone chain, counter-clockwise.
fn convex_hull(points: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut p: Vec<Vector2<f64>> = points.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vector2<f64>>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for q in iter {
            while hull.len() >= start + 2 && cross2(&hull[hull.len() - 2], &hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(*q);
        }
        hull.pop();
    }
    hull
}

/// Minimum-area enclosing rectangle direction over the hull edge
/// directions; returns the unit direction of its first side.
fn min_area_direction(hull: &[Vector2<f64>]) -> Vector2<f64> {
    if hull.len() < 2 {
        return Vector2::x();
    }
    let mut best = (f64::INFINITY, Vector2::x());
    for k in 0..hull.len() {
        let e = hull[(k + 1) % hull.len()] - hull[k];
        let n = e.norm();
        if n == 0.0 {
            continue;
        }
        let d = e / n;
        let o = Vector2::new(-d.y, d.x);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in hull {
            let (u, v) = (p.dot(&d), p.dot(&o));
            lo = [lo[0].min(u), lo[1].min(v)];
            hi = [hi[0].max(u), hi[1].max(v)];
        }
        let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        if area < best.0 {
            best = (area, d);
        }
    }
    best.1
}

fn fit_axes(points: &[Vec3], axes: [Vec3; 3]) -> OrientedBox {
    let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
    for p in points {
        let l = Vec3::new(p.dot(&axes[0]), p.dot(&axes[1]), p.dot(&axes[2]));
        lo = lo.inf(&l);
        hi = hi.sup(&l);
    }
    let mid = (lo + hi) * 0.5;
    OrientedBox {
        center: axes[0] * mid.x + axes[1] * mid.y + axes[2] * mid.z,
        axes,
        half_extents: [(hi.x - lo.x) * 0.5, (hi.y - lo.y) * 0.5, (hi.z - lo.z) * 0.5],
    }
}

/// Tightest box having `u` as one axis: the other two come from the
/// minimum-area rectangle of the points projected along `u`.
fn box_about_axis(points: &[Vec3], u: &Vec3) -> OrientedBox {
    let u = u.normalize();
    let e1 = any_perpendicular(&u);
    let e2 = u.cross(&e1);
    let proj: Vec<Vector2<f64>> = points.iter().map(|p| Vector2::new(p.dot(&e1), p.dot(&e2))).collect();
    let d = min_area_direction(&convex_hull(&proj));
    let a0 = e1 * d.x + e2 * d.y;
    let a1 = u.cross(&a0);
    fit_axes(points, [a0, a1, u])
}

/// Approximate minimal oriented bounding box: the smallest of the boxes
/// built around the principal axes and the coordinate axes, each with an
/// exact minimum-area cross-section.
pub fn mobb(points: &[Vec3]) -> Result<OrientedBox, AbstractionError> {
    if points.is_empty() {
        return Err(AbstractionError::EmptyInput);
    }
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vec3>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / n);
    let mut candidates: Vec<Vec3> = (0..3).map(|k| eig.eigenvectors.column(k).into_owned()).collect();
    candidates.extend([Vec3::x(), Vec3::y(), Vec3::z()]);
    let mut best = fit_axes(points, [Vec3::x(), Vec3::y(), Vec3::z()]);
    for u in candidates {
        if !(u.norm() > 0.5) {
            continue;
        }
        let b = box_about_axis(points, &u);
        if b.volume() < best.volume() {
            best = b;
        }
    }
    Ok(best)
}

/// One box per label over the vertices of the faces carrying it.
pub fn part_boxes(mesh: &SurfaceMesh, labels: &[usize]) -> Vec<OrientedBox> {
    let count = labels.iter().max().map_or(0, |m| m + 1);
    (0..count)
        .filter_map(|l| {
            let mut ids: Vec<usize> =
                mesh.faces.iter().zip(labels).filter(|(_, &x)| x == l).flat_map(|(f, _)| *f).collect();
            ids.sort_unstable();
            ids.dedup();
            let pts: Vec<Vec3> = ids.into_iter().map(|v| mesh.vertices[v]).collect();
            mobb(&pts).ok()
        })
        .collect()
}

pub const VOXEL_RESOLUTION: usize = 64;
pub const SAMPLE_COUNT: usize = 10_000;
pub const SAMPLING_SEED: u64 = 0x5e6_3a7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbstractionScore {
    pub iou: f64,
    /// Symmetric chamfer distance over the mesh bounding-box diagonal.
    pub chamfer: f64,
    pub seed: u64,
}

/// Inside test for voxel centers by ray parity along +z, one ray per
/// column.
fn voxelize_mesh(mesh: &SurfaceMesh, lo: &Vec3, step: &Vec3, res: usize) -> Vec<bool> {
    let mut inside = vec![false; res * res * res];
    // A tiny fixed offset keeps rays off edges of axis-aligned meshes.
    let jitter = Vec3::new(1.234_567e-7, 2.345_678e-7, 0.0);
    let mut hits: Vec<Vec<f64>> = vec![Vec::new(); res * res];
    for f in 0..mesh.faces.len() {
        let [a, b, c] = mesh.corners(f);
        let (tlo, thi) = (a.inf(&b).inf(&c), a.sup(&b).sup(&c));
        let i0 = (((tlo.x - lo.x) / step.x - 0.5).floor().max(0.0)) as usize;
        let i1 = ((((thi.x - lo.x) / step.x - 0.5).ceil()) as isize).clamp(0, res as isize - 1) as usize;
        let j0 = (((tlo.y - lo.y) / step.y - 0.5).floor().max(0.0)) as usize;
        let j1 = ((((thi.y - lo.y) / step.y - 0.5).ceil()) as isize).clamp(0, res as isize - 1) as usize;
        for i in i0..=i1.min(res - 1) {
            for j in j0..=j1.min(res - 1) {
                let x = lo.x + (i as f64 + 0.5) * step.x + jitter.x * step.x;
                let y = lo.y + (j as f64 + 0.5) * step.y + jitter.y * step.y;
                // Barycentric test of (x, y) against the projected triangle.
                let d = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
                if d == 0.0 {
                    continue;
                }
                let u = ((x - a.x) * (c.y - a.y) - (c.x - a.x) * (y - a.y)) / d;
                let v = ((b.x - a.x) * (y - a.y) - (x - a.x) * (b.y - a.y)) / d;
                if u >= 0.0 && v >= 0.0 && u + v <= 1.0 {
                    hits[i * res + j].push(a.z + u * (b.z - a.z) + v * (c.z - a.z));
                }
            }
        }
    }
    for i in 0..res {
        for j in 0..res {
            let h = &mut hits[i * res + j];
            h.sort_by(|a, b| a.total_cmp(b));
            for pair in h.chunks_exact(2) {
                for k in 0..res {
                    let z = lo.z + (k as f64 + 0.5) * step.z;
                    if z > pair[0] && z < pair[1] {
                        inside[(i * res + j) * res + k] = true;
                    }
                }
            }
        }
    }
    inside
}

fn sample_triangles(tris: &[[Vec3; 3]], count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let mut cdf = Vec::with_capacity(tris.len());
    let mut acc = 0.0;
    for [a, b, c] in tris {
        acc += 0.5 * (b - a).cross(&(c - a)).norm();
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let x = rng.gen::<f64>() * acc;
            let k = cdf.partition_point(|&c| c < x).min(tris.len() - 1);
            let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            let [a, b, c] = tris[k];
            a + (b - a) * u + (c - a) * v
        })
        .collect()
}

fn mean_nearest(from: &[Vec3], to: &[Vec3]) -> f64 {
    from.iter()
        .map(|p| to.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min).sqrt())
        .sum::<f64>()
        / from.len() as f64
}

/// Voxel IoU between the mesh interior and the union of boxes, and the
/// symmetric chamfer distance between surface samples of both.
pub fn abstraction_error(mesh: &SurfaceMesh, boxes: &[OrientedBox]) -> AbstractionScore {
    abstraction_error_with(mesh, boxes, VOXEL_RESOLUTION, SAMPLE_COUNT, SAMPLING_SEED)
}

pub fn abstraction_error_with(
    mesh: &SurfaceMesh,
    boxes: &[OrientedBox],
    res: usize,
    samples: usize,
    seed: u64,
) -> AbstractionScore {
    let Some((mut lo, mut hi)) = mesh.bbox() else {
        return AbstractionScore { iou: 0.0, chamfer: f64::INFINITY, seed };
    };
    let diag = (hi - lo).norm();
    for b in boxes {
        for c in b.corners() {
            lo = lo.inf(&c);
            hi = hi.sup(&c);
        }
    }
    let pad = (hi - lo) * 1e-3;
    let (lo, hi) = (lo - pad, hi + pad);
    let step = (hi - lo) / res as f64;
    let inside = voxelize_mesh(mesh, &lo, &step, res);
    let (mut inter, mut union) = (0usize, 0usize);
    for i in 0..res {
        for j in 0..res {
            for k in 0..res {
                let p = lo + Vec3::new((i as f64 + 0.5) * step.x, (j as f64 + 0.5) * step.y, (k as f64 + 0.5) * step.z);
                let m = inside[(i * res + j) * res + k];
                let b = boxes.iter().any(|bx| bx.contains(&p, 0.0));
                inter += (m && b) as usize;
                union += (m || b) as usize;
            }
        }
    }
    let iou = if union == 0 { 0.0 } else { inter as f64 / union as f64 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mesh_tris: Vec<[Vec3; 3]> = (0..mesh.faces.len()).map(|f| mesh.corners(f)).collect();
    let box_tris: Vec<[Vec3; 3]> = boxes
        .iter()
        .flat_map(|b| {
            let m = b.to_mesh();
            (0..m.faces.len()).map(|f| m.corners(f)).collect::<Vec<_>>()
        })
        .collect();
    let pm = sample_triangles(&mesh_tris, samples, &mut rng);
    let pb = sample_triangles(&box_tris, samples, &mut rng);
    let chamfer = if pm.is_empty() || pb.is_empty() || diag == 0.0 {
        f64::INFINITY
    } else {
        0.5 * (mean_nearest(&pm, &pb) + mean_nearest(&pb, &pm)) / diag
    };
    AbstractionScore { iou, chamfer, seed }
}
