//! Procedural shapes with known part structure, used by the test suites,
//! benchmarks and demos.
//!
//! Tube shapes are surfaces of revolution around the x axis made of
//! constant-radius parts joined by flat shoulders. Their medial mesh is a
//! narrow strip of slabs along the axis; each part's strip stops one radius
//! short of a cap or of a shoulder down to a thinner part, which is where
//! the medial axis of such a shape branches off towards the rims.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Sphere, Vec3};
use crate::mesh::{MedialMesh, SurfaceMesh};

/// Sphere index ranges of the dumbbell: blob, neck, blob.
pub const DUMBBELL_PARTS: [std::ops::Range<usize>; 3] = [0..61, 61..141, 141..201];

/// A curve-only MAT of 201 spheres (200 edge nodes): two radius-4 blobs
/// joined by a radius-1 neck. Node `k` is the edge `(k, k + 1)`; the radius
/// jumps sit on nodes 60 and 140.
pub fn dumbbell_mat() -> MedialMesh {
    let mut spheres = Vec::with_capacity(201);
    let mut x = 0.0;
    for i in 0..201 {
        let r = if DUMBBELL_PARTS[1].contains(&i) { 1.0 } else { 4.0 };
        if i > 0 {
            // The blob ends sit far enough from the neck that the blob
            // spheres do not reach its segments.
            x += if i == 61 || i == 141 { 4.5 } else if r == 1.0 { 0.5 } else { 1.0 };
        }
        spheres.push(Sphere::new(Vec3::new(x, 0.0, 0.0), r));
    }
    let edges = (0..200).map(|i| [i, i + 1]).collect();
    MedialMesh::new(spheres, edges, vec![])
}

/// Appends `count` short branches of up to three edges, each inside a blob
/// sphere it starts from, the way boundary noise sprouts medial spikes.
/// Anchors are spread over the sphere ranges in `anchors`.
pub fn add_spikes(mm: &MedialMesh, anchors: &[usize], count: usize, seed: u64) -> MedialMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = mm.clone();
    for k in 0..count {
        let a = anchors[k * anchors.len() / count.max(1)];
        let host = mm.spheres[a];
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        let tilt = rng.gen_range(-0.5..0.5f64);
        let dir = Vec3::new(tilt, phi.cos(), phi.sin()).normalize();
        let n = rng.gen_range(1..=3usize);
        let r = 0.08 * host.radius;
        let step = 0.2 * host.radius;
        let mut prev = a;
        for j in 1..=n {
            let idx = out.spheres.len();
            out.spheres.push(Sphere::new(host.center + dir * (step * j as f64), r));
            out.edges.push([prev, idx]);
            prev = idx;
        }
    }
    out.canonicalize();
    out
}

/// One constant-radius section of a tube shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubePart {
    pub length: f64,
    pub radius: f64,
    /// Ground-truth part label.
    pub label: usize,
}

#[derive(Debug, Clone)]
pub struct TubeShape {
    pub surface: SurfaceMesh,
    pub mat: MedialMesh,
    /// Ground-truth label per surface face.
    pub truth: Vec<usize>,
    /// Strip sphere indices of each part.
    pub part_spheres: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy)]
pub struct TubeOptions {
    /// Vertices per ring.
    pub around: usize,
    /// Target ring spacing along the axis.
    pub ring_step: f64,
    /// Target spacing of medial samples along the axis.
    pub mat_step: f64,
    /// Half-width of the medial strip.
    pub strip_half_width: f64,
    /// Relative perturbation of ring positions and phases.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for TubeOptions {
    fn default() -> Self {
        Self { around: 24, ring_step: 0.5, mat_step: 0.25, strip_half_width: 0.05, jitter: 0.0, seed: 7 }
    }
}

/// Evenly spaced samples covering `[a, b]` with spacing at most `step`.
fn samples(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step).ceil().max(1.0) as usize;
    (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
}

pub fn tube_shape(parts: &[TubePart], o: &TubeOptions) -> TubeShape {
    assert!(!parts.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let bounds: Vec<f64> = std::iter::once(0.0)
        .chain(parts.iter().scan(0.0, |x, p| {
            *x += p.length;
            Some(*x)
        }))
        .collect();

    // Surface: rings of constant radius per part; consecutive parts share
    // the shoulder plane where two rings of different radius meet.
    let m = o.around;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut truth = Vec::new();
    let mut rings: Vec<(usize, usize)> = Vec::new(); // (first vertex, part)
    for (k, p) in parts.iter().enumerate() {
        let xs = samples(bounds[k], bounds[k + 1], o.ring_step);
        let dx = xs[1] - xs[0];
        for (i, &x) in xs.iter().enumerate() {
            let interior = i > 0 && i + 1 < xs.len();
            if i == 0 && k > 0 && parts[k - 1].radius == p.radius {
                continue;
            }
            let x = if interior && o.jitter > 0.0 { x + rng.gen_range(-o.jitter..o.jitter) * dx } else { x };
            let phase = if o.jitter > 0.0 { rng.gen_range(-o.jitter..o.jitter) } else { 0.0 };
            let first = vertices.len();
            for j in 0..m {
                let t = (j as f64 + phase) * std::f64::consts::TAU / m as f64;
                vertices.push(Vec3::new(x, p.radius * t.cos(), p.radius * t.sin()));
            }
            rings.push((first, k));
        }
    }
    let ring_label = |a: usize, b: usize| {
        let (pa, pb) = (&parts[rings[a].1], &parts[rings[b].1]);
        if pa.radius >= pb.radius {
            pa.label
        } else {
            pb.label
        }
    };
    for r in 0..rings.len() - 1 {
        let (a, b) = (rings[r].0, rings[r + 1].0);
        let label = ring_label(r, r + 1);
        for j in 0..m {
            let j1 = (j + 1) % m;
            faces.push([a + j, a + j1, b + j]);
            faces.push([a + j1, b + j1, b + j]);
            truth.extend([label, label]);
        }
    }
    let start = vertices.len();
    vertices.push(Vec3::new(0.0, 0.0, 0.0));
    for j in 0..m {
        faces.push([start, rings[0].0 + (j + 1) % m, rings[0].0 + j]);
        truth.push(parts[0].label);
    }
    let end = vertices.len();
    vertices.push(Vec3::new(bounds[parts.len()], 0.0, 0.0));
    let last = rings[rings.len() - 1].0;
    for j in 0..m {
        faces.push([end, last + j, last + (j + 1) % m]);
        truth.push(parts[parts.len() - 1].label);
    }

    // Medial strip.
    let gap = 0.3 * o.mat_step;
    let mut spheres = Vec::new();
    let mut part_spheres = Vec::new();
    for (k, p) in parts.iter().enumerate() {
        let lo = if k == 0 {
            p.radius
        } else if parts[k - 1].radius > p.radius {
            gap
        } else {
            p.radius
        };
        let hi = if k + 1 == parts.len() {
            p.radius
        } else if parts[k + 1].radius > p.radius {
            gap
        } else {
            p.radius
        };
        let (a, b) = (bounds[k] + lo, bounds[k + 1] - hi);
        assert!(b > a, "part {k} is too short for its radius");
        let mut ids = Vec::new();
        for x in samples(a, b, o.mat_step) {
            for y in [o.strip_half_width, -o.strip_half_width] {
                ids.push(spheres.len());
                spheres.push(Sphere::new(Vec3::new(x, y, 0.0), p.radius));
            }
        }
        part_spheres.push(ids);
    }
    let mut mat_faces = Vec::new();
    let pairs = spheres.len() / 2;
    for k in 0..pairs - 1 {
        let (t0, b0, t1, b1) = (2 * k, 2 * k + 1, 2 * k + 2, 2 * k + 3);
        mat_faces.push([t0, b0, t1]);
        mat_faces.push([b0, b1, t1]);
    }
    let mat = MedialMesh::new(spheres, vec![], mat_faces);
    TubeShape { surface: SurfaceMesh::new(vertices, faces), mat, truth, part_spheres }
}

/// Medial spikes on the thickest parts of a tube shape.
pub fn tube_with_spikes(shape: &TubeShape, parts: &[TubePart], count: usize, seed: u64) -> MedialMesh {
    let r_max = parts.iter().map(|p| p.radius).fold(0.0, f64::max);
    let anchors: Vec<usize> = parts
        .iter()
        .enumerate()
        .filter(|(_, p)| p.radius == r_max)
        .flat_map(|(k, _)| {
            let ids = &shape.part_spheres[k];
            // Keep clear of the strip ends.
            ids[4.min(ids.len() / 2)..ids.len() - 4.min(ids.len() / 2)].to_vec()
        })
        .collect();
    add_spikes(&shape.mat, &anchors, count, seed)
}

/// Thick, neck, slightly thicker neck, thick: the shape used for ablation
/// and sensitivity checks. The two necks share a ground-truth label.
pub fn ablation_parts() -> Vec<TubePart> {
    vec![
        TubePart { length: 10.0, radius: 2.0, label: 0 },
        TubePart { length: 8.0, radius: 1.0, label: 1 },
        TubePart { length: 8.0, radius: 1.12, label: 1 },
        TubePart { length: 10.0, radius: 2.0, label: 2 },
    ]
}

pub fn ablation_shape() -> (TubeShape, MedialMesh) {
    let parts = ablation_parts();
    let shape = tube_shape(&parts, &TubeOptions { jitter: 0.35, ..Default::default() });
    let mat = tube_with_spikes(&shape, &parts, 6, 11);
    (shape, mat)
}

/// A three-part tube: thin handle, thick body, thin tip.
pub fn totem_parts() -> Vec<TubePart> {
    vec![
        TubePart { length: 8.0, radius: 0.8, label: 0 },
        TubePart { length: 12.0, radius: 2.5, label: 1 },
        TubePart { length: 6.0, radius: 1.2, label: 2 },
    ]
}

pub fn totem_shape() -> TubeShape {
    tube_shape(&totem_parts(), &TubeOptions { jitter: 0.2, seed: 3, ..Default::default() })
}

/// Shapes with ground truth used to check parameter stability and scale
/// invariance of the full pipeline.
pub fn fixture_suite() -> Vec<(&'static str, SurfaceMesh, MedialMesh, Vec<usize>)> {
    let (ablation, spiky) = ablation_shape();
    let totem = totem_shape();
    vec![
        ("ablation", ablation.surface, spiky, ablation.truth),
        ("totem", totem.surface, totem.mat, totem.truth),
    ]
}

/// About 20k surface faces and 5k medial faces.
pub fn performance_shape() -> TubeShape {
    let parts = vec![
        TubePart { length: 60.0, radius: 3.0, label: 0 },
        TubePart { length: 80.0, radius: 1.5, label: 1 },
        TubePart { length: 60.0, radius: 3.0, label: 2 },
        TubePart { length: 80.0, radius: 1.0, label: 3 },
        TubePart { length: 33.0, radius: 2.0, label: 4 },
    ];
    tube_shape(&parts, &TubeOptions { around: 40, ring_step: 1.25, mat_step: 0.118, jitter: 0.2, ..Default::default() })
}
