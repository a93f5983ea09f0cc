//! Surface meshes and medial meshes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::{bounds, triangle_normal, Sphere, Vec3};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub labels: Option<Vec<usize>>,
}

/// Two faces sharing the mesh edge `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualEdge {
    pub f: usize,
    pub g: usize,
    pub edge: [usize; 2],
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Self {
        Self { vertices, faces, labels: None }
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.vertices.len();
        for (i, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(format!("face {i} references a vertex out of range"));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(format!("face {i} repeats a vertex"));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.faces.len() {
                return Err(format!("{} labels for {} faces", labels.len(), self.faces.len()));
            }
        }
        Ok(())
    }

    pub fn corners(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.corners(f);
        (a + b + c) / 3.0
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.corners(f);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn face_normal(&self, f: usize) -> Option<Vec3> {
        let [a, b, c] = self.corners(f);
        triangle_normal(&a, &b, &c)
    }

    pub fn face_areas(&self) -> Vec<f64> {
        (0..self.faces.len()).map(|f| self.face_area(f)).collect()
    }

    pub fn bbox(&self) -> Option<(Vec3, Vec3)> {
        bounds(&self.vertices)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        self.bbox().map(|(lo, hi)| (hi - lo).norm()).unwrap_or(0.0)
    }

    /// Pairs of faces sharing an edge, sorted by `(f, g)`. Non-manifold edges
    /// connect every pair of their incident faces.
    pub fn dual_edges(&self) -> Vec<DualEdge> {
        let mut incident: Vec<([usize; 2], usize)> = Vec::with_capacity(self.faces.len() * 3);
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                incident.push(([a.min(b), a.max(b)], fi));
            }
        }
        incident.sort_unstable();
        let mut out = Vec::new();
        let mut i = 0;
        while i < incident.len() {
            let mut j = i;
            while j < incident.len() && incident[j].0 == incident[i].0 {
                j += 1;
            }
            for x in i..j {
                for y in (x + 1)..j {
                    let (f, g) = (incident[x].1, incident[y].1);
                    if f != g {
                        out.push(DualEdge { f: f.min(g), g: f.max(g), edge: incident[i].0 });
                    }
                }
            }
            i = j;
        }
        out.sort_by_key(|d| (d.f, d.g, d.edge));
        out.dedup_by_key(|d| (d.f, d.g));
        out
    }

    pub fn scaled(&self, s: f64) -> SurfaceMesh {
        SurfaceMesh {
            vertices: self.vertices.iter().map(|v| v * s).collect(),
            faces: self.faces.clone(),
            labels: self.labels.clone(),
        }
    }
}

/// A triangle/edge complex whose vertices are medial spheres.
///
/// In canonical form `edges` holds every edge exactly once as an ascending
/// pair, sorted, including the edges of every face.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MedialMesh {
    pub spheres: Vec<Sphere>,
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<[usize; 3]>,
}

impl MedialMesh {
    pub fn new(spheres: Vec<Sphere>, edges: Vec<[usize; 2]>, faces: Vec<[usize; 3]>) -> Self {
        let mut mm = Self { spheres, edges, faces };
        mm.canonicalize();
        mm
    }

    /// Deduplicates edges and faces and registers face edges.
    pub fn canonicalize(&mut self) {
        let mut edges: BTreeSet<[usize; 2]> =
            self.edges.iter().map(|&[a, b]| [a.min(b), a.max(b)]).collect();
        let mut seen = BTreeSet::new();
        self.faces.retain(|f| {
            let mut key = *f;
            key.sort_unstable();
            seen.insert(key)
        });
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.insert([a.min(b), a.max(b)]);
            }
        }
        self.edges = edges.into_iter().collect();
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.spheres.len();
        for (i, s) in self.spheres.iter().enumerate() {
            if !s.is_valid() {
                return Err(format!("sphere {i} is invalid"));
            }
        }
        for &[a, b] in &self.edges {
            if a >= n || b >= n {
                return Err(format!("edge ({a}, {b}) out of range"));
            }
            if a == b || self.spheres[a].center == self.spheres[b].center {
                return Err(format!("edge ({a}, {b}) has zero length"));
            }
        }
        for f in &self.faces {
            if f.iter().any(|&v| v >= n) {
                return Err(format!("face {f:?} out of range"));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(format!("face {f:?} repeats a vertex"));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty() && self.faces.is_empty()
    }

    /// Edges that belong to no face, in canonical order.
    pub fn standalone_edges(&self) -> Vec<[usize; 2]> {
        let face_edges = self.face_edge_set();
        self.edges.iter().copied().filter(|e| !face_edges.contains(e)).collect()
    }

    pub fn face_edge_set(&self) -> BTreeSet<[usize; 2]> {
        let mut set = BTreeSet::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                set.insert([a.min(b), a.max(b)]);
            }
        }
        set
    }

    /// Bounds of the union of all sphere envelopes.
    pub fn bbox(&self) -> Option<(Vec3, Vec3)> {
        let r = Vec3::repeat(1.0);
        let mut it = self.spheres.iter();
        let first = it.next()?;
        let init = (first.center - r * first.radius, first.center + r * first.radius);
        Some(it.fold(init, |(lo, hi), s| {
            (lo.inf(&(s.center - r * s.radius)), hi.sup(&(s.center + r * s.radius)))
        }))
    }

    pub fn bbox_diagonal(&self) -> f64 {
        self.bbox().map(|(lo, hi)| (hi - lo).norm()).unwrap_or(0.0)
    }

    /// Number of connected components of the complex, counting only vertices
    /// that are referenced by an edge or a face.
    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.spheres.len());
        let mut used = vec![false; self.spheres.len()];
        for &[a, b] in &self.edges {
            uf.union(a, b);
            used[a] = true;
            used[b] = true;
        }
        for f in &self.faces {
            uf.union(f[0], f[1]);
            uf.union(f[1], f[2]);
            for &v in f {
                used[v] = true;
            }
        }
        let roots: BTreeSet<usize> =
            (0..self.spheres.len()).filter(|&v| used[v]).map(|v| uf.find(v)).collect();
        roots.len()
    }

    pub fn scaled(&self, s: f64) -> MedialMesh {
        MedialMesh {
            spheres: self.spheres.iter().map(|sp| sp.scaled(s)).collect(),
            edges: self.edges.clone(),
            faces: self.faces.clone(),
        }
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Links the larger root under the smaller one.
    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}
