//! Structured-MAT extraction by greedy edge collapse.
//!
//! Faces of the base medial mesh are iteratively collapsed into edges until
//! the next collapse would exceed the error budget. Each collapse merges the
//! two endpoint spheres of an edge into one sphere sampled on the segment
//! between them, so radii never leave the range of the collapsed
//! neighborhood. Tube-like strips degrade into curve chains while wide
//! sheets keep their faces.
//!
//! The collapse cost measures, for every medial primitive touching the edge,
//! how far the original endpoint spheres lie from the primitive's image after
//! the collapse, in (center, radius) space.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use nalgebra::Vector4;
use ordered_float::OrderedFloat;
use thiserror::Error;

use crate::geometry::{closest_point_on_segment, closest_point_on_triangle, Sphere};
use crate::mesh::MedialMesh;

/// Number of uniform samples of the merge position along the edge.
pub const MERGE_SAMPLES: usize = 17;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimplifyError {
    #[error("medial mesh has no edges or faces")]
    EmptyInput,
    #[error("invalid simplification parameters: {0}")]
    InvalidParams(String),
}

/// How the error of accepted collapses is compared against the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorAccounting {
    /// Every single collapse must stay within the budget.
    PerCollapse,
    /// The mean error over all accepted collapses must stay within the budget.
    RunningAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimplifyParams {
    /// Error budget as a fraction of the bounding-box diagonal.
    pub target_error: f64,
    /// Reject collapses violating the link condition.
    pub preserve_topology: bool,
    pub accounting: ErrorAccounting,
    /// Also collapse edges that belong to no face. Off by default: only
    /// faces are collapsed into edges, curves are left as they are.
    pub collapse_curves: bool,
    /// After collapsing, drop dangling curve arms whose envelope stays
    /// within the error budget of the sphere they hang from, so that short
    /// noise branches do not survive as junctions. Unbranched chains are
    /// never touched.
    pub prune_branches: bool,
}

impl Default for SimplifyParams {
    fn default() -> Self {
        Self {
            target_error: 0.03,
            preserve_topology: true,
            accounting: ErrorAccounting::PerCollapse,
            collapse_curves: false,
            prune_branches: true,
        }
    }
}

impl SimplifyParams {
    pub fn validate(&self) -> Result<(), SimplifyError> {
        if !(self.target_error > 0.0 && self.target_error < 1.0) {
            return Err(SimplifyError::InvalidParams(format!(
                "target_error must lie in (0, 1), got {}",
                self.target_error
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseRecord {
    /// The collapsed edge in input vertex numbering; `edge[0]` survives.
    pub edge: [usize; 2],
    /// Merge position along the edge, 0 at `edge[0]`.
    pub t: f64,
    pub cost: f64,
    /// `sqrt(cost)`, in model units.
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct SimplifyOutcome {
    pub mesh: MedialMesh,
    pub trace: Vec<CollapseRecord>,
    /// Output vertex index for every input vertex (`None` for merged-away ones).
    pub vertex_map: Vec<Option<usize>>,
    pub bound: f64,
    /// Vertices dropped with dangling arms.
    pub pruned: usize,
}

fn sphere4(s: &Sphere) -> Vector4<f64> {
    Vector4::new(s.center.x, s.center.y, s.center.z, s.radius)
}

/// Squared (center, radius) distance from `s` to the primitive spanned by
/// `image` (1, 2 or 3 spheres).
fn deviation2(s: &Sphere, image: &[Sphere]) -> f64 {
    let p = sphere4(s);
    let q = match image {
        [a] => sphere4(a),
        [a, b] => closest_point_on_segment(&p, &sphere4(a), &sphere4(b)),
        [a, b, c] => closest_point_on_triangle(&p, &sphere4(a), &sphere4(b), &sphere4(c)),
        _ => unreachable!("primitives have 1 to 3 vertices"),
    };
    (p - q).norm_squared()
}

/// Cost of replacing vertices `a` and `b` by `merged`, summed over the
/// `elements` (sorted vertex lists of faces and edges) incident to them.
fn local_cost(spheres: &[Sphere], a: usize, b: usize, merged: &Sphere, elements: &[Vec<usize>]) -> f64 {
    let mut cost = 0.0;
    let mut image: Vec<Sphere> = Vec::with_capacity(3);
    let mut image_ids: Vec<usize> = Vec::with_capacity(3);
    for el in elements {
        image.clear();
        image_ids.clear();
        for &v in el {
            let id = if v == a || v == b { usize::MAX } else { v };
            if !image_ids.contains(&id) {
                image_ids.push(id);
                image.push(if id == usize::MAX { *merged } else { spheres[v] });
            }
        }
        for &v in el {
            if v == a || v == b {
                cost += deviation2(&spheres[v], &image);
            }
        }
    }
    cost
}

/// Cost rounded on a grid relative to `unit` (squared model diagonal).
/// Comparing rounded costs makes ties between symmetric collapses
/// independent of the model scale.
pub fn cost_key(cost: f64, unit: f64) -> f64 {
    (cost / unit * 1e12).round()
}

/// Best merge parameter and its cost over the uniform samples. Ties keep the
/// smallest parameter.
fn best_merge(spheres: &[Sphere], a: usize, b: usize, elements: &[Vec<usize>], unit: f64) -> (f64, f64) {
    let mut best = (0.0, f64::INFINITY, f64::INFINITY);
    for k in 0..MERGE_SAMPLES {
        let t = k as f64 / (MERGE_SAMPLES - 1) as f64;
        let merged = spheres[a].lerp(&spheres[b], t);
        let c = local_cost(spheres, a, b, &merged, elements);
        let key = cost_key(c, unit);
        if key < best.2 {
            best = (t, c, key);
        }
    }
    (best.0, best.1)
}

fn unit_of(mm: &MedialMesh) -> f64 {
    let d = mm.bbox_diagonal();
    if d > 0.0 {
        d * d
    } else {
        1.0
    }
}

fn canonical_edge(edge: [usize; 2]) -> [usize; 2] {
    [edge[0].min(edge[1]), edge[0].max(edge[1])]
}

fn incident_elements(mm: &MedialMesh, a: usize, b: usize) -> Vec<Vec<usize>> {
    let mut faces: Vec<Vec<usize>> = mm
        .faces
        .iter()
        .filter(|f| f.contains(&a) || f.contains(&b))
        .map(|f| {
            let mut k = f.to_vec();
            k.sort_unstable();
            k
        })
        .collect();
    faces.sort();
    faces.dedup();
    let edges = mm.edges.iter().filter(|e| e.contains(&a) || e.contains(&b)).map(|e| e.to_vec());
    faces.into_iter().chain(edges).collect()
}

/// Lowest cost of collapsing `edge` over the sampled merge positions.
pub fn collapse_cost(mm: &MedialMesh, edge: [usize; 2]) -> f64 {
    best_collapse(mm, edge, unit_of(mm)).1
}

/// `(t, cost)` of the best sampled merge position for `edge`, comparing
/// costs by `cost_key(_, unit)`.
pub fn best_collapse(mm: &MedialMesh, edge: [usize; 2], unit: f64) -> (f64, f64) {
    let [a, b] = canonical_edge(edge);
    best_merge(&mm.spheres, a, b, &incident_elements(mm, a, b), unit)
}

/// Collapses `edge` with merge parameter `t`, keeping vertex numbering:
/// the lower endpoint receives the merged sphere and the higher one is left
/// unreferenced.
pub fn collapse_edge(mm: &MedialMesh, edge: [usize; 2], t: f64) -> MedialMesh {
    let [keep, gone] = canonical_edge(edge);
    let mut spheres = mm.spheres.clone();
    spheres[keep] = mm.spheres[keep].lerp(&mm.spheres[gone], t);
    let remap = |v: usize| if v == gone { keep } else { v };
    let faces: Vec<[usize; 3]> = mm
        .faces
        .iter()
        .map(|f| [remap(f[0]), remap(f[1]), remap(f[2])])
        .filter(|f| f[0] != f[1] && f[1] != f[2] && f[0] != f[2])
        .collect();
    let edges: Vec<[usize; 2]> =
        mm.edges.iter().map(|e| [remap(e[0]), remap(e[1])]).filter(|e| e[0] != e[1]).collect();
    MedialMesh::new(spheres, edges, faces)
}

/// Link condition for collapsing `edge` in a 2-complex: the common link of
/// the endpoints must be exactly the link of the edge.
pub fn link_condition(mm: &MedialMesh, edge: [usize; 2]) -> bool {
    let [a, b] = canonical_edge(edge);
    let nbrs = |v: usize| -> BTreeSet<usize> {
        mm.edges
            .iter()
            .filter(|e| e.contains(&v))
            .map(|e| if e[0] == v { e[1] } else { e[0] })
            .collect()
    };
    let link_edges = |v: usize| -> BTreeSet<[usize; 2]> {
        mm.faces
            .iter()
            .filter(|f| f.contains(&v))
            .map(|f| {
                let o: Vec<usize> = f.iter().copied().filter(|&x| x != v).collect();
                canonical_edge([o[0], o[1]])
            })
            .collect()
    };
    let common: BTreeSet<usize> = nbrs(a).intersection(&nbrs(b)).copied().collect();
    let edge_link: BTreeSet<usize> = mm
        .faces
        .iter()
        .filter(|f| f.contains(&a) && f.contains(&b))
        .flat_map(|f| f.iter().copied().filter(|&x| x != a && x != b))
        .collect();
    common == edge_link && link_edges(a).is_disjoint(&link_edges(b))
}

/// Whether `edge` may be collapsed under `p`.
pub fn is_candidate(mm: &MedialMesh, edge: [usize; 2], p: &SimplifyParams) -> bool {
    let [a, b] = canonical_edge(edge);
    let in_face = mm.faces.iter().any(|f| f.contains(&a) && f.contains(&b));
    (p.collapse_curves || in_face) && (!p.preserve_topology || link_condition(mm, [a, b]))
}

pub fn simplify(mm: &MedialMesh, p: &SimplifyParams) -> Result<MedialMesh, SimplifyError> {
    Ok(simplify_with_trace(mm, p)?.mesh)
}

/// Incrementally maintained complex used by the greedy loop.
struct Work {
    spheres: Vec<Sphere>,
    alive: Vec<bool>,
    faces: Vec<Option<[usize; 3]>>,
    face_keys: BTreeMap<[usize; 3], usize>,
    vertex_faces: Vec<BTreeSet<usize>>,
    neighbors: Vec<BTreeSet<usize>>,
    version: Vec<u64>,
    unit: f64,
}

fn sorted3(f: [usize; 3]) -> [usize; 3] {
    let mut k = f;
    k.sort_unstable();
    k
}

impl Work {
    fn new(mm: &MedialMesh) -> Self {
        let n = mm.spheres.len();
        let mut w = Work {
            spheres: mm.spheres.clone(),
            alive: vec![true; n],
            faces: Vec::with_capacity(mm.faces.len()),
            face_keys: BTreeMap::new(),
            vertex_faces: vec![BTreeSet::new(); n],
            neighbors: vec![BTreeSet::new(); n],
            version: vec![0; n],
            unit: unit_of(mm),
        };
        for (fi, f) in mm.faces.iter().enumerate() {
            w.faces.push(Some(*f));
            w.face_keys.insert(sorted3(*f), fi);
            for &v in f {
                w.vertex_faces[v].insert(fi);
            }
        }
        for &[a, b] in &mm.edges {
            w.neighbors[a].insert(b);
            w.neighbors[b].insert(a);
        }
        w
    }

    fn face_key(&self, fi: usize) -> [usize; 3] {
        sorted3(self.faces[fi].expect("live face"))
    }

    /// Same element list, in the same order, as `incident_elements`.
    fn incident_elements(&self, a: usize, b: usize) -> Vec<Vec<usize>> {
        let ids: BTreeSet<usize> = self.vertex_faces[a].union(&self.vertex_faces[b]).copied().collect();
        let mut faces: Vec<Vec<usize>> = ids.into_iter().map(|fi| self.face_key(fi).to_vec()).collect();
        faces.sort();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        for &v in [a, b].iter() {
            for &w in &self.neighbors[v] {
                edges.push(canonical_edge([v, w]));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        faces.into_iter().chain(edges.into_iter().map(|e| e.to_vec())).collect()
    }

    fn in_face(&self, a: usize, b: usize) -> bool {
        self.vertex_faces[a].intersection(&self.vertex_faces[b]).next().is_some()
    }

    fn link_condition(&self, a: usize, b: usize) -> bool {
        let common: BTreeSet<usize> = self.neighbors[a].intersection(&self.neighbors[b]).copied().collect();
        let mut edge_link = BTreeSet::new();
        for fi in self.vertex_faces[a].intersection(&self.vertex_faces[b]) {
            for &x in &self.face_key(*fi) {
                if x != a && x != b {
                    edge_link.insert(x);
                }
            }
        }
        if common != edge_link {
            return false;
        }
        let link_edges = |v: usize| -> BTreeSet<[usize; 2]> {
            self.vertex_faces[v]
                .iter()
                .map(|&fi| {
                    let o: Vec<usize> = self.face_key(fi).into_iter().filter(|&x| x != v).collect();
                    [o[0], o[1]]
                })
                .collect()
        };
        link_edges(a).is_disjoint(&link_edges(b))
    }

    fn curve_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[v].iter().copied().filter(move |&w| !self.in_face(v, w))
    }

    /// Vertices of the dangling arm leaving `u` through `v`, or `None`
    /// when that curve reaches a face, a branching vertex or `u` again.
    fn arm(&self, u: usize, v: usize) -> Option<Vec<usize>> {
        let (mut prev, mut cur) = (u, v);
        let mut out = Vec::new();
        loop {
            if cur == u || !self.vertex_faces[cur].is_empty() {
                return None;
            }
            out.push(cur);
            let mut next = self.curve_neighbors(cur).filter(|&w| w != prev);
            match (next.next(), next.next()) {
                (None, _) => return Some(out),
                (Some(w), None) => (prev, cur) = (cur, w),
                _ => return None,
            }
        }
    }

    /// How far the envelope of `arm` reaches outside the sphere of `hub`.
    fn protrusion(&self, hub: usize, arm: &[usize]) -> f64 {
        let h = self.spheres[hub];
        arm.iter()
            .map(|&v| {
                let s = self.spheres[v];
                (s.center - h.center).norm() + s.radius - h.radius
            })
            .fold(0.0, f64::max)
    }

    /// Removes dangling curve arms hanging off a branching vertex (three or
    /// more curve edges, or curve edges next to faces) whose envelope stays
    /// within `bound` of the branching sphere. Least protruding arms go
    /// first; an arm is only removed while its hub still branches. Returns
    /// the number of vertices removed.
    fn prune_arms(&mut self, bound: f64) -> usize {
        let mut removed = 0;
        loop {
            let mut best: Option<(f64, usize, Vec<usize>)> = None;
            for u in 0..self.spheres.len() {
                if !self.alive[u] {
                    continue;
                }
                let curve: Vec<usize> = self.curve_neighbors(u).collect();
                let branching = curve.len() >= 3 || (!curve.is_empty() && !self.vertex_faces[u].is_empty());
                if !branching {
                    continue;
                }
                for &v in &curve {
                    if let Some(arm) = self.arm(u, v) {
                        let d = self.protrusion(u, &arm);
                        let key = cost_key(d * d, self.unit);
                        if d <= bound && best.as_ref().is_none_or(|b| key < b.0) {
                            best = Some((key, u, arm));
                        }
                    }
                }
            }
            let Some((_, _, arm)) = best else { return removed };
            for v in arm {
                for w in std::mem::take(&mut self.neighbors[v]) {
                    self.neighbors[w].remove(&v);
                }
                self.alive[v] = false;
                removed += 1;
            }
        }
    }

    fn candidate(&self, a: usize, b: usize, p: &SimplifyParams) -> bool {
        (p.collapse_curves || self.in_face(a, b)) && (!p.preserve_topology || self.link_condition(a, b))
    }

    fn evaluate(&self, a: usize, b: usize) -> (f64, f64) {
        best_merge(&self.spheres, a, b, &self.incident_elements(a, b), self.unit)
    }

    fn collapse(&mut self, keep: usize, gone: usize, t: f64) {
        self.spheres[keep] = self.spheres[keep].lerp(&self.spheres[gone], t);
        let gone_faces: Vec<usize> = self.vertex_faces[gone].iter().copied().collect();
        for fi in gone_faces {
            let old_key = self.face_key(fi);
            self.face_keys.remove(&old_key);
            let f = self.faces[fi].unwrap();
            let mapped = f.map(|v| if v == gone { keep } else { v });
            let key = sorted3(mapped);
            let degenerate = key[0] == key[1] || key[1] == key[2];
            if degenerate || self.face_keys.contains_key(&key) {
                self.faces[fi] = None;
                for v in f {
                    self.vertex_faces[v].remove(&fi);
                }
            } else {
                self.faces[fi] = Some(mapped);
                self.face_keys.insert(key, fi);
                self.vertex_faces[gone].remove(&fi);
                self.vertex_faces[keep].insert(fi);
            }
        }
        let gone_nbrs: Vec<usize> = std::mem::take(&mut self.neighbors[gone]).into_iter().collect();
        for w in gone_nbrs {
            self.neighbors[w].remove(&gone);
            if w != keep {
                self.neighbors[w].insert(keep);
                self.neighbors[keep].insert(w);
            }
        }
        self.alive[gone] = false;
    }

    fn into_mesh(self) -> (MedialMesh, Vec<Option<usize>>) {
        let mut map = vec![None; self.spheres.len()];
        let mut spheres = Vec::new();
        for (v, s) in self.spheres.iter().enumerate() {
            if self.alive[v] {
                map[v] = Some(spheres.len());
                spheres.push(*s);
            }
        }
        let m = |v: usize| map[v].expect("live vertex");
        let faces = self.faces.iter().flatten().map(|f| f.map(m)).collect();
        let mut edges = Vec::new();
        for (a, nb) in self.neighbors.iter().enumerate() {
            for &b in nb {
                if a < b {
                    edges.push([m(a), m(b)]);
                }
            }
        }
        (MedialMesh::new(spheres, edges, faces), map)
    }
}

/// Greedy lowest-cost-first simplification. Returns the compacted mesh and
/// the sequence of collapses performed.
pub fn simplify_with_trace(mm: &MedialMesh, p: &SimplifyParams) -> Result<SimplifyOutcome, SimplifyError> {
    p.validate()?;
    if mm.is_empty() {
        return Err(SimplifyError::EmptyInput);
    }
    let bound = p.target_error * mm.bbox_diagonal();
    let mut work = Work::new(mm);
    // Keyed by rounded cost, then edge; the raw cost rides along.
    type Entry = Reverse<(OrderedFloat<f64>, [usize; 2], u64, u64, OrderedFloat<f64>)>;
    let mut heap: BinaryHeap<Entry> = BinaryHeap::new();
    let push = |work: &Work, heap: &mut BinaryHeap<Entry>, a: usize, b: usize| {
        let (_, cost) = work.evaluate(a, b);
        let key = cost_key(cost, work.unit);
        heap.push(Reverse((OrderedFloat(key), [a, b], work.version[a], work.version[b], OrderedFloat(cost))));
    };
    for &[a, b] in &mm.edges {
        push(&work, &mut heap, a, b);
    }

    let mut trace = Vec::new();
    let mut error_sum = 0.0;
    while let Some(Reverse((_, [a, b], va, vb, OrderedFloat(cost)))) = heap.pop() {
        let fresh = work.alive[a]
            && work.alive[b]
            && work.version[a] == va
            && work.version[b] == vb
            && work.neighbors[a].contains(&b);
        if !fresh || !work.candidate(a, b, p) {
            continue;
        }
        let error = cost.sqrt();
        let within = match p.accounting {
            ErrorAccounting::PerCollapse => error <= bound,
            ErrorAccounting::RunningAverage => (error_sum + error) / (trace.len() + 1) as f64 <= bound,
        };
        if !within {
            break;
        }
        let (t, _) = work.evaluate(a, b);
        work.collapse(a, b, t);
        error_sum += error;
        trace.push(CollapseRecord { edge: [a, b], t, cost, error });

        let mut touched: Vec<usize> = work.neighbors[a].iter().copied().collect();
        touched.push(a);
        for &v in &touched {
            work.version[v] += 1;
        }
        let mut dirty = BTreeSet::new();
        for &v in &touched {
            for &w in &work.neighbors[v] {
                dirty.insert(canonical_edge([v, w]));
            }
        }
        for [x, y] in dirty {
            push(&work, &mut heap, x, y);
        }
    }
    let pruned = if p.prune_branches { work.prune_arms(bound) } else { 0 };
    let (mesh, vertex_map) = work.into_mesh();
    Ok(SimplifyOutcome { mesh, trace, vertex_map, bound, pruned })
}
