//! Structural decomposition of the structured MAT into curves and sheets,
//! cut at topological joints.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{point_segment_distance, point_triangle_distance, Vec3};
use crate::mat_graph::MatGraph;
use crate::mesh::{MedialMesh, UnionFind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructuralError {
    #[error("component has zero maximal radius")]
    ZeroRadius,
    #[error("no structural components to assign nodes to")]
    NoComponents,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum JointKind {
    SeamEdge,
    SeamVertex,
    EdgeTriangleVertex,
    TriangleTriangleVertex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum JointElement {
    Vertex(usize),
    Edge([usize; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Joint {
    pub kind: JointKind,
    pub element: JointElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ComponentKind {
    Curve,
    Sheet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralComponent {
    pub kind: ComponentKind,
    /// Structured-MAT edges (curves) or faces (sheets).
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<[usize; 3]>,
    pub extent: f64,
    pub max_radius: f64,
    pub thinness: f64,
    pub member_nodes: Vec<usize>,
}

fn face_edges(f: &[usize; 3]) -> [[usize; 2]; 3] {
    let e = |a: usize, b: usize| [a.min(b), a.max(b)];
    [e(f[0], f[1]), e(f[1], f[2]), e(f[0], f[2])]
}

/// Number of groups the faces around `v` fall into when faces sharing an
/// edge through `v` are joined.
fn fan_count(mm: &MedialMesh, v: usize, around: &[usize]) -> usize {
    let mut uf = UnionFind::new(around.len());
    let mut by_edge: BTreeMap<[usize; 2], usize> = BTreeMap::new();
    for (k, &fi) in around.iter().enumerate() {
        for e in face_edges(&mm.faces[fi]) {
            if e.contains(&v) {
                if let Some(&other) = by_edge.get(&e) {
                    uf.union(k, other);
                } else {
                    by_edge.insert(e, k);
                }
            }
        }
    }
    (0..around.len()).map(|k| uf.find(k)).collect::<BTreeSet<_>>().len()
}

/// Joints of the structured MAT, sorted by element then kind.
pub fn detect_joints(mm: &MedialMesh) -> Vec<Joint> {
    let n = mm.spheres.len();
    let mut joints = Vec::new();

    let mut edge_faces: BTreeMap<[usize; 2], usize> = BTreeMap::new();
    let mut vertex_faces: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (fi, f) in mm.faces.iter().enumerate() {
        for e in face_edges(f) {
            *edge_faces.entry(e).or_default() += 1;
        }
        for &v in f {
            vertex_faces[v].push(fi);
        }
    }
    for (e, count) in &edge_faces {
        if *count >= 3 {
            joints.push(Joint { kind: JointKind::SeamEdge, element: JointElement::Edge(*e) });
        }
    }

    let mut curve_degree = vec![0usize; n];
    for e in mm.standalone_edges() {
        curve_degree[e[0]] += 1;
        curve_degree[e[1]] += 1;
    }
    for v in 0..n {
        let el = JointElement::Vertex(v);
        if curve_degree[v] >= 3 {
            joints.push(Joint { kind: JointKind::SeamVertex, element: el });
        }
        if curve_degree[v] >= 1 && !vertex_faces[v].is_empty() {
            joints.push(Joint { kind: JointKind::EdgeTriangleVertex, element: el });
        }
        if vertex_faces[v].len() >= 2 && fan_count(mm, v, &vertex_faces[v]) >= 2 {
            joints.push(Joint { kind: JointKind::TriangleTriangleVertex, element: el });
        }
    }
    joints.sort_by_key(|j| (j.element, j.kind));
    joints
}

/// Curves and sheets left after cutting the complex at its joints. Sheets
/// come first, ordered by their lowest face index, then curves by their
/// lowest edge. `member_nodes` is left empty.
pub fn split_components(mm: &MedialMesh, joints: &[Joint]) -> Vec<StructuralComponent> {
    let seam_edges: BTreeSet<[usize; 2]> = joints
        .iter()
        .filter_map(|j| match j.element {
            JointElement::Edge(e) => Some(e),
            _ => None,
        })
        .collect();
    let cut_vertices: BTreeSet<usize> = joints
        .iter()
        .filter_map(|j| match (j.kind, j.element) {
            (JointKind::SeamVertex | JointKind::EdgeTriangleVertex, JointElement::Vertex(v)) => Some(v),
            _ => None,
        })
        .collect();

    let mut comps = Vec::new();

    let nf = mm.faces.len();
    let mut uf = UnionFind::new(nf);
    let mut first_face: BTreeMap<[usize; 2], usize> = BTreeMap::new();
    for (fi, f) in mm.faces.iter().enumerate() {
        for e in face_edges(f) {
            if seam_edges.contains(&e) {
                continue;
            }
            match first_face.get(&e) {
                Some(&g) => uf.union(fi, g),
                None => {
                    first_face.insert(e, fi);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for fi in 0..nf {
        groups.entry(uf.find(fi)).or_default().push(fi);
    }
    for members in groups.values() {
        let faces: Vec<[usize; 3]> = members.iter().map(|&fi| mm.faces[fi]).collect();
        let area: f64 = faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|v| mm.spheres[v].center);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum();
        let r = faces.iter().flatten().map(|&v| mm.spheres[v].radius).fold(0.0, f64::max);
        comps.push(make_component(ComponentKind::Sheet, vec![], faces, area.sqrt(), r));
    }

    let curves = mm.standalone_edges();
    let mut uf = UnionFind::new(curves.len());
    let mut first_edge: BTreeMap<usize, usize> = BTreeMap::new();
    for (ei, e) in curves.iter().enumerate() {
        for &v in e {
            if cut_vertices.contains(&v) {
                continue;
            }
            match first_edge.get(&v) {
                Some(&o) => uf.union(ei, o),
                None => {
                    first_edge.insert(v, ei);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for ei in 0..curves.len() {
        groups.entry(uf.find(ei)).or_default().push(ei);
    }
    for members in groups.values() {
        let edges: Vec<[usize; 2]> = members.iter().map(|&ei| curves[ei]).collect();
        let length: f64 =
            edges.iter().map(|e| (mm.spheres[e[0]].center - mm.spheres[e[1]].center).norm()).sum();
        let r = edges.iter().flatten().map(|&v| mm.spheres[v].radius).fold(0.0, f64::max);
        comps.push(make_component(ComponentKind::Curve, edges, vec![], length, r));
    }
    comps
}

fn make_component(
    kind: ComponentKind,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    extent: f64,
    max_radius: f64,
) -> StructuralComponent {
    let thinness = if max_radius > 0.0 { extent / max_radius } else { 0.0 };
    StructuralComponent { kind, edges, faces, extent, max_radius, thinness, member_nodes: vec![] }
}

/// ρ = S / R_max.
pub fn thinness(extent: f64, max_radius: f64) -> Result<f64, StructuralError> {
    if !(max_radius > 0.0) {
        return Err(StructuralError::ZeroRadius);
    }
    Ok(extent / max_radius)
}

impl StructuralComponent {
    pub fn thinness(&self) -> Result<f64, StructuralError> {
        thinness(self.extent, self.max_radius)
    }

    /// Distance from `p` to the closest element of this component.
    pub fn distance(&self, mm: &MedialMesh, p: &Vec3) -> f64 {
        let c = |v: usize| mm.spheres[v].center;
        let d_faces = self.faces.iter().map(|f| point_triangle_distance(p, &c(f[0]), &c(f[1]), &c(f[2])));
        let d_edges = self.edges.iter().map(|e| point_segment_distance(p, &c(e[0]), &c(e[1])));
        d_faces.chain(d_edges).fold(f64::INFINITY, f64::min)
    }
}

/// Maps every base-graph node to the component nearest to its centroid,
/// filling `g.component_id` and each component's `member_nodes`.
pub fn assign_base_nodes(
    g: &mut MatGraph,
    smat: &MedialMesh,
    comps: &mut [StructuralComponent],
) -> Result<(), StructuralError> {
    if comps.is_empty() {
        return Err(StructuralError::NoComponents);
    }
    for c in comps.iter_mut() {
        c.member_nodes.clear();
    }
    let mut ids = Vec::with_capacity(g.len());
    for (ni, node) in g.nodes.iter().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for (ci, c) in comps.iter().enumerate() {
            let d = c.distance(smat, &node.centroid);
            if d < best.0 {
                best = (d, ci);
            }
        }
        ids.push(best.1);
        comps[best.1].member_nodes.push(ni);
    }
    g.component_id = Some(ids);
    Ok(())
}
