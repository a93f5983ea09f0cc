//! The MAT graph: one node per medial slab (face) and one per medial cone
//! that is not part of any face (standalone edge). Two nodes are adjacent
//! when their elements share at least one medial-mesh vertex.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{
    angle_between, any_perpendicular, cone_geometry, point_segment_distance, point_triangle_distance,
    slab_envelope, triangle_normal, ConeGeometry, Sphere, TangentPlane, Vec3,
};
use crate::mesh::MedialMesh;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("medial mesh has no faces and no edges")]
    EmptyInput,
    #[error("nodes {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Face,
    Edge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    /// `normal` orients the slab; `planes[0]` is the envelope plane on the
    /// side of `normal`, `planes[1]` the opposite one.
    Slab { normal: Vec3, planes: [TangentPlane; 2] },
    /// `None` when one sphere contains the other.
    Cone { geometry: Option<ConeGeometry> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatNode {
    pub kind: NodeKind,
    /// Index into the medial mesh's faces (face nodes) or edges (edge nodes).
    pub element_index: usize,
    /// Medial-mesh vertices of the element, 3 for faces and 2 for edges.
    pub vertices: Vec<usize>,
    pub mean_radius: f64,
    pub centroid: Vec3,
    pub primitive: Primitive,
}

#[derive(Debug, Clone)]
pub struct MatGraph {
    pub nodes: Vec<MatNode>,
    /// Sorted neighbor lists.
    pub adjacency: Vec<Vec<usize>>,
    pub spheres: Vec<Sphere>,
    pub component_id: Option<Vec<usize>>,
    pub region_id: Option<Vec<usize>>,
}

/// Smallest mean radius a node may carry, relative to the model diagonal.
const MIN_RADIUS_REL: f64 = 1e-9;

pub fn build_graph(mm: &MedialMesh) -> Result<MatGraph, GraphError> {
    let standalone = mm.standalone_edges();
    if mm.faces.is_empty() && standalone.is_empty() {
        return Err(GraphError::EmptyInput);
    }
    let min_radius = MIN_RADIUS_REL * mm.bbox_diagonal().max(f64::MIN_POSITIVE);
    let sp = &mm.spheres;
    let mut nodes = Vec::with_capacity(mm.faces.len() + standalone.len());

    for (fi, f) in mm.faces.iter().enumerate() {
        let (a, b, c) = (&sp[f[0]], &sp[f[1]], &sp[f[2]]);
        let planes = slab_envelope(a, b, c);
        let normal = triangle_normal(&a.center, &b.center, &c.center).unwrap_or(planes[0].normal);
        nodes.push(MatNode {
            kind: NodeKind::Face,
            element_index: fi,
            vertices: f.to_vec(),
            mean_radius: ((a.radius + b.radius + c.radius) / 3.0).max(min_radius),
            centroid: (a.center + b.center + c.center) / 3.0,
            primitive: Primitive::Slab { normal, planes },
        });
    }
    for e in &standalone {
        let ei = mm.edges.binary_search(e).expect("standalone edge is canonical");
        let (a, b) = (&sp[e[0]], &sp[e[1]]);
        nodes.push(MatNode {
            kind: NodeKind::Edge,
            element_index: ei,
            vertices: e.to_vec(),
            mean_radius: ((a.radius + b.radius) / 2.0).max(min_radius),
            centroid: (a.center + b.center) / 2.0,
            primitive: Primitive::Cone { geometry: cone_geometry(a, b).ok() },
        });
    }

    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); sp.len()];
    for (ni, n) in nodes.iter().enumerate() {
        for &v in &n.vertices {
            incident[v].push(ni);
        }
    }
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for around in &incident {
        for &x in around {
            for &y in around {
                if x != y {
                    adjacency[x].push(y);
                }
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }
    Ok(MatGraph { nodes, adjacency, spheres: sp.clone(), component_id: None, region_id: None })
}

fn shared_vertices(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|v| b.contains(v)).collect()
}

fn other_vertex(face: &[usize], excluded: &[usize]) -> usize {
    *face.iter().find(|v| !excluded.contains(v)).expect("triangle has a third vertex")
}

/// Whether the cyclic triangle `f` traverses `u -> v`.
fn traverses(f: &[usize], u: usize, v: usize) -> bool {
    (0..3).any(|k| f[k] == u && f[(k + 1) % 3] == v)
}

impl MatGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn are_adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    fn check_adjacent(&self, i: usize, j: usize) -> Result<(), GraphError> {
        if i < self.len() && j < self.len() && self.are_adjacent(i, j) {
            Ok(())
        } else {
            Err(GraphError::NotAdjacent(i, j))
        }
    }

    fn center(&self, v: usize) -> Vec3 {
        self.spheres[v].center
    }

    /// Bending angle θ between adjacent nodes: the interior dihedral angle
    /// for two faces, the angle between the edges oriented away from the
    /// shared vertex for two edges, and 0 for mixed pairs. Flat or straight
    /// continuations measure π.
    pub fn node_angle(&self, i: usize, j: usize) -> Result<f64, GraphError> {
        self.check_adjacent(i, j)?;
        let (a, b) = (&self.nodes[i], &self.nodes[j]);
        let shared = shared_vertices(&a.vertices, &b.vertices);
        Ok(match (a.kind, b.kind) {
            (NodeKind::Face, NodeKind::Face) if shared.len() >= 2 => {
                let (h0, h1) = (self.center(shared[0]), self.center(shared[1]));
                let p = self.center(other_vertex(&a.vertices, &shared));
                let q = self.center(other_vertex(&b.vertices, &shared));
                let axis = h1 - h0;
                let len = axis.norm();
                if len == 0.0 {
                    return Ok(PI);
                }
                let e = axis / len;
                let vp = (p - h0) - e * (p - h0).dot(&e);
                let vq = (q - h0) - e * (q - h0).dot(&e);
                if vp.norm() == 0.0 || vq.norm() == 0.0 {
                    PI
                } else {
                    angle_between(&vp.normalize(), &vq.normalize())
                }
            }
            (NodeKind::Face, NodeKind::Face) => {
                // Only a vertex is shared: use the angle between the support
                // planes, taking π for parallel planes.
                let (Primitive::Slab { normal: na, .. }, Primitive::Slab { normal: nb, .. }) =
                    (&a.primitive, &b.primitive)
                else {
                    unreachable!()
                };
                let between = angle_between(na, nb);
                PI - between.min(PI - between)
            }
            (NodeKind::Edge, NodeKind::Edge) => {
                let v = shared[0];
                let c = self.center(v);
                let da = self.center(other_vertex_edge(&a.vertices, v)) - c;
                let db = self.center(other_vertex_edge(&b.vertices, v)) - c;
                angle_between(&da.normalize(), &db.normalize())
            }
            _ => 0.0,
        })
    }

    /// The two side angles (∠⁺, ∠⁻) between the envelopes of two adjacent
    /// primitives, each in `[0, π]`. Both are zero where the envelope
    /// continues smoothly from one primitive to the other.
    pub fn primitive_angles(&self, i: usize, j: usize) -> Result<(f64, f64), GraphError> {
        self.check_adjacent(i, j)?;
        // The lower index is the orientation reference, so the result does
        // not depend on argument order.
        let (i, j) = (i.min(j), i.max(j));
        let (a, b) = (&self.nodes[i], &self.nodes[j]);
        let shared = shared_vertices(&a.vertices, &b.vertices);
        Ok(match (&a.primitive, &b.primitive) {
            (
                Primitive::Slab { normal: na, planes: pa },
                Primitive::Slab { normal: nb, planes: pb },
            ) => {
                let consistent = if shared.len() >= 2 {
                    let (u, v) = (shared[0], shared[1]);
                    traverses(&a.vertices, u, v) != traverses(&b.vertices, u, v)
                } else {
                    na.dot(nb) >= 0.0
                };
                let (bp, bm) = if consistent { (pb[0], pb[1]) } else { (pb[1], pb[0]) };
                (angle_between(&pa[0].normal, &bp.normal), angle_between(&pa[1].normal, &bm.normal))
            }
            (Primitive::Cone { .. }, Primitive::Cone { .. }) => {
                let v = shared[0];
                let c = self.center(v);
                let oa = other_vertex_edge(&a.vertices, v);
                let ob = other_vertex_edge(&b.vertices, v);
                let da = (self.center(oa) - c).normalize();
                let db = (self.center(ob) - c).normalize();
                // Walk the chain oa -> v -> ob.
                let ta = -da;
                let tb = db;
                let m = da.cross(&db);
                let m = if m.norm() <= 1e-12 { any_perpendicular(&da) } else { m.normalize() };
                let pa = m.cross(&ta);
                let pb = m.cross(&tb);
                let sa = self.slant_along(oa, v);
                let sb = self.slant_along(v, ob);
                let side = |p: Vec3, t: Vec3, s: f64| p * (1.0 - s * s).sqrt() + t * s;
                (
                    angle_between(&side(pa, ta, sa), &side(pb, tb, sb)),
                    angle_between(&side(-pa, ta, sa), &side(-pb, tb, sb)),
                )
            }
            (Primitive::Slab { planes, .. }, Primitive::Cone { .. }) => {
                self.slab_cone_angles(planes, &b.vertices, shared[0])
            }
            (Primitive::Cone { .. }, Primitive::Slab { planes, .. }) => {
                self.slab_cone_angles(planes, &a.vertices, shared[0])
            }
        })
    }

    /// Sine of the envelope slope of the cone traversed from `from` to `to`:
    /// positive when the radius shrinks along the way.
    fn slant_along(&self, from: usize, to: usize) -> f64 {
        let (s0, s1) = (&self.spheres[from], &self.spheres[to]);
        let len = (s1.center - s0.center).norm();
        if len == 0.0 {
            return 0.0;
        }
        ((s0.radius - s1.radius) / len).clamp(-1.0, 1.0)
    }

    /// On each slab side, the cone's envelope line in the plane spanned by the
    /// cone axis and that side's normal is compared to the slab's side plane.
    fn slab_cone_angles(&self, planes: &[TangentPlane; 2], cone: &[usize], shared: usize) -> (f64, f64) {
        let far = other_vertex_edge(cone, shared);
        let axis = self.center(far) - self.center(shared);
        let t = axis.normalize();
        let s = self.slant_along(shared, far);
        let fallback = any_perpendicular(&t);
        let side = |n: &Vec3, sign: f64| {
            let p = n - t * n.dot(&t);
            let p = if p.norm() <= 1e-12 { fallback * sign } else { p.normalize() };
            let cone_normal = p * (1.0 - s * s).sqrt() + t * s;
            angle_between(&cone_normal, n)
        };
        (side(&planes[0].normal, 1.0), side(&planes[1].normal, -1.0))
    }

    /// Euclidean distance from `p` to the node's medial element (triangle or
    /// segment of sphere centers).
    pub fn element_distance(&self, i: usize, p: &Vec3) -> f64 {
        let v = &self.nodes[i].vertices;
        match v.len() {
            3 => point_triangle_distance(p, &self.center(v[0]), &self.center(v[1]), &self.center(v[2])),
            _ => point_segment_distance(p, &self.center(v[0]), &self.center(v[1])),
        }
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let mm = MedialMesh { spheres: self.spheres.clone(), edges: vec![], faces: vec![] };
        mm.bbox_diagonal()
    }
}

fn other_vertex_edge(edge: &[usize], v: usize) -> usize {
    if edge[0] == v {
        edge[1]
    } else {
        edge[0]
    }
}
