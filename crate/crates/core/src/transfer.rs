//! Transfer of MAT segments onto surface faces by minimizing a data plus
//! smoothness energy with alpha-expansion.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_between, Sphere, Vec3};
use crate::maxflow::FlowNetwork;
use crate::mesh::SurfaceMesh;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransferError {
    #[error("no segments to transfer")]
    NoSegments,
    #[error("segment {0} has no spheres")]
    EmptySegment(usize),
    #[error("invalid transfer parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferParams {
    pub omega: f64,
    pub max_iterations: usize,
}

pub const DEFAULT_OMEGA: f64 = 0.3;

impl Default for TransferParams {
    fn default() -> Self {
        Self { omega: DEFAULT_OMEGA, max_iterations: 10 }
    }
}

impl TransferParams {
    pub fn validate(&self) -> Result<(), TransferError> {
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(TransferError::InvalidParams(format!("omega must be non-negative, got {}", self.omega)));
        }
        if self.max_iterations == 0 {
            return Err(TransferError::InvalidParams("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Distance from `p` to the closest sphere surface of `segment` (0 inside),
/// divided by `diag`.
pub fn data_term(p: &Vec3, segment: &[Sphere], diag: f64) -> f64 {
    let d = segment.iter().map(|s| ((p - s.center).norm() - s.radius).max(0.0)).fold(f64::INFINITY, f64::min);
    d / diag
}

/// Exterior dihedral angle across the edge shared by faces `f` and `g`:
/// π when coplanar, below π at concave creases, above π at convex ones.
pub fn exterior_dihedral(mesh: &SurfaceMesh, f: usize, g: usize) -> f64 {
    let (Some(nf), Some(ng)) = (mesh.face_normal(f), mesh.face_normal(g)) else {
        return PI;
    };
    let beta = angle_between(&nf, &ng);
    let ff = mesh.faces[f];
    let q = mesh.faces[g].iter().copied().find(|v| !ff.contains(v));
    let Some(q) = q else { return PI };
    let side = (mesh.vertices[q] - mesh.vertices[ff[0]]).dot(&nf);
    if side < 0.0 {
        PI + beta
    } else {
        PI - beta
    }
}

/// Pairwise cost of labeling adjacent faces with exterior angle `phi`.
pub fn smooth_term(phi: f64, lf: usize, lg: usize) -> f64 {
    if lf == lg {
        0.0
    } else {
        (phi / PI).min(1.0)
    }
}

/// A Potts-type labeling energy: `data[f][l]` plus `w` for every edge
/// `(f, g, w)` whose faces take different labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelEnergy {
    pub data: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize, f64)>,
    pub labels: usize,
}

impl LabelEnergy {
    pub fn energy(&self, labels: &[usize]) -> f64 {
        let d: f64 = self.data.iter().zip(labels).map(|(row, &l)| row[l]).sum();
        let s: f64 = self.edges.iter().filter(|(f, g, _)| labels[*f] != labels[*g]).map(|e| e.2).sum();
        d + s
    }

    /// Per-face data argmin, ties to the lower label.
    pub fn argmin_labels(&self) -> Vec<usize> {
        self.data
            .iter()
            .map(|row| {
                let mut best = 0;
                for (l, &c) in row.iter().enumerate() {
                    if c < row[best] {
                        best = l;
                    }
                }
                best
            })
            .collect()
    }

    /// Best labeling within one alpha-expansion move from `current`.
    pub fn expand(&self, current: &[usize], alpha: usize) -> Vec<usize> {
        let n = self.data.len();
        let (s, t) = (n, n + 1);
        let mut net = FlowNetwork::new(n + 2);
        // x_f = 1 (sink side) switches f to alpha.
        let mut to_one = vec![0.0; n];
        let mut to_zero = vec![0.0; n];
        for f in 0..n {
            if current[f] != alpha {
                to_one[f] += self.data[f][alpha];
                to_zero[f] += self.data[f][current[f]];
            }
        }
        let add_linear = |f: usize, c: f64, to_one: &mut Vec<f64>, to_zero: &mut Vec<f64>| {
            if c >= 0.0 {
                to_one[f] += c;
            } else {
                to_zero[f] -= c;
            }
        };
        let mut pair_arcs = Vec::new();
        for &(f, g, w) in &self.edges {
            let (lf, lg) = (current[f], current[g]);
            let cost = |a: usize, b: usize| if a != b { w } else { 0.0 };
            match (lf == alpha, lg == alpha) {
                (true, true) => {}
                (true, false) => add_linear(g, cost(alpha, alpha) - cost(alpha, lg), &mut to_one, &mut to_zero),
                (false, true) => add_linear(f, cost(alpha, alpha) - cost(lf, alpha), &mut to_one, &mut to_zero),
                (false, false) => {
                    let a = cost(lf, lg);
                    let b = cost(lf, alpha);
                    let c = cost(alpha, lg);
                    let d = cost(alpha, alpha);
                    add_linear(f, c - a, &mut to_one, &mut to_zero);
                    add_linear(g, d - c, &mut to_one, &mut to_zero);
                    let pair = b + c - a - d;
                    if pair > 0.0 {
                        pair_arcs.push((f, g, pair));
                    }
                }
            }
        }
        for f in 0..n {
            if current[f] == alpha {
                continue;
            }
            // Only the difference matters; keep capacities small.
            let m = to_one[f].min(to_zero[f]);
            if to_one[f] - m > 0.0 {
                net.add_arc(s, f, to_one[f] - m);
            }
            if to_zero[f] - m > 0.0 {
                net.add_arc(f, t, to_zero[f] - m);
            }
        }
        for (f, g, c) in pair_arcs {
            net.add_arc(f, g, c);
        }
        let cut = net.max_flow(s, t);
        (0..n).map(|f| if current[f] != alpha && !cut.source_side[f] { alpha } else { current[f] }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferResult {
    pub labels: Vec<usize>,
    pub initial_energy: f64,
    pub energy: f64,
    /// Energy after every accepted move.
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
}

/// Alpha-expansion from the data argmin, labels visited in ascending order,
/// until a full cycle brings no improvement or `max_iterations` cycles ran.
pub fn minimize(e: &LabelEnergy, max_iterations: usize) -> TransferResult {
    let mut labels = e.argmin_labels();
    let initial_energy = e.energy(&labels);
    let mut energy = initial_energy;
    let mut trace = vec![energy];
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let mut improved = false;
        for alpha in 0..e.labels {
            let cand = e.expand(&labels, alpha);
            let ce = e.energy(&cand);
            if ce < energy - 1e-12 * energy.abs().max(1.0) {
                labels = cand;
                energy = ce;
                trace.push(energy);
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    TransferResult { labels, initial_energy, energy, energy_trace: trace, iterations }
}

/// Builds the transfer energy of `mesh` for the given segments (each a set
/// of medial spheres).
pub fn label_energy(mesh: &SurfaceMesh, segments: &[Vec<Sphere>], omega: f64) -> Result<LabelEnergy, TransferError> {
    if segments.is_empty() {
        return Err(TransferError::NoSegments);
    }
    if let Some(k) = segments.iter().position(|s| s.is_empty()) {
        return Err(TransferError::EmptySegment(k));
    }
    let diag = mesh.bbox_diagonal().max(f64::MIN_POSITIVE);
    let data = (0..mesh.faces.len())
        .map(|f| {
            let c = mesh.face_centroid(f);
            segments.iter().map(|seg| data_term(&c, seg, diag)).collect()
        })
        .collect();
    let edges = mesh
        .dual_edges()
        .into_iter()
        .map(|d| (d.f, d.g, omega * smooth_term(exterior_dihedral(mesh, d.f, d.g), 0, 1)))
        .collect();
    Ok(LabelEnergy { data, edges, labels: segments.len() })
}

pub fn optimize_labels(mesh: &SurfaceMesh, segments: &[Vec<Sphere>], p: &TransferParams) -> Result<TransferResult, TransferError> {
    p.validate()?;
    let e = label_energy(mesh, segments, p.omega)?;
    Ok(minimize(&e, p.max_iterations))
}

/// Labels from the data term alone, without smoothing.
pub fn direct_labels(mesh: &SurfaceMesh, segments: &[Vec<Sphere>]) -> Result<Vec<usize>, TransferError> {
    Ok(label_energy(mesh, segments, 0.0)?.argmin_labels())
}
