//! Dissimilarity metrics between two segmentations of the same mesh: Rand
//! Index, Cut Discrepancy, Hamming distance and the consistency errors.
//! Every metric is area weighted and 0 for identical segmentations.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::Vec3;
use crate::mesh::SurfaceMesh;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("segmentations cover {0} and {1} faces")]
    LengthMismatch(usize, usize),
    #[error("mesh has no area")]
    ZeroArea,
    /// Only one segmentation has cut boundaries; carries the normalization
    /// constant, which is reported in place of the discrepancy.
    #[error("only one segmentation has boundaries (normalizer {0})")]
    OneSidedBoundary(f64),
}

/// Labels with their face areas.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation<'a> {
    pub labels: &'a [usize],
    pub areas: &'a [f64],
}

impl<'a> Segmentation<'a> {
    pub fn new(labels: &'a [usize], areas: &'a [f64]) -> Self {
        Self { labels, areas }
    }
}

fn check(a: &Segmentation, b: &Segmentation) -> Result<f64, MetricError> {
    if a.labels.len() != b.labels.len() {
        return Err(MetricError::LengthMismatch(a.labels.len(), b.labels.len()));
    }
    if a.areas.len() != a.labels.len() {
        return Err(MetricError::LengthMismatch(a.areas.len(), a.labels.len()));
    }
    let total: f64 = a.areas.iter().sum();
    if !(total > 0.0) {
        return Err(MetricError::ZeroArea);
    }
    Ok(total)
}

/// Area per label and per label pair.
struct Contingency {
    a: BTreeMap<usize, f64>,
    b: BTreeMap<usize, f64>,
    ab: BTreeMap<(usize, usize), f64>,
}

impl Contingency {
    fn new(a: &Segmentation, b: &Segmentation) -> Self {
        let mut c = Contingency { a: BTreeMap::new(), b: BTreeMap::new(), ab: BTreeMap::new() };
        for f in 0..a.labels.len() {
            let w = a.areas[f];
            *c.a.entry(a.labels[f]).or_default() += w;
            *c.b.entry(b.labels[f]).or_default() += w;
            *c.ab.entry((a.labels[f], b.labels[f])).or_default() += w;
        }
        c
    }
}

/// Area-weighted fraction of ordered face pairs on which the two
/// segmentations disagree about sharing a segment.
pub fn rand_index(a: &Segmentation, b: &Segmentation) -> Result<f64, MetricError> {
    let total = check(a, b)?;
    let c = Contingency::new(a, b);
    fn sq<K>(m: &BTreeMap<K, f64>) -> f64 {
        m.values().map(|v| v * v).sum()
    }
    let disagree = sq(&c.a) + sq(&c.b) - 2.0 * sq(&c.ab);
    Ok((disagree / (total * total)).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hamming {
    pub distance: f64,
    pub missing_rate: f64,
    pub false_alarm_rate: f64,
}

/// Σ over segments `s` of `from` of `|s \ best match of s in to|`, where the
/// best match maximizes the overlap area (ties to the lower label).
fn directed_hamming(c: &Contingency, from_is_b: bool) -> f64 {
    let mut best: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (&(la, lb), &w) in &c.ab {
        let (key, other) = if from_is_b { (lb, la) } else { (la, lb) };
        let e = best.entry(key).or_insert((w, other));
        if w > e.0 || (w == e.0 && other < e.1) {
            *e = (w, other);
        }
    }
    let sizes = if from_is_b { &c.b } else { &c.a };
    sizes.iter().map(|(l, &size)| size - best[l].0).sum()
}

/// Missing rate counts the area of `b`'s segments outside their best match
/// in `a`; false alarm rate the reverse.
pub fn hamming(a: &Segmentation, b: &Segmentation) -> Result<Hamming, MetricError> {
    let total = check(a, b)?;
    let c = Contingency::new(a, b);
    let missing_rate = (directed_hamming(&c, true) / total).max(0.0);
    let false_alarm_rate = (directed_hamming(&c, false) / total).max(0.0);
    Ok(Hamming { distance: 0.5 * (missing_rate + false_alarm_rate), missing_rate, false_alarm_rate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Consistency {
    pub gce: f64,
    pub lce: f64,
}

/// Global and local consistency errors.
pub fn consistency_error(a: &Segmentation, b: &Segmentation) -> Result<Consistency, MetricError> {
    let total = check(a, b)?;
    let c = Contingency::new(a, b);
    let (mut ab, mut ba, mut local) = (0.0, 0.0, 0.0);
    for f in 0..a.labels.len() {
        let (la, lb) = (a.labels[f], b.labels[f]);
        let both = c.ab[&(la, lb)];
        let e_ab = (c.a[&la] - both) / c.a[&la];
        let e_ba = (c.b[&lb] - both) / c.b[&lb];
        let w = a.areas[f];
        ab += w * e_ab;
        ba += w * e_ba;
        local += w * e_ab.min(e_ba);
    }
    Ok(Consistency { gce: ab.min(ba) / total, lce: local / total })
}

/// Midpoints of mesh edges separating differently labeled faces.
pub fn boundary_midpoints(mesh: &SurfaceMesh, labels: &[usize]) -> Vec<Vec3> {
    mesh.dual_edges()
        .into_iter()
        .filter(|d| labels[d.f] != labels[d.g])
        .map(|d| (mesh.vertices[d.edge[0]] + mesh.vertices[d.edge[1]]) * 0.5)
        .collect()
}

/// Total length of the cut boundary.
pub fn boundary_length(mesh: &SurfaceMesh, labels: &[usize]) -> f64 {
    mesh.dual_edges()
        .into_iter()
        .filter(|d| labels[d.f] != labels[d.g])
        .map(|d| (mesh.vertices[d.edge[0]] - mesh.vertices[d.edge[1]]).norm())
        .sum()
}

/// Mean distance from the mesh vertices to their centroid.
pub fn mean_radius(mesh: &SurfaceMesh) -> f64 {
    let n = mesh.vertices.len().max(1) as f64;
    let c = mesh.vertices.iter().sum::<Vec3>() / n;
    mesh.vertices.iter().map(|v| (v - c).norm()).sum::<f64>() / n
}

fn directed_cut_distance(from: &[Vec3], to: &[Vec3]) -> f64 {
    let sum: f64 = from
        .iter()
        .map(|p| to.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
        .sum();
    sum / from.len() as f64
}

/// Mean of the two directed average distances between boundary midpoints,
/// over the mean vertex distance to the mesh centroid.
pub fn cut_discrepancy(mesh: &SurfaceMesh, a: &[usize], b: &[usize]) -> Result<f64, MetricError> {
    if a.len() != b.len() || a.len() != mesh.faces.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    let norm = mean_radius(mesh);
    if !(norm > 0.0) {
        return Err(MetricError::ZeroArea);
    }
    let (pa, pb) = (boundary_midpoints(mesh, a), boundary_midpoints(mesh, b));
    match (pa.is_empty(), pb.is_empty()) {
        (true, true) => Ok(0.0),
        (false, false) => Ok(0.5 * (directed_cut_distance(&pa, &pb) + directed_cut_distance(&pb, &pa)) / norm),
        _ => Err(MetricError::OneSidedBoundary(norm)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub rand_index: f64,
    /// `None` when only one side has boundaries.
    pub cut_discrepancy: Option<f64>,
    pub hamming: Hamming,
    pub consistency: Consistency,
}

pub fn evaluate(mesh: &SurfaceMesh, pred: &[usize], gt: &[usize]) -> Result<MetricReport, MetricError> {
    let areas = mesh.face_areas();
    let (a, b) = (Segmentation::new(pred, &areas), Segmentation::new(gt, &areas));
    let cut_discrepancy = match cut_discrepancy(mesh, pred, gt) {
        Ok(v) => Some(v),
        Err(MetricError::OneSidedBoundary(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricReport {
        rand_index: rand_index(&a, &b)?,
        cut_discrepancy,
        hamming: hamming(&a, &b)?,
        consistency: consistency_error(&a, &b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rand_index_three_faces() {
        let areas = [1.0; 3];
        let a = Segmentation::new(&[0, 0, 0], &areas);
        let b = Segmentation::new(&[0, 1, 2], &areas);
        assert!((rand_index(&a, &b).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rand_index(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn hamming_halves() {
        let areas = [1.0; 4];
        let a = Segmentation::new(&[0, 0, 0, 0], &areas);
        let b = Segmentation::new(&[0, 0, 1, 1], &areas);
        let h = hamming(&a, &b).unwrap();
        assert_eq!(h.distance, 0.25);
        assert_eq!((h.missing_rate, h.false_alarm_rate), (0.0, 0.5));
        let r = hamming(&b, &a).unwrap();
        assert_eq!((r.missing_rate, r.false_alarm_rate), (0.5, 0.0));
    }

    #[test]
    fn refinement_consistency() {
        let areas = [1.0, 2.0, 1.0, 3.0];
        let a = Segmentation::new(&[0, 0, 1, 1], &areas);
        let b = Segmentation::new(&[0, 1, 2, 2], &areas);
        let c = consistency_error(&a, &b).unwrap();
        assert_eq!(c.gce, 0.0);
        assert_eq!(c.lce, 0.0);
    }
}
