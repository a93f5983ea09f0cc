//! Point-cloud mode: region growing on a skeletal point set whose radii are
//! distances to the raw cloud, using only the medial axis term.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Sphere, Vec3};
use crate::mesh::UnionFind;
use crate::part_merging::{merge_matching, DEFAULT_BINS};
use crate::region_growing::{grow, GrowingParams, GrowthGraph};

pub const DEFAULT_K: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkeletonError {
    #[error("skeleton has no points")]
    EmptyInput,
    #[error("raw point cloud is empty")]
    EmptyCloud,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkeletonCloud {
    pub points: Vec<Vec3>,
    pub radii: Vec<f64>,
    /// Symmetrized k-nearest-neighbor graph, sorted lists.
    pub adjacency: Vec<Vec<usize>>,
    /// Unit principal direction of each point's neighborhood.
    pub directions: Vec<Vec3>,
    /// Connected component of each point in the neighbor graph.
    pub component: Vec<usize>,
}

fn nearest_distance(p: &Vec3, cloud: &[Vec3]) -> f64 {
    cloud.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min).sqrt()
}

/// The `k` nearest other points, ties by index.
fn knn(points: &[Vec3], i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> =
        (0..points.len()).filter(|&j| j != i).map(|j| ((points[i] - points[j]).norm_squared(), j)).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.truncate(k);
    d.into_iter().map(|(_, j)| j).collect()
}

impl SkeletonCloud {
    /// Radii from the raw cloud; neighbors and directions from `k` nearest
    /// skeleton points.
    pub fn build(points: Vec<Vec3>, cloud: &[Vec3], k: usize) -> Result<Self, SkeletonError> {
        if cloud.is_empty() {
            return Err(SkeletonError::EmptyCloud);
        }
        let radii = points.iter().map(|p| nearest_distance(p, cloud)).collect();
        Self::with_radii(points, radii, k)
    }

    pub fn with_radii(points: Vec<Vec3>, radii: Vec<f64>, k: usize) -> Result<Self, SkeletonError> {
        let n = points.len();
        if n == 0 {
            return Err(SkeletonError::EmptyInput);
        }
        let near: Vec<Vec<usize>> = (0..n).map(|i| knn(&points, i, k)).collect();
        let mut adjacency = near.clone();
        for (i, list) in near.iter().enumerate() {
            for &j in list {
                adjacency[j].push(i);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let directions = (0..n)
            .map(|i| {
                let mut hood: Vec<Vec3> = near[i].iter().map(|&j| points[j]).collect();
                hood.push(points[i]);
                principal_direction(&hood)
            })
            .collect();
        let mut uf = UnionFind::new(n);
        for (i, list) in adjacency.iter().enumerate() {
            for &j in list {
                uf.union(i, j);
            }
        }
        let mut roots: Vec<usize> = (0..n).map(|i| uf.find(i)).collect();
        let mut ids = std::collections::BTreeMap::new();
        for r in roots.iter_mut() {
            let next = ids.len();
            *r = *ids.entry(*r).or_insert(next);
        }
        Ok(Self { points, radii, adjacency, directions, component: roots })
    }

    pub fn component_count(&self) -> usize {
        self.component.iter().max().map_or(0, |m| m + 1)
    }

    fn diagonal(&self) -> f64 {
        crate::geometry::bounds(&self.points).map_or(0.0, |(lo, hi)| (hi - lo).norm())
    }
}

fn principal_direction(points: &[Vec3]) -> Vec3 {
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vec3>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imax();
    let v: Vec3 = eig.eigenvectors.column(k).into_owned();
    if v.norm() > 0.0 {
        v.normalize()
    } else {
        Vec3::x()
    }
}

/// View of a skeleton cloud as a growth graph with a radius floor.
struct SkeletonGraph<'a> {
    sc: &'a SkeletonCloud,
    min_radius: f64,
}

impl GrowthGraph for SkeletonGraph<'_> {
    fn node_count(&self) -> usize {
        self.sc.points.len()
    }
    fn neighbors(&self, i: usize) -> &[usize] {
        &self.sc.adjacency[i]
    }
    fn mean_radius(&self, i: usize) -> f64 {
        self.sc.radii[i].max(self.min_radius)
    }
    /// π minus the angle between the two direction lines.
    fn node_angle(&self, i: usize, j: usize) -> f64 {
        let c = self.sc.directions[i].dot(&self.sc.directions[j]).abs().min(1.0);
        std::f64::consts::PI - c.acos()
    }
    fn primitive_angles(&self, _: usize, _: usize) -> Option<(f64, f64)> {
        None
    }
    fn node_spheres(&self, i: usize) -> Vec<usize> {
        vec![i]
    }
    fn sphere(&self, s: usize) -> Sphere {
        Sphere::new(self.sc.points[s], self.mean_radius(s))
    }
    fn element_distance(&self, i: usize, p: &Vec3) -> f64 {
        (self.sc.points[i] - p).norm()
    }
    fn centroid(&self, i: usize) -> Vec3 {
        self.sc.points[i]
    }
    fn component(&self, i: usize) -> usize {
        self.sc.component[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkeletonSegmentation {
    pub labels: Vec<usize>,
    pub grown_regions: usize,
    pub regions: usize,
}

/// Segments the skeleton points. Growing never crosses neighbor-graph
/// components; thresholds use δ₀ unadjusted. `merge_tau = None` skips
/// merging.
pub fn segment_skeleton(sc: &SkeletonCloud, p: &GrowingParams, merge_tau: Option<f64>) -> SkeletonSegmentation {
    let g = SkeletonGraph { sc, min_radius: 1e-9 * sc.diagonal().max(f64::MIN_POSITIVE) };
    let rho = vec![1.0; sc.component_count()];
    let grown = grow(&g, &rho, p);
    let regions = match merge_tau {
        Some(tau) => merge_matching(&g, &grown.regions, tau, DEFAULT_BINS),
        None => grown.regions.clone(),
    };
    let mut labels = vec![0; sc.points.len()];
    for r in &regions {
        for &v in &r.nodes {
            labels[v] = r.id;
        }
    }
    SkeletonSegmentation { labels, grown_regions: grown.regions.len(), regions: regions.len() }
}

/// Label of the nearest skeleton point for every raw cloud point.
pub fn transfer_to_cloud(sc: &SkeletonCloud, labels: &[usize], cloud: &[Vec3]) -> Vec<usize> {
    cloud
        .iter()
        .map(|q| {
            let mut best = (f64::INFINITY, 0);
            for (i, p) in sc.points.iter().enumerate() {
                let d = (p - q).norm_squared();
                if d < best.0 {
                    best = (d, i);
                }
            }
            labels[best.1]
        })
        .collect()
}
