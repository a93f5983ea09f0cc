//! Region growing over a MAT graph with adaptive thresholds, minimal-region
//! filtering and swallowing of unstable branches.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{Sphere, Vec3};
use crate::mat_graph::MatGraph;

/// The graph interface region growing needs. Implemented by the MAT graph
/// and by the skeleton graph of the point-cloud mode.
pub trait GrowthGraph {
    fn node_count(&self) -> usize;
    /// Sorted neighbor list.
    fn neighbors(&self, i: usize) -> &[usize];
    fn mean_radius(&self, i: usize) -> f64;
    /// Bending angle θ between adjacent nodes, π for a straight continuation.
    fn node_angle(&self, i: usize, j: usize) -> f64;
    /// Envelope side angles, `None` where the medial primitive term does not
    /// apply.
    fn primitive_angles(&self, i: usize, j: usize) -> Option<(f64, f64)>;
    fn node_spheres(&self, i: usize) -> Vec<usize>;
    fn sphere(&self, s: usize) -> Sphere;
    /// Distance from `p` to the node's medial element.
    fn element_distance(&self, i: usize, p: &Vec3) -> f64;
    fn centroid(&self, i: usize) -> Vec3;
    fn component(&self, i: usize) -> usize;
}

impl GrowthGraph for MatGraph {
    fn node_count(&self) -> usize {
        self.len()
    }
    fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }
    fn mean_radius(&self, i: usize) -> f64 {
        self.nodes[i].mean_radius
    }
    fn node_angle(&self, i: usize, j: usize) -> f64 {
        MatGraph::node_angle(self, i, j).expect("growth only visits adjacent nodes")
    }
    fn primitive_angles(&self, i: usize, j: usize) -> Option<(f64, f64)> {
        MatGraph::primitive_angles(self, i, j).ok()
    }
    fn node_spheres(&self, i: usize) -> Vec<usize> {
        self.nodes[i].vertices.clone()
    }
    fn sphere(&self, s: usize) -> Sphere {
        self.spheres[s]
    }
    fn element_distance(&self, i: usize, p: &Vec3) -> f64 {
        MatGraph::element_distance(self, i, p)
    }
    fn centroid(&self, i: usize) -> Vec3 {
        self.nodes[i].centroid
    }
    fn component(&self, i: usize) -> usize {
        self.component_id.as_ref().map_or(0, |c| c[i])
    }
}

/// When a node counts as swallowed by a grown region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwallowRule {
    /// The node's medial element (segment or triangle of sphere centers)
    /// reaches strictly inside a region sphere.
    ElementInSphere,
    /// One of the node's spheres intersects a region sphere, or all of them
    /// are enclosed by one.
    SphereSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowingParams {
    pub alpha: f64,
    pub lambda: f64,
    pub delta0: f64,
    pub eta: f64,
    pub sigma_knee: f64,
    pub swallowing: bool,
    pub swallow_rule: SwallowRule,
}

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_LAMBDA: f64 = 1.5;
pub const DEFAULT_DELTA0: f64 = 0.015;
pub const DEFAULT_ETA: f64 = 0.002;
pub const SIGMA_KNEE: f64 = 3.0;

impl Default for GrowingParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            lambda: DEFAULT_LAMBDA,
            delta0: DEFAULT_DELTA0,
            eta: DEFAULT_ETA,
            sigma_knee: SIGMA_KNEE,
            swallowing: true,
            swallow_rule: SwallowRule::ElementInSphere,
        }
    }
}

impl GrowingParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("alpha", self.alpha), ("lambda", self.lambda), ("delta0", self.delta0), ("eta", self.eta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.eta >= 1.0 {
            return Err(format!("eta must be below 1, got {}", self.eta));
        }
        Ok(())
    }
}

/// Medial axis term from radii and bending angle.
pub fn ma_cost_value(ri: f64, rj: f64, theta: f64, alpha: f64) -> f64 {
    (ri - rj).abs() / ri.min(rj) + alpha * (PI - theta) / PI
}

/// Medial primitive term from the two envelope side angles.
pub fn mp_cost_value(plus: f64, minus: f64) -> f64 {
    (plus + minus) / (2.0 * PI)
}

pub fn combined_cost(ma: f64, mp: f64, lambda: f64) -> f64 {
    ma.min(lambda * mp)
}

pub fn ma_cost<G: GrowthGraph + ?Sized>(g: &G, i: usize, j: usize, alpha: f64) -> f64 {
    ma_cost_value(g.mean_radius(i), g.mean_radius(j), g.node_angle(i, j), alpha)
}

/// `None` when the graph has no primitive term for this pair.
pub fn mp_cost<G: GrowthGraph + ?Sized>(g: &G, i: usize, j: usize) -> Option<f64> {
    g.primitive_angles(i, j).map(|(p, m)| mp_cost_value(p, m))
}

pub fn growing_cost<G: GrowthGraph + ?Sized>(g: &G, i: usize, j: usize, p: &GrowingParams) -> f64 {
    let ma = ma_cost(g, i, j, p.alpha);
    match mp_cost(g, i, j) {
        Some(mp) => combined_cost(ma, mp, p.lambda),
        None => ma,
    }
}

/// δ = δ₀ · σ(ln ρ) with σ(x) = x for x ≥ knee and 1 otherwise.
pub fn adjusted_threshold_with_knee(delta0: f64, rho: f64, knee: f64) -> f64 {
    let x = rho.ln();
    delta0 * if x >= knee { x } else { 1.0 }
}

pub fn adjusted_threshold(delta0: f64, rho: f64) -> f64 {
    adjusted_threshold_with_knee(delta0, rho, SIGMA_KNEE)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    pub id: usize,
    /// Sorted node indices.
    pub nodes: Vec<usize>,
    pub seed: usize,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthResult {
    pub regions: Vec<Region>,
    /// Region id per node.
    pub labels: Vec<usize>,
    pub swallowed: usize,
    pub negligible_merged: usize,
}

/// Region spheres sorted by center x, for pruned overlap queries.
struct SphereIndex {
    spheres: Vec<Sphere>,
    max_radius: f64,
}

impl SphereIndex {
    fn new(mut spheres: Vec<Sphere>) -> Self {
        spheres.sort_by(|a, b| a.center.x.total_cmp(&b.center.x));
        let max_radius = spheres.iter().map(|s| s.radius).fold(0.0, f64::max);
        Self { spheres, max_radius }
    }

    /// Spheres whose center x lies in `[lo - R, hi + R]`.
    fn near(&self, lo: f64, hi: f64) -> &[Sphere] {
        let r = self.max_radius;
        let a = self.spheres.partition_point(|s| s.center.x < lo - r);
        let b = self.spheres.partition_point(|s| s.center.x <= hi + r);
        &self.spheres[a..b.max(a)]
    }
}

fn swallows<G: GrowthGraph + ?Sized>(g: &G, index: &SphereIndex, node: usize, rule: SwallowRule) -> bool {
    let own: Vec<Sphere> = g.node_spheres(node).into_iter().map(|s| g.sphere(s)).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &own {
        let pad = if rule == SwallowRule::SphereSphere { s.radius } else { 0.0 };
        lo = lo.min(s.center.x - pad);
        hi = hi.max(s.center.x + pad);
    }
    index.near(lo, hi).iter().any(|rs| match rule {
        SwallowRule::ElementInSphere => g.element_distance(node, &rs.center) < rs.radius,
        SwallowRule::SphereSphere => {
            let intersects = own.iter().any(|s| (s.center - rs.center).norm() < s.radius + rs.radius);
            let enclosed = own.iter().all(|s| (s.center - rs.center).norm() + s.radius <= rs.radius);
            intersects || enclosed
        }
    })
}

const UNSET: usize = usize::MAX;

/// Grows regions over `g`. `rho[c]` is the thinness of structural
/// component `c`.
pub fn grow<G: GrowthGraph + ?Sized>(g: &G, rho: &[f64], p: &GrowingParams) -> GrowthResult {
    let n = g.node_count();
    let mut visited = vec![false; n];
    let mut negligible_group = vec![UNSET; n];
    let mut label = vec![UNSET; n];
    let mut regions: Vec<Region> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut swallowed = 0;

    // Seeds in order of decreasing radius, ties by index. Radii are compared
    // on a grid relative to the largest one, so rounding noise from the
    // model scale cannot reorder equal radii.
    let r_max = (0..n).map(|i| g.mean_radius(i)).fold(0.0, f64::max);
    let key = |i: usize| if r_max > 0.0 { (g.mean_radius(i) / r_max * 1e12).round() } else { 0.0 };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    let mut cursor = 0;

    let mut queue = VecDeque::new();
    loop {
        while cursor < n && visited[order[cursor]] {
            cursor += 1;
        }
        if cursor == n {
            break;
        }
        let seed = order[cursor];
        let comp = g.component(seed);
        let delta = adjusted_threshold_with_knee(p.delta0, rho.get(comp).copied().unwrap_or(1.0), p.sigma_knee);
        let mut members = Vec::new();
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            members.push(i);
            for &j in g.neighbors(i) {
                if !visited[j] && g.component(j) == comp && growing_cost(g, i, j, p) < delta {
                    visited[j] = true;
                    queue.push_back(j);
                }
            }
        }

        if members.len() as f64 / n as f64 >= p.eta {
            let id = regions.len();
            for &m in &members {
                label[m] = id;
            }
            if p.swallowing {
                let spheres = {
                    let mut ids: Vec<usize> = members.iter().flat_map(|&m| g.node_spheres(m)).collect();
                    ids.sort_unstable();
                    ids.dedup();
                    ids.into_iter().map(|s| g.sphere(s)).collect()
                };
                let index = SphereIndex::new(spheres);
                for k in 0..n {
                    let open = !visited[k] || negligible_group[k] != UNSET;
                    if open && label[k] == UNSET && swallows(g, &index, k, p.swallow_rule) {
                        visited[k] = true;
                        negligible_group[k] = UNSET;
                        label[k] = id;
                        members.push(k);
                        swallowed += 1;
                    }
                }
            }
            members.sort_unstable();
            regions.push(Region { id, nodes: members, seed, component: comp });
        } else {
            for &m in &members {
                negligible_group[m] = groups.len();
            }
            groups.push(members);
        }
    }

    let negligible_merged = absorb_negligible(g, &mut regions, &mut label, &negligible_group, groups);
    GrowthResult { regions, labels: label, swallowed, negligible_merged }
}

/// Hands leftover negligible groups to the adjacent region sharing the most
/// graph edges with them, or to the nearest region when none is adjacent.
/// Returns the number of nodes reassigned.
fn absorb_negligible<G: GrowthGraph + ?Sized>(
    g: &G,
    regions: &mut Vec<Region>,
    label: &mut [usize],
    negligible_group: &[usize],
    groups: Vec<Vec<usize>>,
) -> usize {
    // Nodes may have been swallowed out of their group.
    let mut pending: Vec<Vec<usize>> = groups
        .into_iter()
        .enumerate()
        .map(|(gi, nodes)| nodes.into_iter().filter(|&v| negligible_group[v] == gi && label[v] == UNSET).collect())
        .filter(|nodes: &Vec<usize>| !nodes.is_empty())
        .collect();
    if pending.is_empty() {
        return 0;
    }
    if regions.is_empty() {
        // Nothing reached the minimal size: the largest group stands in.
        let (k, _) = pending.iter().enumerate().max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0))).unwrap();
        let mut nodes = pending.remove(k);
        nodes.sort_unstable();
        for &v in &nodes {
            label[v] = 0;
        }
        regions.push(Region { id: 0, seed: nodes[0], component: g.component(nodes[0]), nodes });
    }
    let mut moved = 0;
    while !pending.is_empty() {
        let mut progressed = false;
        let mut rest = Vec::new();
        for group in std::mem::take(&mut pending) {
            let mut links = vec![0usize; regions.len()];
            for &v in &group {
                for &w in g.neighbors(v) {
                    if label[w] != UNSET {
                        links[label[w]] += 1;
                    }
                }
            }
            let best = links.iter().enumerate().filter(|(_, &c)| c > 0).max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)));
            match best {
                Some((r, _)) => {
                    assign(regions, label, r, &group);
                    moved += group.len();
                    progressed = true;
                }
                None => rest.push(group),
            }
        }
        pending = rest;
        if !progressed {
            // Isolated from every region: attach the first group to the
            // region with the closest node.
            let group = pending.remove(0);
            let mut best = (f64::INFINITY, 0);
            for &v in &group {
                for (w, &l) in label.iter().enumerate() {
                    if l != UNSET {
                        let d = (g.centroid(v) - g.centroid(w)).norm();
                        if d < best.0 || (d == best.0 && l < best.1) {
                            best = (d, l);
                        }
                    }
                }
            }
            assign(regions, label, best.1, &group);
            moved += group.len();
        }
    }
    moved
}

fn assign(regions: &mut [Region], label: &mut [usize], r: usize, nodes: &[usize]) {
    for &v in nodes {
        label[v] = r;
    }
    regions[r].nodes.extend_from_slice(nodes);
    regions[r].nodes.sort_unstable();
}
