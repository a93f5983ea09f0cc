//! Merging of adjacent regions whose radius distributions match, compared
//! with the 1-D Earth Mover's Distance.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::region_growing::{GrowthGraph, Region};

pub const DEFAULT_BINS: usize = 32;
pub const DEFAULT_TAU: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusHistogram {
    pub bins: Vec<f64>,
    pub range: (f64, f64),
}

/// Bin of `r` in `bins` uniform bins over `[lo, hi]`; everything falls in
/// bin 0 for a degenerate range.
pub fn bin_of(r: f64, lo: f64, hi: f64, bins: usize) -> usize {
    if !(hi > lo) {
        return 0;
    }
    let k = ((r - lo) / (hi - lo) * bins as f64).floor();
    (k.max(0.0) as usize).min(bins - 1)
}

impl RadiusHistogram {
    pub fn from_radii(radii: &[f64], range: (f64, f64), bins: usize) -> Self {
        let mut h = vec![0.0; bins];
        for &r in radii {
            h[bin_of(r, range.0, range.1, bins)] += 1.0;
        }
        let total = radii.len().max(1) as f64;
        h.iter_mut().for_each(|m| *m /= total);
        Self { bins: h, range }
    }

    /// Histogram of the nodes' mean radii over the shape-wide range.
    pub fn of_nodes<G: GrowthGraph + ?Sized>(g: &G, nodes: &[usize], range: (f64, f64), bins: usize) -> Self {
        let radii: Vec<f64> = nodes.iter().map(|&i| g.mean_radius(i)).collect();
        Self::from_radii(&radii, range, bins)
    }
}

/// Range of node mean radii over the whole graph.
pub fn radius_range<G: GrowthGraph + ?Sized>(g: &G) -> (f64, f64) {
    (0..g.node_count())
        .map(|i| g.mean_radius(i))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

/// Closed-form EMD between equal-mass 1-D histograms, normalized to [0, 1].
pub fn emd_1d(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "histograms must share their binning");
    if a.len() < 2 {
        return 0.0;
    }
    let (mut ca, mut cb, mut sum) = (0.0, 0.0, 0.0);
    for k in 0..a.len() {
        ca += a[k];
        cb += b[k];
        sum += (ca - cb).abs();
    }
    sum / (a.len() - 1) as f64
}

/// Greedily merges the adjacent pair of lowest EMD below `tau` until none
/// is left. Merged regions keep the lower id; ids are compacted at the end,
/// preserving order.
pub fn merge_matching<G: GrowthGraph + ?Sized>(g: &G, regions: &[Region], tau: f64, bins: usize) -> Vec<Region> {
    let n = g.node_count();
    let mut label = vec![usize::MAX; n];
    let mut live: Vec<Option<Region>> = regions.iter().cloned().map(Some).collect();
    for r in regions {
        for &v in &r.nodes {
            label[v] = r.id;
        }
    }
    let range = radius_range(g);
    let mut hist: Vec<Option<RadiusHistogram>> =
        regions.iter().map(|r| Some(RadiusHistogram::of_nodes(g, &r.nodes, range, bins))).collect();

    loop {
        let mut pairs = BTreeSet::new();
        for v in 0..n {
            for &w in g.neighbors(v) {
                let (a, b) = (label[v], label[w]);
                if a != b && a != usize::MAX && b != usize::MAX {
                    pairs.insert((a.min(b), a.max(b)));
                }
            }
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for (a, b) in pairs {
            let d = emd_1d(&hist[a].as_ref().unwrap().bins, &hist[b].as_ref().unwrap().bins);
            if d < tau && best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, a, b));
            }
        }
        let Some((_, a, b)) = best else { break };
        let rb = live[b].take().unwrap();
        hist[b] = None;
        let ra = live[a].as_mut().unwrap();
        for &v in &rb.nodes {
            label[v] = a;
        }
        ra.nodes.extend(rb.nodes);
        ra.nodes.sort_unstable();
        hist[a] = Some(RadiusHistogram::of_nodes(g, &ra.nodes, range, bins));
    }

    live.into_iter()
        .flatten()
        .enumerate()
        .map(|(id, mut r)| {
            r.id = id;
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emd_extremes() {
        let mut a = vec![0.0; 32];
        let mut b = vec![0.0; 32];
        a[0] = 1.0;
        b[31] = 1.0;
        assert_eq!(emd_1d(&a, &b), 1.0);
        assert_eq!(emd_1d(&a, &a), 0.0);
        assert_eq!(emd_1d(&a, &b), emd_1d(&b, &a));
    }

    #[test]
    fn histogram_binning() {
        let h = RadiusHistogram::from_radii(&[2.0, 2.0, 2.0], (2.0, 2.0), 32);
        assert_eq!(h.bins[0], 1.0);
        let h = RadiusHistogram::from_radii(&[0.0, 1.0], (0.0, 1.0), 4);
        assert_eq!(h.bins, vec![0.5, 0.0, 0.0, 0.5]);
    }
}
