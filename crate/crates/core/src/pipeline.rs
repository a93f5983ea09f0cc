//! The full segmentation pipeline: structured MAT, structural decomposition,
//! region growing, merging and transfer to the surface.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Sphere;
use crate::mat_graph::{build_graph, GraphError, MatGraph};
use crate::mesh::{MedialMesh, SurfaceMesh};
use crate::part_merging::{merge_matching, DEFAULT_BINS, DEFAULT_TAU};
use crate::region_growing::{grow, GrowingParams, GrowthResult, Region};
use crate::simplify::{simplify, SimplifyError, SimplifyParams};
use crate::structural::{
    assign_base_nodes, detect_joints, split_components, ComponentKind, Joint, StructuralComponent,
};
use crate::transfer::{direct_labels, optimize_labels, TransferError, TransferParams, TransferResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("medial mesh: {0}")]
    Graph(#[from] GraphError),
    #[error("simplification: {0}")]
    Simplify(#[from] SimplifyError),
    #[error("transfer: {0}")]
    Transfer(#[from] TransferError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub growing: GrowingParams,
    pub simplify: SimplifyParams,
    pub transfer: TransferParams,
    pub merge_tau: f64,
    pub merging: bool,
    pub graph_cut: bool,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            growing: GrowingParams::default(),
            simplify: SimplifyParams::default(),
            transfer: TransferParams::default(),
            merge_tau: DEFAULT_TAU,
            merging: true,
            graph_cut: true,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.growing.validate().map_err(PipelineError::InvalidParams)?;
        self.simplify.validate()?;
        self.transfer.validate()?;
        if !(self.merge_tau > 0.0 && self.merge_tau < 1.0) {
            return Err(PipelineError::InvalidParams(format!("merge_tau must lie in (0, 1), got {}", self.merge_tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct MatSegmentation {
    pub graph: MatGraph,
    pub structured: MedialMesh,
    /// Whether `structured` was computed here rather than supplied.
    pub simplified: bool,
    pub joints: Vec<Joint>,
    pub components: Vec<StructuralComponent>,
    /// Thinness used for the threshold of each component.
    pub rho: Vec<f64>,
    pub grown: GrowthResult,
    pub regions: Vec<Region>,
    /// Final region of every graph node.
    pub node_labels: Vec<usize>,
    pub timings: Vec<StageTiming>,
}

impl MatSegmentation {
    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    /// Medial spheres of every final region.
    pub fn segments(&self) -> Vec<Vec<Sphere>> {
        self.regions
            .iter()
            .map(|r| {
                let mut ids: Vec<usize> = r.nodes.iter().flat_map(|&n| self.graph.nodes[n].vertices.clone()).collect();
                ids.sort_unstable();
                ids.dedup();
                ids.into_iter().map(|v| self.graph.spheres[v]).collect()
            })
            .collect()
    }
}

fn timed<T>(timings: &mut Vec<StageTiming>, stage: &'static str, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    timings.push(StageTiming { stage, seconds: t.elapsed().as_secs_f64() });
    out
}

/// Segments the MAT graph of `base`. `structured` is produced from `base`
/// by simplification when not supplied.
pub fn segment_mat(
    base: &MedialMesh,
    structured: Option<&MedialMesh>,
    p: &PipelineParams,
) -> Result<MatSegmentation, PipelineError> {
    p.validate()?;
    let mut timings = Vec::new();
    let mut graph = timed(&mut timings, "graph", || build_graph(base))?;
    let (smat, simplified) = match structured {
        Some(s) => (s.clone(), false),
        None => (timed(&mut timings, "simplify", || simplify(base, &p.simplify))?, true),
    };

    let (joints, mut components) = timed(&mut timings, "structure", || {
        let joints = detect_joints(&smat);
        let comps = split_components(&smat, &joints);
        (joints, comps)
    });
    if components.is_empty() {
        // A structured MAT without elements: everything is one component
        // with the base threshold.
        components.push(StructuralComponent {
            kind: ComponentKind::Curve,
            edges: vec![],
            faces: vec![],
            extent: 0.0,
            max_radius: 0.0,
            thinness: 1.0,
            member_nodes: (0..graph.len()).collect(),
        });
        graph.component_id = Some(vec![0; graph.len()]);
    } else {
        timed(&mut timings, "assign", || assign_base_nodes(&mut graph, &smat, &mut components))
            .expect("components are non-empty");
    }
    let rho: Vec<f64> = components.iter().map(|c| c.thinness().unwrap_or(1.0)).collect();

    let grown = timed(&mut timings, "grow", || grow(&graph, &rho, &p.growing));
    let regions = if p.merging {
        timed(&mut timings, "merge", || merge_matching(&graph, &grown.regions, p.merge_tau, DEFAULT_BINS))
    } else {
        grown.regions.clone()
    };
    let mut node_labels = vec![0; graph.len()];
    for r in &regions {
        for &v in &r.nodes {
            node_labels[v] = r.id;
        }
    }
    graph.region_id = Some(node_labels.clone());
    Ok(MatSegmentation {
        graph,
        structured: smat,
        simplified,
        joints,
        components,
        rho,
        grown,
        regions,
        node_labels,
        timings,
    })
}

#[derive(Debug, Clone)]
pub struct ShapeSegmentation {
    pub mat: MatSegmentation,
    pub face_labels: Vec<usize>,
    /// Present when the graph-cut stage ran.
    pub transfer: Option<TransferResult>,
    pub timings: Vec<StageTiming>,
}

/// Runs the whole pipeline and labels every surface face with a region id.
pub fn segment_shape(
    mesh: &SurfaceMesh,
    base: &MedialMesh,
    structured: Option<&MedialMesh>,
    p: &PipelineParams,
) -> Result<ShapeSegmentation, PipelineError> {
    let mat = segment_mat(base, structured, p)?;
    let mut timings = mat.timings.clone();
    let segments = mat.segments();
    let (face_labels, transfer) = if p.graph_cut {
        let r = timed(&mut timings, "transfer", || optimize_labels(mesh, &segments, &p.transfer))?;
        (r.labels.clone(), Some(r))
    } else {
        (timed(&mut timings, "transfer", || direct_labels(mesh, &segments))?, None)
    };
    Ok(ShapeSegmentation { mat, face_labels, transfer, timings })
}
