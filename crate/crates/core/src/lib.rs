//! Part segmentation of 3D shapes driven by their medial axis transform.

pub mod abstraction;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod mat_graph;
pub mod maxflow;
pub mod mesh;
pub mod metrics;
pub mod part_merging;
pub mod pipeline;
pub mod region_growing;
pub mod simplify;
pub mod skeleton;
pub mod structural;
pub mod transfer;
