//! Occupancy mapping: the sparse keyframe / Delaunay / graph-cut pipeline
//! and the log-odds baseline fed with dense range scans.

mod delaunay;
mod graphcut;
mod grid;
mod gridfile;
mod keyframes;
mod maxflow;
mod predicates;
mod raster;
mod scan;
mod scene;

use std::time::Instant;

pub use delaunay::{dedupe, tetrahedralize, Delaunay, Label, TetMesh, INFINITE, MERGE_RADIUS};
pub use graphcut::{build_problem, label_and_extract, CutProblem, CutWeights, Reconstruction, SurfaceMesh};
pub use grid::{LogOddsParams, OccupancyGrid, VoxelState};
pub use gridfile::{grid_from_text, grid_to_text, read_grid, write_grid};
pub use keyframes::{select_keyframes, Keyframe, KeyframeThresholds};
pub use maxflow::FlowGraph;
pub use predicates::{insphere, orient};
pub use raster::{rasterize, rasterize_into, triangle_box_overlap};
pub use scan::{integrate_scan, traverse};
pub use scene::{camera_orientation, Landmark, RoomConfig, RoomScene};

use crate::error::Result;
use crate::{Pose, Vec3};

/// Output of the sparse pipeline.
#[derive(Clone, Debug)]
pub struct SparseMap {
    pub grid: OccupancyGrid,
    pub mesh: TetMesh,
    pub reconstruction: Reconstruction,
    /// Wall-clock time of triangulation, labeling and rasterization, s.
    pub seconds: f64,
}

/// Triangulates all keyframe points, labels the cells and rasterizes the
/// result onto a copy of `frame`.
pub fn sparse_pipeline(keyframes: &[Keyframe], weights: &CutWeights, frame: &OccupancyGrid) -> Result<SparseMap> {
    let start = Instant::now();
    let points: Vec<Vec3> = keyframes.iter().flat_map(|k| k.points.iter().copied()).collect();
    let mut mesh = tetrahedralize(&points)?;
    let reconstruction = label_and_extract(&mut mesh, keyframes, weights)?;
    let mut grid = frame.clone();
    rasterize_into(&mesh, &reconstruction.surface, &mut grid)?;
    Ok(SparseMap {
        grid,
        mesh,
        reconstruction,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Integrates range scans into a fresh copy of `frame`. Returns the grid
/// and the wall-clock time spent, s.
pub fn dense_baseline(scans: &[(Pose, Vec<Vec3>)], frame: &OccupancyGrid) -> Result<(OccupancyGrid, f64)> {
    let start = Instant::now();
    let mut grid = frame.clone();
    grid.fill(VoxelState::Unknown);
    for (pose, hits) in scans {
        integrate_scan(&mut grid, pose, hits)?;
    }
    Ok((grid, start.elapsed().as_secs_f64()))
}
